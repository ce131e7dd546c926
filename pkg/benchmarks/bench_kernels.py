"""Time the compiled kernels against the numpy fallback on identical inputs.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with both timings, the speedup, and whether the
two backends agree on the result.
"""

import argparse
import timeit

import numpy as np

from kleindim import _backend
from kleindim.dimension.frostman import conflict_graph
from kleindim.limitset import schottky4


def _cases(rng):
    g = schottky4()
    gens, inverse = g.symmetric_generators()
    gens = np.ascontiguousarray(gens.reshape(-1, 4))
    pts = np.ascontiguousarray(rng.normal(size=(200_000, 2)))
    small = np.ascontiguousarray(rng.random((2_000, 2)))
    centers = rng.random(20_000) + 1j * rng.random(20_000)
    radii = rng.uniform(1e-4, 3e-3, 20_000)
    indptr, indices = conflict_graph(centers, radii)
    order = np.argsort(-radii, kind="stable")
    return {
        "enumerate_free": (lambda k: k.enumerate_free(gens, inverse, 200, 28.0, 400_000),
                           lambda a, b: np.allclose(a[0], b[0]) and np.array_equal(a[3], b[3])),
        "convex_hull": (lambda k: k.convex_hull(pts), np.allclose),
        "min_width": (lambda k: k.min_width(small), lambda a, b: abs(a[0] - b[0]) < 1e-12),
        "diameter": (lambda k: k.diameter(pts), lambda a, b: abs(a - b) < 1e-12),
        "greedy_select": (lambda k: k.greedy_select(order, indptr, indices), np.array_equal),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    compiled, fallback = _backend.get("cython"), _backend.get("python")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'cython s':>12}{'python s':>12}{'speedup':>10}  agree")
    for name, (call, same) in _cases(rng).items():
        tc = min(timeit.repeat(lambda: call(compiled), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: call(fallback), number=1, repeat=args.repeat))
        ok = same(call(compiled), call(fallback))
        print(f"{name:<16}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}  {ok}")


if __name__ == "__main__":
    main()
