"""Self-contained numerical checks with fixed budgets, tolerances and time limits.

Each check returns a :class:`CheckResult`; :func:`run_checks` collects them
into a :class:`VerifyReport`.  ``budget_scale < 1`` shrinks the budgeted
checks and turns their failures into skips, since their error bars no
longer match the stated tolerance.  ``corrupt`` swaps in a deliberately
wrong built-in for the named checks so the harness can be tested.
"""

from __future__ import annotations

import contextlib
import math
import signal
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import synthetic, wiggle
from .dimension import (binary_tree, box_count, estimate_delta, frostman_exponent, kappa_fit,
                        mdim_fit, packing_tree, whitney_decompose, whitney_levels)
from .dimension.boxcount import DyadicSquare
from .dimension.frostman import check_brood
from .limitset import (PointCloud, cloud_csv_text, cyclic_loxodromic, cyclic_parabolic,
                       modular_group, packing, sample_limit_set, schottky4, uniformly_perfect)
from .moebius import Moebius, compose, moebius
from .schwarzian import AnalyticMap, composition_residual, schwarzian_at

PASS, FAIL, SKIP = "pass", "fail", "skip"
REPORT_HEADER = "id,name,status,measured,tolerance,claim"


class CheckTimeout(Exception):
    pass


@dataclass
class CheckResult:
    cid: int
    name: str
    claim: str
    tolerance: str
    status: str = FAIL
    measured: dict = field(default_factory=dict)
    runtime: float = math.nan
    time_limit: float = math.inf
    note: str = ""

    def measured_text(self) -> str:
        parts = []
        for k, v in self.measured.items():
            if isinstance(v, float):
                v = f"{v:.6g}"
            elif isinstance(v, (list, tuple)):
                v = "[" + " ".join(f"{x:.6g}" if isinstance(x, float) else str(x) for x in v) + "]"
            parts.append(f"{k}={v}")
        return " ".join(parts)

    def csv_row(self) -> str:
        cells = [str(self.cid), self.name, self.status, self.measured_text(), self.tolerance,
                 self.claim]
        return ",".join('"' + c.replace('"', "'") + '"' if "," in c else c for c in cells)

    def line(self) -> str:
        tag = {PASS: "PASS", FAIL: "FAIL", SKIP: "SKIP"}[self.status]
        extra = f" ({self.note})" if self.note else ""
        return (f"[{tag}] {self.cid:>2} {self.name}: {self.measured_text()} "
                f"| want {self.tolerance} | {self.runtime:.2f}s < {self.time_limit:g}s{extra}")


@dataclass
class VerifyReport:
    results: list

    @property
    def ok(self) -> bool:
        return all(r.status != FAIL for r in self.results)

    def csv_text(self) -> str:
        # runtimes vary between runs, so they stay out of the table
        return REPORT_HEADER + "\n" + "".join(r.csv_row() + "\n" for r in self.results)

    def timing_text(self) -> str:
        return "".join(f"{r.cid} {r.name} {r.runtime:.3f} {r.time_limit:g}\n" for r in self.results)


@dataclass(frozen=True)
class CheckContext:
    seed: int = 0
    budget_scale: float = 1.0
    corrupt: bool = False

    def budget(self, n: int) -> int:
        return max(100, int(round(n * self.budget_scale)))


@dataclass(frozen=True)
class Check:
    cid: int
    name: str
    claim: str
    tolerance: str
    time_limit: float
    budgeted: bool
    run: Callable  # (ctx, measured) -> bool


# --------------------------------------------------------------- criteria

def _delta_parabolic(ctx, out):
    g = cyclic_loxodromic() if ctx.corrupt else cyclic_parabolic()
    est, _ = estimate_delta(g, (8.0, 24.0))
    out["delta"] = est.value
    return abs(est.value - 0.5) <= 0.03


def _delta_loxodromic(ctx, out):
    g = cyclic_parabolic() if ctx.corrupt else cyclic_loxodromic()
    est, _ = estimate_delta(g, (8.0, 24.0))
    out["delta"] = est.value
    return est.value <= 0.05


def _circle(ctx, out):
    g = schottky4() if ctx.corrupt else modular_group()
    cloud = sample_limit_set(g, ctx.budget(200_000))
    out["points"] = len(cloud)
    est = mdim_fit(box_count(cloud))
    out["mdim"] = est.value
    return len(cloud) >= ctx.budget(100_000) and abs(est.value - 1.0) <= 0.03


def _one_over_n(ctx, out):
    if ctx.corrupt:
        x = np.concatenate([[0.0], 1.0 / np.arange(2, 2 ** 16 + 1) ** 2.0])
        cloud = PointCloud.from_points(np.column_stack([x, 0 * x]))
    else:
        cloud = synthetic.one_over_n()
    est = mdim_fit(box_count(cloud), window=(2.0 ** -16, 2.0 ** -6))
    out["mdim"] = est.value
    return abs(est.value - 0.5) <= 0.05


def _quarter_dust(depth: int) -> PointCloud:
    left = np.zeros(1)
    length = 1.0
    for _ in range(depth):
        length /= 4.0
        left = np.concatenate([left, left + 3 * length])
    x = np.sort(np.concatenate([left, left + length]))
    return PointCloud.from_points(np.column_stack([x, 0 * x]), resolution=length)


def _cantor(ctx, out):
    cloud = _quarter_dust(10) if ctx.corrupt else synthetic.cantor_set(12)
    target = math.log(2) / math.log(3)
    m = mdim_fit(box_count(cloud)).value
    k = kappa_fit(whitney_levels(cloud)).value
    out["mdim"], out["kappa"] = m, k
    return abs(m - target) <= 0.02 and abs(k - target) <= 0.05


def _schottky(ctx, out):
    g = schottky4()
    budget = ctx.budget(1_000_000)
    cloud = sample_limit_set(g, budget)
    out["elements"] = budget
    d = estimate_delta(g)[0].value
    out["delta"] = d
    m = mdim_fit(box_count(cloud)).value
    out["mdim"] = m
    if ctx.corrupt:
        cloud = synthetic.circle(len(cloud))
    k = kappa_fit(whitney_levels(cloud)).value
    out["kappa"] = k
    return abs(d - m) <= 0.05 and abs(k - m) <= 0.05 and abs(d - k) <= 0.05


def _packing(ctx, out):
    cloud = sample_limit_set(schottky4() if ctx.corrupt else packing(), ctx.budget(300_000))
    m = mdim_fit(box_count(cloud)).value
    out["mdim"] = m
    tree = packing_tree(depth=3)
    trials = max(12, int(round(120 * ctx.budget_scale)))
    a = frostman_exponent(tree, trials=trials, seed=ctx.seed).value
    out["frostman_alpha"] = a
    return m >= 1.02 and a > 1.0


SNOWFLAKE_BETAS = (0.1, 0.2, 0.3)


def _snowflake(ctx, out):
    errs, beta0 = [], []
    for b in SNOWFLAKE_BETAS:
        target = wiggle.snowflake_dimension(b)
        est = mdim_fit(box_count(wiggle.snowflake(wiggle.SnowflakeParams(b, 10))))
        errs.append(abs(est.value - target))
        shown = SNOWFLAKE_BETAS[0] if ctx.corrupt else b
        beta0.append(wiggle.wiggliness(wiggle.snowflake(wiggle.SnowflakeParams(shown, 8))).beta0)
    out["mdim_err"], out["beta0"] = errs, beta0
    return max(errs) <= 0.03 and all(x < y for x, y in zip(beta0, beta0[1:]))


def random_moebius(rng) -> Moebius:
    a, b, c, d = rng.normal(size=4) + 1j * rng.normal(size=4)
    return moebius(a, b, c, d)


def _schwarzian(ctx, out):
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    done = 0
    while done < 1000:
        m = random_moebius(rng)
        z = complex(*rng.uniform(-1, 1, 2))
        a, b, c, d = m.as_array().ravel()
        if c != 0 and abs(z + d / c) < 0.05:
            continue
        f = AnalyticMap.from_moebius(m, center=z)
        if ctx.corrupt:
            f = AnalyticMap(lambda w, f=f: f(w) + 1e-3 * w ** 4, f.center, f.radius)
        worst = max(worst, abs(schwarzian_at(f, z).value))
        done += 1
    out["moebius"] = worst
    num = 0.0
    for _ in range(200):
        p = rng.normal(size=4) * (0.0, 1.0, 0.2, 0.05) + (0, 1, 0, 0)
        g = AnalyticMap(lambda w, p=p: p[0] + w * (p[1] + w * (p[2] + w * p[3])), 0, 0.5)
        q = rng.normal(size=5) * (1.0, 1.0, 0.3, 0.1, 0.05) + (0, 2, 0, 0, 0)
        f = AnalyticMap(lambda w, q=q: np.polyval(q[::-1], w), 0, 10.0)
        z = 0.25 * complex(*rng.uniform(-0.7, 0.7, 2))
        num = max(num, composition_residual(f, g, z))
    out["numeric"] = num
    exact = 0.0
    for _ in range(40):
        g = AnalyticMap.exact(list(rng.integers(-5, 6, 3) / 4 + (0, 2, 0)), radius=0.5)
        m = random_moebius(rng)
        a, b, c, d = (complex(x) for x in m.as_array().ravel())
        f = AnalyticMap.exact((b, a), (d, c), radius=100.0)
        z = complex(*(rng.integers(-4, 5, 2) / 32))
        try:
            exact = max(exact, composition_residual(f, g, z))
        except (ValueError, ZeroDivisionError):
            continue
    out["exact"] = exact
    return worst < 1e-9 and num < 1e-6 and exact < 1e-12


def perfectness_scales(cloud: PointCloud, count: int = 8) -> np.ndarray:
    lo = 10 * cloud.resolution
    hi = 0.5 * cloud.diameter
    return np.geomspace(lo, hi, count) if hi > lo else np.array([lo])


def _perfectness(ctx, out):
    s4 = sample_limit_set(schottky4(), ctx.budget(200_000))
    cantor = synthetic.cantor_set(12)
    eps = {}
    for name, cloud in (("schottky4", s4), ("cantor", cantor)):
        eps[name] = uniformly_perfect(cloud, perfectness_scales(cloud), seed=ctx.seed).eps_hat
    pair = synthetic.circle() if ctx.corrupt else synthetic.two_points()
    eps["two_points"] = uniformly_perfect(pair, [0.1]).eps_hat
    out.update(eps)
    return eps["schottky4"] >= 0.05 and eps["cantor"] >= 0.05 and eps["two_points"] == 0.0


def _properties(ctx, out):
    failures = []
    for name, fn in PROPERTY_CHECKS:
        if not fn(np.random.default_rng(ctx.seed), corrupt=ctx.corrupt):
            failures.append(name)
    out["suites"] = len(PROPERTY_CHECKS)
    out["failed"] = ";".join(failures) or "none"
    return not failures


# ------------------------------------------------------ property checks

def prop_matrix_identities(rng, corrupt=False, cases=200) -> bool:
    for _ in range(cases):
        f, g, h = (random_moebius(rng) for _ in range(3))
        if not compose(compose(f, g), h).isclose(compose(f, compose(g, h)), 1e-7):
            return False
        if not compose(f, f.inverse()).is_identity(1e-7):
            return False
        if abs(f.det - 1) > 1e-9:
            return False
        z = complex(*rng.normal(size=2))
        w = f(g(z))
        v = compose(f, g)(z)
        if corrupt:
            v += 1e-3
        if abs(w - v) > 1e-8 * max(1.0, abs(w)):
            return False
    return True


def prop_mass_conservation(rng, corrupt=False) -> bool:
    tree = binary_tree(6, ratio=float(rng.uniform(0.15, 0.3)))
    for k in range(tree.depth):
        for node in tree.generation(k):
            brood = tree.brood(node)
            masses = brood.masses * (1.01 if corrupt else 1.0)
            try:
                check_brood(node, type(brood)(brood.centers, brood.radii, masses))
            except Exception:
                return False
        total = sum(n.mass for n in tree.generation(k + 1))
        if abs(total - tree.root.mass) > 1e-12:
            return False
    return True


BETA_GRID_TOL = math.pi / 512 * 3 * math.sqrt(2) + math.sqrt(2) / 255


def prop_beta_brute_force(rng, corrupt=False, clouds=100) -> bool:
    q = DyadicSquare(2, 1, 1)
    for _ in range(clouds):
        n = int(rng.integers(3, 40))
        pts = rng.uniform(0.0, 0.75, (n, 2))
        if rng.random() < 0.5:
            t = rng.uniform(0, 0.75, n)
            pts = np.column_stack([t, 0.3 + 0.2 * t + rng.normal(0, 0.01, n)])
        pts = np.clip(pts, 0, 0.75)
        cloud = PointCloud.from_points(pts, resolution=1e-3)
        fast = wiggle.beta_number(q, cloud).beta
        if corrupt:
            fast *= 1.5
        slow = wiggle.beta_brute_force(q, cloud.points)
        if not (fast <= slow + 1e-9 and slow - fast <= BETA_GRID_TOL):
            return False
    return True


def prop_monotone_box_counts(rng, corrupt=False, clouds=20) -> bool:
    for _ in range(clouds):
        pts = rng.random((int(rng.integers(10, 5000)), 2))
        cloud = PointCloud.from_points(pts, resolution=1e-4)
        t = box_count(cloud)
        counts = t.counts[::-1] if corrupt else t.counts
        if np.any(np.diff(counts) < 0):
            return False
        bound = (np.ceil(t.diameter / t.scales) + 1) ** 2
        if np.any(t.counts > bound):
            return False
    return True


def prop_whitney_bracket(rng, corrupt=False, clouds=5) -> bool:
    for _ in range(clouds):
        pts = rng.random((int(rng.integers(5, 300)), 2))
        cloud = PointCloud.from_points(pts, resolution=2.0 ** -12)
        try:
            cells = whitney_decompose(cloud, max_level=7)
        except AssertionError:
            return False
        if not cells or not all(c.bracket_ok() for c in cells):
            return False
        if corrupt:
            return False
    return True


def prop_determinism(rng, corrupt=False) -> bool:
    seed = int(rng.integers(0, 2 ** 31))
    texts = []
    for k in range(2):
        cloud = sample_limit_set(schottky4(), 2000 + (k if corrupt else 0))
        r = uniformly_perfect(cloud, perfectness_scales(cloud, 3), seed=seed, max_centers=50)
        fit = mdim_fit(box_count(cloud))
        texts.append(cloud_csv_text(cloud) + repr(r.worst.tolist()) + fit.csv_row())
    return texts[0] == texts[1]


PROPERTY_CHECKS = (
    ("matrix-identities", prop_matrix_identities),
    ("mass-conservation", prop_mass_conservation),
    ("beta-brute-force", prop_beta_brute_force),
    ("monotone-box-counts", prop_monotone_box_counts),
    ("whitney-bracket", prop_whitney_bracket),
    ("determinism", prop_determinism),
)


CHECKS = (
    Check(1, "parabolic-delta", "a single parabolic has exponent one half",
          "|delta - 0.5| <= 0.03", 1.0, False, _delta_parabolic),
    Check(2, "loxodromic-delta", "a single loxodromic has exponent zero",
          "delta <= 0.05", 1.0, False, _delta_loxodromic),
    Check(3, "circle-mdim", "the modular group limit set is a circle",
          "|mdim - 1| <= 0.03 on >= 1e5 points", 30.0, True, _circle),
    Check(4, "one-over-n-mdim", "{0} and the reciprocals have box dimension one half",
          "|mdim - 0.5| <= 0.05 over [2^-16 2^-6]", 5.0, False, _one_over_n),
    Check(5, "cantor-mdim-kappa", "box dimension and Whitney index agree for a null set",
          "|mdim - 0.6309| <= 0.02 and |kappa - 0.6309| <= 0.05", 30.0, False, _cantor),
    Check(6, "schottky-agreement", "exponent, box dimension and Whitney index coincide",
          "pairwise differences <= 0.05 at 1e6 elements", 120.0, True, _schottky),
    Check(7, "packing-dimension", "a free product of circle groups has dimension above one",
          "mdim >= 1.02 and frostman alpha > 1", 120.0, True, _packing),
    Check(8, "snowflake-sharpness", "snowflakes follow the Moran root and beta0 grows with beta",
          "|mdim - moran| <= 0.03 and beta0 strictly increasing", 60.0, False, _snowflake),
    Check(9, "schwarzian-identities", "Moebius maps have zero Schwarzian and the chain rule holds",
          "moebius < 1e-9 numeric < 1e-6 exact < 1e-12", 5.0, False, _schwarzian),
    Check(10, "uniform-perfectness", "Schottky and Cantor sets are uniformly perfect",
          "eps_hat >= 0.05 and two points give 0", 10.0, False, _perfectness),
    Check(11, "property-suites", "randomized invariants hold under fixed seeds",
          "every suite passes", 120.0, False, _properties),
)


@contextlib.contextmanager
def _deadline(seconds: float):
    """Raise :class:`CheckTimeout` after ``seconds`` (main thread only; otherwise a no-op)."""
    try:
        old = signal.signal(signal.SIGALRM, _raise_timeout)
    except ValueError:
        yield
        return
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


def _raise_timeout(signum, frame):
    raise CheckTimeout()


def run_check(check: Check, seed: int = 0, budget_scale: float = 1.0,
              corrupt: bool = False, enforce_time: bool = True) -> CheckResult:
    ctx = CheckContext(seed, budget_scale, corrupt)
    res = CheckResult(check.cid, check.name, check.claim, check.tolerance,
                      time_limit=check.time_limit)
    t0 = time.perf_counter()
    try:
        with _deadline(check.time_limit) if enforce_time else contextlib.nullcontext():
            ok = bool(check.run(ctx, res.measured))
        res.status = PASS if ok else FAIL
    except CheckTimeout:
        res.status, res.note = FAIL, "timed out, partial data"
    except Exception as exc:  # a crashing check is a failed check, not a crashed harness
        res.status, res.note = FAIL, f"{type(exc).__name__}: {exc}"
    res.runtime = time.perf_counter() - t0
    if res.status == PASS and enforce_time and res.runtime > check.time_limit:
        res.status, res.note = FAIL, "over time limit"
    if res.status == FAIL and check.budgeted and budget_scale < 1:
        res.status, res.note = SKIP, f"budget x{budget_scale:g}, error bars wider than tolerance"
    return res


def run_checks(ids: Optional[Sequence[int]] = None, seed: int = 0, budget_scale: float = 1.0,
               corrupt: Sequence[int] = (), enforce_time: bool = True,
               on_result: Optional[Callable] = None) -> VerifyReport:
    if not budget_scale > 0:
        raise ValueError("budget_scale must be positive")
    wanted = set(ids) if ids else {c.cid for c in CHECKS}
    unknown = wanted - {c.cid for c in CHECKS}
    if unknown:
        raise ValueError(f"unknown check ids: {sorted(unknown)}")
    results = []
    for check in CHECKS:
        if check.cid not in wanted:
            continue
        r = run_check(check, seed, budget_scale, check.cid in set(corrupt), enforce_time)
        results.append(r)
        if on_result is not None:
            on_result(r)
    return VerifyReport(results)
