"""Nested disk systems carrying a mass distribution, and Frostman-type checks.

A :class:`MassTree` is built lazily: the children of a node are computed
the first time something asks for them and cached.  This matters for the
circle-packing construction, where a node has tens of thousands of
children and only the nodes touched by the trial disks are ever realized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .. import _backend
from ..groups import GroupPresentation
from ..limitset import Disk, PackingConfiguration
from ..moebius import compose_rows, disk_image_rows
from .estimate import DimensionEstimate, Method, make_estimate

ROOM = 2.0  # children sit inside the concentric double of the parent
MAX_RATIO = 0.01
COVER = 2.0  # child diameters must add up to COVER parent diameters
SEPARATION = 2.0  # sibling disks scaled by this factor stay disjoint
FINE = 1.0 / 16  # mass queries stop refining nodes this much smaller than the query radius
STABILITY = 1.1
MASS_TOL = 1e-12
GEOM_TOL = 1e-12


class ConstructionError(RuntimeError):
    """A node broke one of the nesting rules; ``node`` is the offender."""

    def __init__(self, message: str, node: "MassNode" = None):
        super().__init__(message)
        self.node = node


@dataclass
class Brood:
    centers: np.ndarray
    radii: np.ndarray
    masses: np.ndarray
    kinds: Optional[np.ndarray] = None
    transforms: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.radii)


class MassNode:
    __slots__ = ("generation", "center", "radius", "mass", "kind", "transform", "path",
                 "_brood", "_kids")

    def __init__(self, generation, center, radius, mass, kind=0, transform=None, path=()):
        self.generation = int(generation)
        self.center = complex(center)
        self.radius = float(radius)
        self.mass = float(mass)
        self.kind = int(kind)
        self.transform = transform
        self.path = tuple(path)
        self._brood = None
        self._kids = {}

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def disk(self) -> Disk:
        return Disk(self.center, self.radius)

    def __repr__(self):
        return (f"MassNode(gen={self.generation}, center={self.center:.6g}, "
                f"radius={self.radius:.4g}, mass={self.mass:.4g}, path={self.path})")


def conflict_graph(centers: np.ndarray, radii: np.ndarray, factor: float = SEPARATION):
    """Pairs whose ``factor``-enlarged disks meet, listed from the larger disk.

    Returns ``(indptr, indices)``: the neighbours of ``i`` are the disks no
    larger than ``i`` (ties broken by index) that conflict with it.
    """
    n = len(radii)
    if n < 2:
        return np.zeros(n + 1, np.int64), np.zeros(0, np.int64)
    pts = np.column_stack([centers.real, centers.imag])
    tree = cKDTree(pts)
    # a smaller partner is within factor * (r_i + r_j) <= 2 factor r_i
    hits = tree.query_ball_point(pts, 2 * factor * radii * (1 + GEOM_TOL), return_sorted=False)
    lengths = np.fromiter((len(h) for h in hits), np.int64, n)
    dst = np.fromiter((j for h in hits for j in h), np.int64, int(lengths.sum()))
    src = np.repeat(np.arange(n), lengths)
    smaller = (radii[dst] < radii[src]) | ((radii[dst] == radii[src]) & (dst > src))
    close = np.abs(centers[src] - centers[dst]) < factor * (radii[src] + radii[dst])
    keep = smaller & close
    src, dst = src[keep], dst[keep]
    indptr = np.zeros(n + 1, np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, np.ascontiguousarray(dst)


def separated_subset(centers: np.ndarray, radii: np.ndarray,
                     factor: float = SEPARATION) -> np.ndarray:
    """Largest-first greedy choice of disks whose enlargements are pairwise disjoint."""
    indptr, indices = conflict_graph(centers, radii, factor)
    order = np.lexsort((np.arange(len(radii)), -radii)).astype(np.int64)
    return np.asarray(_backend.greedy_select(order, indptr, indices), dtype=bool)


class MassTree:
    """Nested disks down to generation ``depth`` with masses split by ``rule``.

    ``rule(node)`` returns ``(centers, radii, kinds, transforms)`` for the
    children of ``node`` (the last two may be ``None``).  Child masses are
    proportional to diameter.  Each brood is checked when it is created:
    children inside the doubled parent, enlarged siblings disjoint, masses
    adding up to the parent mass.
    """

    def __init__(self, root: MassNode, depth: int, rule: Callable, name: str = "",
                 params: Optional[dict] = None, max_ratio: float = 0.5):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        if not 0 < max_ratio < 1:
            raise ValueError("max_ratio must lie in (0, 1)")
        self.max_ratio = float(max_ratio)  # bound on child/parent radius, enforced per brood
        self.root = root
        self.depth = int(depth)
        self.rule = rule
        self.name = name
        self.params = dict(params or {})
        self.realized_delta = math.inf  # smallest child/parent diameter ratio seen
        self.realized_nmax = 0
        self.expansions = 0
        self._trial_cache = {}

    # ---------------------------------------------------------------- structure
    def brood(self, node: MassNode) -> Optional[Brood]:
        if node.generation >= self.depth:
            return None
        if node._brood is None:
            centers, radii, kinds, transforms = self.rule(node)
            centers = np.asarray(centers, complex)
            radii = np.asarray(radii, float)
            if len(radii) == 0:
                raise ConstructionError("node has no children", node)
            masses = node.mass * radii / radii.sum()
            b = Brood(centers, radii, masses,
                      None if kinds is None else np.asarray(kinds),
                      None if transforms is None else np.asarray(transforms))
            check_brood(node, b)
            if radii.max() > self.max_ratio * node.radius * (1 + GEOM_TOL):
                raise ConstructionError("a child exceeds the tree's size ratio bound", node)
            self.realized_delta = min(self.realized_delta, float(radii.min()) / node.radius)
            self.realized_nmax = max(self.realized_nmax, len(b))
            self.expansions += 1
            node._brood = b
        return node._brood

    def child(self, node: MassNode, i: int) -> MassNode:
        kid = node._kids.get(i)
        if kid is None:
            b = self.brood(node)
            kid = MassNode(node.generation + 1, b.centers[i], b.radii[i], b.masses[i],
                           kind=0 if b.kinds is None else int(b.kinds[i]),
                           transform=None if b.transforms is None else b.transforms[i],
                           path=node.path + (int(i),))
            node._kids[i] = kid
        return kid

    def children(self, node: MassNode) -> list:
        b = self.brood(node)
        return [] if b is None else [self.child(node, i) for i in range(len(b))]

    def generation(self, k: int) -> list:
        """Every node of generation ``k``; realizes the whole tree above it."""
        nodes = [self.root]
        for _ in range(min(k, self.depth)):
            nodes = [c for n in nodes for c in self.children(n)]
        return nodes if k <= self.depth else []

    def realized(self):
        """Nodes created so far, depth first."""
        stack = [self.root]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(n._kids[i] for i in sorted(n._kids, reverse=True))

    # ------------------------------------------------------------------ measure
    def sample_node(self, generation: int, rng: np.random.Generator) -> MassNode:
        """Random node of ``generation`` drawn with probability equal to its mass share."""
        node = self.root
        while node.generation < min(generation, self.depth):
            b = self.brood(node)
            p = b.masses / b.masses.sum()
            node = self.child(node, int(rng.choice(len(p), p=p)))
        return node

    def hull(self, node_radius, generation):
        """Radius about a node's centre that holds its whole subtree's mass."""
        if generation >= self.depth:
            return node_radius
        return node_radius * ROOM / (1.0 - self.max_ratio)

    def mass_in_disk(self, x: complex, r: float) -> float:
        """Mass of ``D(x, r)`` under the depth-truncated measure.

        That measure spreads each last-generation node's mass uniformly
        over its disk.  Nodes whose support crosses the boundary are
        refined until they are leaves or smaller than ``FINE * r``; those
        contribute the fraction of their support's area inside the query.
        """
        total = 0.0
        stack = [self.root]
        while stack:
            node = stack.pop()
            gap = abs(node.center - x)
            reach = self.hull(node.radius, node.generation)
            if gap >= r + reach:
                continue
            if gap + reach <= r:
                total += node.mass
                continue
            b = self.brood(node)
            if b is None or node.diameter < FINE * r:
                total += node.mass * _overlap_fraction(gap, r, reach)
                continue
            d = np.abs(b.centers - x)
            kid_reach = self.hull(b.radii, node.generation + 1)
            inside = d + kid_reach <= r
            total += float(b.masses[inside].sum())
            cross = ~inside & (d < r + kid_reach)
            whole = cross & ((node.generation + 1 >= self.depth) | (2 * b.radii < FINE * r))
            if whole.any():
                total += float((b.masses[whole]
                                * _overlap_fraction(d[whole], r, kid_reach[whole])).sum())
            stack.extend(self.child(node, int(i)) for i in np.flatnonzero(cross & ~whole))
        return total

    # ----------------------------------------------------------- serialization
    def to_text(self, max_generation: Optional[int] = None) -> str:
        """Indented listing of realized nodes: ``generation center radius mass``.

        ``max_generation`` limits the listing; the children of every listed
        node that has been expanded are included.
        """
        lines = [f"# depth {self.depth} name {self.name or '-'}"]
        top = self.depth if max_generation is None else int(max_generation)

        def emit(gen, c, r, m):
            c, r, m = complex(c), float(r), float(m)
            lines.append(f"{'  ' * gen}{gen} {c.real!r} {c.imag!r} {r!r} {m!r}")

        emit(0, self.root.center, self.root.radius, self.root.mass)
        self._emit_subtree(self.root, emit, top)
        return "\n".join(lines) + "\n"

    def _emit_subtree(self, node, emit, top):
        b = node._brood
        if b is None or node.generation >= top:
            return
        g = node.generation + 1
        # each child is followed by its own subtree so the indentation nests
        for i in range(len(b)):
            emit(g, b.centers[i], b.radii[i], b.masses[i])
            kid = node._kids.get(i)
            if kid is not None:
                self._emit_subtree(kid, emit, top)

    @classmethod
    def from_text(cls, text: str) -> "MassTree":
        """Explicit tree from :meth:`to_text` output; unexpanded nodes become leaves."""
        rows = []
        depth = None
        name = ""
        for line in text.splitlines():
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                parts = s[1:].split()
                if "depth" in parts:
                    depth = int(parts[parts.index("depth") + 1])
                if "name" in parts:
                    name = parts[parts.index("name") + 1]
                continue
            g, x, y, r, m = s.split()
            rows.append((int(g), complex(float(x), float(y)), float(r), float(m)))
        if not rows or rows[0][0] != 0:
            raise ValueError("listing must start with a generation-0 node")
        children = {}
        parents = [0]
        for k, (g, *_rest) in enumerate(rows[1:], 1):
            del parents[g:]
            if not parents:
                raise ValueError(f"line {k}: generation {g} has no parent")
            children.setdefault(parents[-1], []).append(k)
            parents.append(k)
        stored = {}
        for p, ks in children.items():
            stored[p] = (np.array([rows[k][1] for k in ks]), np.array([rows[k][2] for k in ks]),
                         np.array(ks))
        g0, c0, r0, m0 = rows[0]
        root = MassNode(0, c0, r0, m0, kind=0)

        def rule(node):
            c, r, ks = stored[node.kind]
            return c, r, ks, None

        ratio = max((rows[k][2] / rows[p][2] for p, ks in children.items() for k in ks),
                    default=0.5)
        tree = cls(root, depth if depth is not None else max(r[0] for r in rows), rule,
                   name=name if name != "-" else "", max_ratio=min(ratio * (1 + 1e-9), 0.999))
        # leaves in the listing have no stored children: cap the depth on the fly
        base_brood = tree.brood

        def brood(node):
            if node.kind not in stored:
                return None
            return base_brood(node)

        tree.brood = brood
        return tree


def _overlap_fraction(d, r, rad):
    """Share of the disk ``D(c, rad)`` lying in ``D(x, r)`` when ``|c - x| = d``."""
    d, rad = np.asarray(d, float), np.asarray(rad, float)
    with np.errstate(all="ignore"):
        a1 = np.arccos(np.clip((d * d + r * r - rad * rad) / (2 * d * r), -1, 1))
        a2 = np.arccos(np.clip((d * d + rad * rad - r * r) / (2 * d * rad), -1, 1))
        lens = (r * r * (a1 - np.sin(2 * a1) / 2) + rad * rad * (a2 - np.sin(2 * a2) / 2))
        frac = lens / (np.pi * rad * rad)
    frac = np.where(d + rad <= r, 1.0, np.where(d >= r + rad, 0.0, frac))
    frac = np.where(d + r <= rad, (r / rad) ** 2, frac)
    out = np.clip(frac, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def check_brood(parent: MassNode, b: Brood) -> None:
    """Nesting rules every brood must satisfy; raises :class:`ConstructionError`."""
    if np.any(~np.isfinite(b.radii)) or np.any(b.radii <= 0):
        raise ConstructionError("child radii must be positive and finite", parent)
    reach = np.abs(b.centers - parent.center) + b.radii
    if np.any(reach > ROOM * parent.radius * (1 + GEOM_TOL)):
        raise ConstructionError("a child leaves the doubled parent", parent)
    indptr, _ = conflict_graph(b.centers, b.radii)
    if indptr[-1] > 0:
        raise ConstructionError("enlarged siblings overlap", parent)
    if abs(b.masses.sum() - parent.mass) > MASS_TOL * max(1.0, abs(parent.mass)):
        raise ConstructionError("child masses do not add up to the parent mass", parent)


# ------------------------------------------------------------------ oracles

def binary_tree(depth: int, ratio: float = 0.25, radius: float = 1.0) -> MassTree:
    """Two children of radius ``ratio * r`` at ``+-0.6 r`` along alternating axes."""
    if not 0 < ratio < 0.3:
        raise ValueError("ratio must lie in (0, 0.3) for the children to separate")

    def rule(node):
        axis = 1.0 if node.generation % 2 == 0 else 1j
        off = 0.6 * node.radius * axis
        return (np.array([node.center - off, node.center + off]),
                np.full(2, ratio * node.radius), None, None)

    return MassTree(MassNode(0, 0.0, radius, 1.0), depth, rule, name="binary",
                    params={"ratio": ratio}, max_ratio=ratio)


# ---------------------------------------------------------- circle packing

@dataclass
class _Factor:
    rows: np.ndarray  # candidate elements g with g(other) a possible child
    own: Disk
    other: Disk
    words: int = 0


def _petal_targets(rows, petals, probe) -> np.ndarray:
    """Index of the pairing disk that each generator sends ``probe`` into."""
    out = np.empty(len(rows), np.int64)
    z = np.asarray([probe])
    for k, m in enumerate(rows):
        w = (m[0] * z + m[1]) / (m[2] * z + m[3])
        inside = [i for i, (c, r) in enumerate(petals) if abs(w[0] - c) < r]
        if len(inside) != 1:
            raise ValueError(f"generator {k} does not send the probe into exactly one "
                             f"pairing disk ({len(inside)} found)")
        out[k] = inside[0]
    return out


def _chebyshev(n: np.ndarray, half_trace: np.ndarray) -> np.ndarray:
    """``U_n(c)`` for integer ``n >= -1``; with it ``x^k = U_{k-1} x - U_{k-2} I`` when det 1."""
    n = np.asarray(n, np.int64)
    c = np.asarray(half_trace, complex)
    with np.errstate(all="ignore"):
        theta = np.arccos(c)
        general = np.sin((n + 1) * theta) / np.sin(theta)
    # parabolic elements sit at c = +-1 where the quotient is 0/0
    edge = np.abs(np.abs(c.real) - 1) + np.abs(c.imag) < 1e-9
    sign = np.where(c.real >= 0, 1.0, -1.0)
    limit = (n + 1) * sign ** n
    return np.where(edge, limit, general)


def _power_rows(words, times_q, half_trace, m):
    """``w q^m`` from ``w`` and ``w q``, elementwise over the arrays."""
    u1 = _chebyshev(m - 1, half_trace)[:, None]
    u2 = _chebyshev(m - 2, half_trace)[:, None]
    return u1 * times_q - u2 * words


EXPLICIT_RUN = 16  # run elements always inspected one by one before searching


class _Run:
    """The words ``w p_1 ... p_n`` for a periodic letter pattern ``p``."""

    def __init__(self, words, pattern, gens):
        self.words = words
        self.pattern = pattern
        q = np.array([1, 0, 0, 1], complex)
        for x in pattern:
            q = compose_rows(q, gens[x])
        self.wq = compose_rows(words, q)
        self.half = np.full(len(words), (q[0] + q[3]) / 2)
        self.gens = gens

    def rows(self, sel, n):
        period = len(self.pattern)
        m, rest = np.divmod(n, period)
        out = _power_rows(self.words[sel], self.wq[sel], self.half[sel], m)
        for j in range(1, period):
            # finish the partial period letter by letter
            tail = rest >= j
            if tail.any():
                out[tail] = compose_rows(out[tail], self.gens[self.pattern[j - 1]])
        return out

    def last_letter(self, n):
        return np.asarray(self.pattern)[(np.asarray(n) - 1) % len(self.pattern)]


def candidate_elements(g: GroupPresentation, own: Disk, other: Disk, lo_ratio: float,
                       hi_ratio: float, reach: float, max_words: int = 20_000_000,
                       max_run: int = 1 << 30):
    """Elements ``h`` of ``g`` with ``h(other)`` of relative size in the band and near ``own``.

    Reduced words are grown a block at a time: a power ``x^k`` of one
    letter, or a maximal alternation ``x y x y ...`` when ``x y`` is
    parabolic.  Every block decomposition is produced once.  Anything
    beyond ``w x`` lands in ``w(P_x)``, ``P_x`` the pairing disk ``x`` maps
    into, which bounds each subtree.  A run stops at the last element whose
    own image or branch-off disks are still admissible: the first
    ``EXPLICIT_RUN`` elements are examined one by one, beyond that the
    sizes decay like ``1/k^2`` towards the parabolic fixed point and the end
    is found by doubling and bisection.  Returns the elements and the
    number of words visited.
    """
    if g.pairing_disks is None:
        raise ValueError("the factor group must record its pairing disks")
    gens, inverse = g.symmetric_generators()
    n_letters = len(gens)
    petals = [(complex(c), float(r)) for c, r in g.pairing_disks]
    targets = _petal_targets(gens, petals, other.center)
    lo, hi = lo_ratio * own.radius, hi_ratio * own.radius
    partner = np.full(n_letters, -1, np.int64)
    for x in range(n_letters):
        for y in range(n_letters):
            if y in (x, inverse[x]):
                continue
            q = compose_rows(gens[x], gens[y])
            if abs(abs(q[0] + q[3]) - 2) < 1e-9:
                partner[x] = y if partner[x] < 0 else -2
    if np.any(partner == -2):
        partner[:] = -1  # several partners: alternation blocks would be ambiguous

    def region_alive(rows, x):
        c, r = petals[targets[x]]
        pc, pr = disk_image_rows(rows, c, r)
        with np.errstate(invalid="ignore"):
            return ~np.isfinite(pr) | ((pr >= lo) & (np.abs(pc - own.center) - pr
                                                     <= reach * own.radius))

    def self_alive(rows):
        cen, rad = disk_image_rows(rows, other.center, other.radius)
        with np.errstate(invalid="ignore"):
            return ~np.isfinite(rad) | ((rad >= lo) & (np.abs(cen - own.center) - rad
                                                       <= reach * own.radius))

    def element_alive(rows, branch_letters):
        ok = self_alive(rows)
        for z in branch_letters:
            pending = ~ok
            if not pending.any():
                break
            ok[pending] = region_alive(rows[pending], z)
        return ok

    def run_length(run, first, branches):
        """Last alive element index per word (``first - 1`` when none is)."""
        n = len(run.words)
        best = np.full(n, first - 1, np.int64)
        for k in range(first, first + EXPLICIT_RUN):
            alive = element_alive(run.rows(np.arange(n), np.full(n, k)), branches(k))
            best[alive] = k
        top = np.full(n, first + EXPLICIT_RUN - 1, np.int64)
        open_ = best == top
        while open_.any():
            trial = np.minimum(top * 2, max_run)
            idx = np.flatnonzero(open_)
            alive = _alive_at(run, idx, trial[idx], branches, element_alive)
            grow = np.zeros(n, bool)
            grow[idx] = alive & (trial[idx] > top[idx])
            best[idx[alive]] = trial[idx[alive]]
            stop = idx[~alive]
            # bisect (top, trial) for the words whose doubling failed
            a, b = top[stop].copy(), trial[stop].copy()
            while True:
                mid = (a + b) // 2
                todo = mid > a
                if not todo.any():
                    break
                ok = np.zeros(len(stop), bool)
                ok[todo] = _alive_at(run, stop[todo], mid[todo], branches, element_alive)
                a = np.where(todo & ok, mid, a)
                b = np.where(todo & ~ok, mid, b)
            best[stop] = np.maximum(best[stop], a)
            top[grow] = trial[grow]
            open_ = grow
        return best

    words = np.array([[1, 0, 0, 1]], complex)
    last = np.full(1, -1, np.int64)
    single = np.zeros(1, bool)
    found = []
    total = 0
    while len(words):
        total += len(words)
        if total > max_words:
            raise RuntimeError(f"candidate search exceeded {max_words} words")
        cen, rad = disk_image_rows(words, other.center, other.radius)
        with np.errstate(invalid="ignore"):
            hit = (np.isfinite(rad) & (rad >= lo) & (rad <= hi)
                   & (np.abs(cen - own.center) + rad <= reach * own.radius))
        found.append(words[hit])
        out_w, out_last, out_single = [], [], []
        for x in range(n_letters):
            y = partner[x]
            ok = (last != x) & (last != inverse[x])
            # x^1 right after a lone partner letter belongs to an alternation block
            from_two = single & (y >= 0) & (last == y)
            for first, sel in ((1, ok & ~from_two), (2, ok & from_two)):
                idx = np.flatnonzero(sel)
                if len(idx) == 0:
                    continue
                base = words[idx] if first == 1 else compose_rows(words[idx], gens[x])
                keep = region_alive(base, x)
                idx = idx[keep]
                if len(idx) == 0:
                    continue
                run = _Run(words[idx], (x,), gens)
                branch = [z for z in range(n_letters) if z not in (x, inverse[x])]
                stop = run_length(run, first, lambda k, b=branch: b)
                counts = np.maximum(stop - first + 1, 0)
                owner = np.repeat(np.arange(len(idx)), counts)
                k = first + np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts,
                                                                     counts)
                out_w.append(run.rows(owner, k))
                out_last.append(np.full(len(k), x, np.int64))
                out_single.append(k == 1)
            if y < 0:
                continue
            # alternation x y x y ..., at least two letters long
            ok = (last != x) & (last != inverse[x]) & ~(single & (last == y))
            idx = np.flatnonzero(ok)
            if len(idx) == 0:
                continue
            keep = region_alive(compose_rows(words[idx], gens[x]), y)
            idx = idx[keep]
            if len(idx) == 0:
                continue
            run = _Run(words[idx], (x, y), gens)

            def branches(k, x=x, y=y):
                end = x if k % 2 else y
                cont = y if k % 2 else x
                return [z for z in range(n_letters) if z not in (inverse[end], cont)]

            stop = run_length(run, 2, branches)
            counts = np.maximum(stop - 1, 0)
            owner = np.repeat(np.arange(len(idx)), counts)
            k = 2 + np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
            out_w.append(run.rows(owner, k))
            out_last.append(run.last_letter(k).astype(np.int64))
            out_single.append(np.ones(len(k), bool))
        if out_w:
            words = np.concatenate(out_w)
            last = np.concatenate(out_last)
            single = np.concatenate(out_single)
        else:
            words = np.empty((0, 4), complex)
    return np.concatenate(found), total


def _alive_at(run, idx, k, branches, element_alive):
    """Element ``k[i]`` of the run for word ``idx[i]``; branch sets may depend on parity."""
    out = np.zeros(len(idx), bool)
    rows = run.rows(idx, k)
    if len(run.pattern) == 1:
        return element_alive(rows, branches(1))
    for parity in (0, 1):
        sel = (k % 2) == parity
        if sel.any():
            out[sel] = element_alive(rows[sel], branches(parity if parity else 2))
    return out


class PackingRule:
    """Children of ``T(D_k)`` are the admissible disks ``T h (D_other)``, ``h`` in factor ``k``."""

    def __init__(self, factors, disks, delta: float, margin: float = 2.0):
        self.delta = float(delta)
        self.disks = disks
        self.factors = []
        for k in (0, 1):
            rows, words = candidate_elements(factors[k], disks[k], disks[1 - k],
                                             self.delta / margin, MAX_RATIO * margin,
                                             ROOM + 0.5)
            self.factors.append(_Factor(rows, disks[k], disks[1 - k], words))

    def __call__(self, node: MassNode):
        f = self.factors[node.kind]
        rows = f.rows if node.transform is None else compose_rows(node.transform, f.rows)
        cen, rad = disk_image_rows(rows, f.other.center, f.other.radius)
        with np.errstate(invalid="ignore"):
            ok = (np.isfinite(rad)
                  & (np.abs(cen - node.center) + rad <= ROOM * node.radius)
                  & (rad >= self.delta * node.radius) & (rad <= MAX_RATIO * node.radius))
        cen, rad, rows = cen[ok], rad[ok], rows[ok]
        keep = separated_subset(cen, rad)
        cen, rad, rows = cen[keep], rad[keep], rows[keep]
        if rad.sum() < COVER * node.radius:
            raise ConstructionError(
                f"child diameters add up to {rad.sum() / node.radius:.3f} parent diameters, "
                f"below {COVER}", node)
        return cen, rad, np.full(len(rad), 1 - node.kind, np.int8), rows


def round_construction(d1: Disk, d2: Disk, g1: GroupPresentation, g2: GroupPresentation,
                       depth: int, delta: float = 1e-5) -> MassTree:
    """Nested disk system for the free product of ``g1`` (preserving ``d1``) and ``g2``.

    The root is ``d1``.  The children of a node ``T(d_k)`` are the disks
    ``T h (d_other)`` with ``h`` in ``g_k`` that fit in the doubled node and
    whose diameter ratio lies in ``[delta, 1/100]``, thinned largest first
    until the doubled children are disjoint.  A node whose children do not
    reach twice its diameter aborts the construction.
    """
    d1, d2 = Disk(d1.center, d1.radius), Disk(d2.center, d2.radius)
    if d1.distance(d2) <= 0:
        raise ValueError("the two disks must be disjoint")
    for c1, r1 in g1.pairing_disks or ():
        for c2, r2 in g2.pairing_disks or ():
            if abs(c1 - c2) <= r1 + r2:
                raise ValueError("pairing disks of the two factors intersect")
    root = MassNode(0, d1.center, d1.radius, 1.0, kind=0, transform=None)
    rule = PackingRule((g1, g2), (d1, d2), delta) if depth > 0 else None
    tree = MassTree(root, depth, rule, name="packing", params={"delta": delta},
                    max_ratio=MAX_RATIO)
    if depth > 0:
        tree.brood(root)  # generation one is always checked in full
    return tree


def packing_tree(config: Optional[PackingConfiguration] = None, depth: int = 3,
                 delta: float = 1e-5) -> MassTree:
    from ..limitset import packing_configuration

    config = config or packing_configuration()
    g1, g2 = config.factors()
    return round_construction(config.disk1, config.disk2, g1, g2, depth, delta)


# ------------------------------------------------------------ verification

@dataclass(frozen=True)
class TrialSet:
    generation: np.ndarray
    radius: np.ndarray
    mass: np.ndarray
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def maxima(self, alpha: float) -> np.ndarray:
        """Largest ``mass / r**alpha`` per generation (nan where untested)."""
        top = int(self.generation.max()) + 1 if len(self.generation) else 0
        out = np.full(top, np.nan)
        ratio = self.mass / self.radius ** alpha
        for k in range(top):
            sel = self.generation == k
            if sel.any():
                out[k] = ratio[sel].max()
        return out


def frostman_trials(tree: MassTree, trials: int, seed: int = 0) -> TrialSet:
    """Masses of random disks centred near the support, radii spread over every generation.

    Each trial draws a node of a generation with probability equal to its
    mass, a centre uniformly in that node and a radius between half and
    twice the node's diameter.  Results are cached on the tree.
    """
    key = (int(trials), int(seed))
    if key in tree._trial_cache:
        return tree._trial_cache[key]
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(seed)
    gens = np.arange(trials) % (tree.depth + 1)
    radius = np.empty(trials)
    mass = np.empty(trials)
    for t, k in enumerate(gens):
        node = tree.sample_node(int(k), rng)
        x = node.center + node.radius * math.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        r = node.diameter * 2.0 ** rng.uniform(-1.0, 1.0)
        radius[t] = r
        mass[t] = tree.mass_in_disk(x, r)
    out = TrialSet(gens, radius, mass, seed)
    tree._trial_cache[key] = out
    return out


def frostman_verify(tree: MassTree, trials: int, alpha: float, seed: int = 0):
    """``(C, ok)`` for the bound ``mu(D(x, r)) <= C r**alpha`` on random disks.

    ``C`` is the largest observed ratio; ``ok`` holds when it is finite and
    no generation's maximum exceeds the previous generation's by more than
    10%.  (Comparing only against the best earlier maximum would let a
    large coarse-scale constant hide growth at fine scales.)
    """
    ts = frostman_trials(tree, trials, seed)
    per = ts.maxima(alpha)
    c = float(np.nanmax(per))
    if not math.isfinite(c):
        return c, False
    prev, cur = per[:-1], per[1:]
    tested = ~np.isnan(prev) & ~np.isnan(cur)
    return c, bool(np.all(cur[tested] <= STABILITY * prev[tested]))


def frostman_exponent(tree: MassTree, trials: int = 300, seed: int = 0, step: float = 0.005,
                      top: float = 2.0) -> DimensionEstimate:
    """Largest ``alpha`` on a grid such that every smaller grid value verifies."""
    ts = frostman_trials(tree, trials, seed)
    best = 0.0
    for alpha in np.arange(step, top + step / 2, step):
        if not frostman_verify(tree, trials, float(alpha), seed)[1]:
            break
        best = float(alpha)
    return make_estimate(best, step, Method.FROSTMAN_LOWER,
                         (float(ts.radius.min()), float(ts.radius.max())),
                         n_scales=tree.depth + 1)
