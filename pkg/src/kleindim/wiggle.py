"""Beta numbers, the square sum over dyadic squares, wiggliness certificates,
and the four-piece snowflake family used to test them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial import cKDTree

from . import _backend
from .dimension.boxcount import DyadicSquare
from .limitset import PointCloud, render_svg

DIRECTIONS = 512
OFFSETS = 256
K0_DEFAULT = 60000.0
MAX_SNOWFLAKE_DEPTH = 12


@dataclass(frozen=True)
class BetaEntry:
    square: DyadicSquare
    beta: float
    witness_line: tuple  # ((px, py), (ux, uy)) with |u| = 1

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError("beta must be non-negative")

    def segment(self) -> tuple:
        """The witness line clipped to ``3Q``, as two complex endpoints."""
        (px, py), (ux, uy) = self.witness_line
        return _clip_line(complex(px, py), complex(ux, uy), self.square.tripled())


# ----------------------------------------------------------------- geometry

def _square_corners(q: DyadicSquare) -> np.ndarray:
    x0, y0, x1, y1 = q.bounds
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


def _points_in(pts: np.ndarray, bounds) -> np.ndarray:
    x0, y0, x1, y1 = bounds
    m = (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)
    return pts[m]


def _line_meets_square(p, u, q: DyadicSquare) -> bool:
    c = _square_corners(q) - np.asarray(p)
    side = u[0] * c[:, 1] - u[1] * c[:, 0]
    return bool(side.min() <= 0 <= side.max())


def _clip_line(p: complex, u: complex, bounds) -> tuple:
    x0, y0, x1, y1 = bounds
    lo, hi = -math.inf, math.inf
    for pc, uc, a, b in ((p.real, u.real, x0, x1), (p.imag, u.imag, y0, y1)):
        if abs(uc) < 1e-300:
            if not a <= pc <= b:
                return p, p
            continue
        t1, t2 = (a - pc) / uc, (b - pc) / uc
        lo, hi = max(lo, min(t1, t2)), min(hi, max(t1, t2))
    if lo > hi:
        return p, p
    return p + lo * u, p + hi * u


def _constrained_width(hull: np.ndarray, q: DyadicSquare, directions: int = DIRECTIONS):
    """Best strip half-width over lines that meet ``Q``, with its midline.

    For a direction with unit normal ``n`` the admissible offsets form the
    interval spanned by ``n . corner``; the sup-distance of the hull to the
    line is ``max(M - s, s - m)`` with ``m, M`` the projection extremes, so
    the best offset is their midpoint clipped to that interval.
    """
    corners = _square_corners(q)

    def cost(theta):
        n = np.array([-np.sin(theta), np.cos(theta)])
        proj = hull @ n
        lo, hi = float(proj.min()), float(proj.max())
        cp = corners @ n
        s = min(max(0.5 * (lo + hi), float(cp.min())), float(cp.max()))
        return max(hi - s, s - lo), s, n

    theta = np.pi * np.arange(directions) / directions
    normals = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
    proj = hull @ normals.T
    lo, hi = proj.min(axis=0), proj.max(axis=0)
    cp = corners @ normals.T
    s = np.clip(0.5 * (lo + hi), cp.min(axis=0), cp.max(axis=0))
    vals = np.maximum(hi - s, s - lo)
    k = int(np.argmin(vals))
    step = np.pi / directions
    res = minimize_scalar(lambda t: cost(t)[0], bounds=(theta[k] - step, theta[k] + step),
                          method="bounded", options={"xatol": 1e-12})
    best_t = float(res.x) if res.fun < vals[k] else float(theta[k])
    w, s_best, n = cost(best_t)
    p = s_best * n
    u = (math.cos(best_t), math.sin(best_t))
    return w, (float(p[0]), float(p[1])), u


def beta_from_points(q: DyadicSquare, pts3: np.ndarray) -> BetaEntry:
    """Beta of ``Q`` given the points already restricted to ``3Q``."""
    if len(pts3) == 0:
        raise ValueError(f"3Q of {q} holds no points")
    hull = np.ascontiguousarray(_backend.convex_hull(np.ascontiguousarray(pts3, float)))
    half, p, u = _backend.min_width(hull)
    if not _line_meets_square(p, u, q):
        half, p, u = _constrained_width(hull, q)
    return BetaEntry(q, float(half) / q.side, (tuple(map(float, p)), tuple(map(float, u))))


def beta_number(q: DyadicSquare, cloud: PointCloud) -> BetaEntry:
    """Normalized width of the thinnest strip around ``E ∩ 3Q`` whose midline meets ``Q``.

    Rotating calipers on the hull give the unconstrained optimum; when its
    midline misses ``Q`` a direction scan with the offset optimized per
    direction (then refined locally) takes over.
    """
    if q.side < 10 * cloud.resolution:
        raise ValueError(f"square side {q.side:g} is below ten resolutions")
    return beta_from_points(q, _points_in(cloud.points, q.tripled()))


def beta_brute_force(q: DyadicSquare, points, directions: int = DIRECTIONS,
                     offsets: int = OFFSETS) -> float:
    """Direction-offset grid over lines meeting ``Q``, against every point of ``3Q``."""
    pts = _points_in(np.asarray(points, float).reshape(-1, 2), q.tripled())
    if len(pts) == 0:
        raise ValueError("3Q holds no points")
    corners = _square_corners(q)
    best = math.inf
    for t in np.pi * np.arange(directions) / directions:
        n = np.array([-math.sin(t), math.cos(t)])
        proj = pts @ n
        cp = corners @ n
        s = np.linspace(cp.min(), cp.max(), offsets)
        val = np.maximum(proj.max() - s, s - proj.min()).min()
        best = min(best, float(val))
    return best / q.side


def delta_number(q: DyadicSquare, cloud: PointCloud, directions: int = 128, offsets: int = 32,
                 samples: int = 64) -> float:
    """``inf_L H(E ∩ 3Q, L ∩ 3Q) / l(Q)`` over a grid of lines meeting ``Q``.

    ``H`` is the sum of the two one-sided Hausdorff distances.  The segment
    ``L ∩ 3Q`` is sampled at ``samples`` points for the second term.
    """
    pts = _points_in(cloud.points, q.tripled())
    if len(pts) == 0:
        raise ValueError("3Q holds no points")
    tree = cKDTree(pts)
    hull = _backend.convex_hull(np.ascontiguousarray(pts))
    corners = _square_corners(q)
    box = q.tripled()
    best = math.inf
    for t in np.pi * np.arange(directions) / directions:
        u = complex(math.cos(t), math.sin(t))
        n = np.array([-u.imag, u.real])
        cp = corners @ n
        for s in np.linspace(cp.min(), cp.max(), offsets):
            z0, z1 = _clip_line(complex(s * n[0], s * n[1]), u, box)
            a = np.array([z0.real, z0.imag])
            d = np.array([(z1 - z0).real, (z1 - z0).imag])
            dd = float(d @ d)
            # distance to a segment is convex, so hull vertices carry the max
            tt = np.clip(((hull - a) @ d) / dd, 0, 1) if dd > 0 else np.zeros(len(hull))
            near = a + tt[:, None] * d
            first = float(np.sqrt(((hull - near) ** 2).sum(axis=1)).max())
            line = a + np.linspace(0, 1, samples)[:, None] * d
            second = float(tree.query(line)[0].max())
            best = min(best, first + second)
    return best / q.side


# ------------------------------------------------------------ level tables

@dataclass
class BetaLevel:
    level: int
    entries: list

    @property
    def betas(self) -> np.ndarray:
        return np.array([e.beta for e in self.entries])


_EDGE_CELLS = tuple((a, 2) for a in (-1, 0, 1, 2)) + tuple((2, b) for b in (-1, 0, 1))


def _cell_index(pts: np.ndarray, level: int) -> np.ndarray:
    return np.floor(pts * (1 << level)).astype(np.int64)


def beta_levels(cloud: PointCloud, levels: Iterable[int]) -> list:
    """Beta of every dyadic square meeting the cloud, for each requested level.

    Hulls of single cells are built once at the finest level and merged
    upward; the hull of ``3Q`` is the hull of its nine cells' hulls.
    """
    levels = sorted({int(n) for n in levels})
    if not levels:
        return []
    if levels[0] < 0:
        raise ValueError("levels must be >= 0")
    pts = cloud.points
    finest = levels[-1]
    ij = _cell_index(pts, finest)
    order = np.lexsort((ij[:, 1], ij[:, 0]))
    ij_sorted, pts_sorted = ij[order], pts[order]
    cut = np.flatnonzero(np.any(np.diff(ij_sorted, axis=0) != 0, axis=1)) + 1
    starts = np.concatenate([[0], cut])
    ends = np.concatenate([cut, [len(pts)]])
    hulls = {(int(ij_sorted[a, 0]), int(ij_sorted[a, 1])):
             _backend.convex_hull(np.ascontiguousarray(pts_sorted[a:b]))
             for a, b in zip(starts, ends)}
    out = {}
    for level in range(finest, levels[0] - 1, -1):
        if level < finest:
            merged = {}
            for (ix, iy), h in hulls.items():
                merged.setdefault((ix >> 1, iy >> 1), []).append(h)
            hulls = {k: (v[0] if len(v) == 1 else
                         _backend.convex_hull(np.ascontiguousarray(np.vstack(v))))
                     for k, v in merged.items()}
        if level not in levels:
            continue
        entries = []
        for (ix, iy) in sorted(hulls):
            q = DyadicSquare(level, ix, iy)
            parts = [hulls[k] for k in ((ix + a, iy + b) for a in (-1, 0, 1) for b in (-1, 0, 1))
                     if k in hulls]
            # 3Q is closed: cells just past its top and right edges may own boundary points,
            # and those sit on a face of the cell hull, so filtering its vertices suffices
            box = q.tripled()
            for k in _EDGE_CELLS:
                h = hulls.get((ix + k[0], iy + k[1]))
                if h is not None:
                    parts.append(_points_in(h, box))
            entries.append(beta_from_points(q, np.vstack(parts)))
        out[level] = BetaLevel(level, entries)
    return [out[n] for n in levels]


def default_levels(cloud: PointCloud) -> range:
    """Levels from 0 down to the finest side that is still ten resolutions."""
    top = max(0, int(math.floor(math.log2(1.0 / (10.0 * cloud.resolution)))))
    return range(0, top + 1)


@dataclass(frozen=True)
class TspSum:
    levels: np.ndarray
    per_level: np.ndarray  # sum over squares of the level of beta^2 * side
    squares: np.ndarray

    @property
    def total(self) -> float:
        return float(self.per_level.sum())

    def csv_text(self) -> str:
        rows = "".join(f"{int(n)},{int(c)},{v!r}\n"
                       for n, c, v in zip(self.levels, self.squares, self.per_level))
        return "level,squares,beta2_len\n" + rows


def tsp_sum(cloud: PointCloud, levels: Optional[Iterable[int]] = None) -> TspSum:
    """``sum beta(Q)^2 l(Q)`` over squares meeting the cloud, level by level."""
    levels = list(default_levels(cloud) if levels is None else levels)
    tables = beta_levels(cloud, levels)
    per = np.array([float((t.betas ** 2).sum()) * 2.0 ** -t.level for t in tables])
    count = np.array([len(t.entries) for t in tables])
    return TspSum(np.array([t.level for t in tables]), per, count)


# ----------------------------------------------------------- certificates

def proof_scale(beta0: float, k0: float = K0_DEFAULT) -> float:
    """Scale exponent ``k = ceil(max(20/b, k0/b^2))``; infinite when ``b = 0``."""
    if beta0 <= 0:
        return math.inf
    return float(math.ceil(max(20.0 / beta0, k0 / beta0 ** 2)))


def proof_exponent(k: float) -> float:
    """``1 + log 1000 / log(1/eps)`` at ``eps = 2^-k``."""
    if not math.isfinite(k):
        return 1.0
    return 1.0 + math.log(1000.0) / (k * math.log(2.0))


def calibrated_bound_c(k: float) -> float:
    """The conservative constant ``1 / (16 log2(1/eps_k))`` used for desk-scale soundness checks."""
    return 0.0 if not math.isfinite(k) else 1.0 / (16.0 * k)


@dataclass(frozen=True)
class WiggleCertificate:
    beta0: float
    qualifying_square_count: int
    scale_window: tuple
    bound_c: float
    lower_bound: float
    k0: float = K0_DEFAULT
    proof_k: float = math.inf
    proof_alpha: float = 1.0
    worst_square: Optional[DyadicSquare] = None
    hypothesis: str = "input assumed closed and connected at the tested scales"
    per_level_min: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lower_bound < 1:
            raise ValueError("lower bound must be at least 1")

    def to_text(self) -> str:
        lo, hi = self.scale_window
        lines = [
            "certificate: uniform wiggliness",
            f"beta0: {self.beta0!r}",
            f"qualifying_squares: {self.qualifying_square_count}",
            f"scale_window: {lo!r} {hi!r}",
            f"bound_c: {self.bound_c!r}",
            f"lower_bound: {self.lower_bound!r}",
            f"k0: {self.k0!r}",
            f"proof_k: {self.proof_k!r}",
            f"proof_alpha: {self.proof_alpha!r}",
            f"hypothesis: {self.hypothesis}",
        ]
        if self.worst_square is not None:
            q = self.worst_square
            lines.append(f"worst_square: {q.level} {q.ix} {q.iy}")
        for n in sorted(self.per_level_min):
            lines.append(f"level_min {n}: {self.per_level_min[n]!r}")
        return "\n".join(lines) + "\n"


def wiggliness(cloud: PointCloud, levels: Optional[Iterable[int]] = None,
               bound_c: float = 1.0, k0: float = K0_DEFAULT) -> WiggleCertificate:
    """Smallest beta over every square of the window that meets the cloud.

    ``lower_bound = 1 + bound_c * beta0^2``.  The constant is configuration,
    not a proven value; the proof-shaped exponent ``proof_alpha`` at the
    scale ``proof_k`` is reported next to it.
    """
    levels = list(default_levels(cloud) if levels is None else levels)
    tables = [t for t in beta_levels(cloud, levels) if t.entries]
    if not tables:
        raise ValueError("no square in the window meets the cloud")
    beta0, worst = math.inf, None
    per_level = {}
    count = 0
    for t in tables:
        b = t.betas
        count += len(b)
        i = int(np.argmin(b))
        per_level[t.level] = float(b[i])
        if b[i] < beta0:
            beta0, worst = float(b[i]), t.entries[i].square
    k = proof_scale(beta0, k0)
    sides = [2.0 ** -t.level for t in tables]
    return WiggleCertificate(beta0, count, (min(sides), max(sides)), float(bound_c),
                             1.0 + float(bound_c) * beta0 ** 2, float(k0), k,
                             proof_exponent(k), worst, per_level_min=per_level)


# --------------------------------------------------------------- snowflake

@dataclass(frozen=True)
class SnowflakeParams:
    beta: float
    depth: int

    def __post_init__(self):
        if not 0 <= self.beta < 0.5:
            raise ValueError("beta must lie in [0, 1/2)")
        if not 0 <= self.depth <= MAX_SNOWFLAKE_DEPTH:
            raise ValueError(f"depth must lie in [0, {MAX_SNOWFLAKE_DEPTH}]")

    @property
    def ratios(self) -> tuple:
        m = 0.25 + self.beta ** 2
        return (0.25, m, m, 0.25)


def snowflake_vertices(p: SnowflakeParams) -> np.ndarray:
    """Complex vertices from 0 to 1; ``4^depth + 1`` of them."""
    leg = 0.25 + p.beta ** 2
    height = math.sqrt(max(leg * leg - 1.0 / 16.0, 0.0))
    v = np.array([0.0, 1.0], complex)
    for _ in range(p.depth):
        a, d = v[:-1], np.diff(v)
        out = np.empty(4 * len(a) + 1, complex)
        out[0:-1:4] = a
        out[1::4] = a + 0.25 * d
        # the two middle pieces meet above the midpoint, always on the left
        out[2::4] = a + 0.5 * d + 1j * height * d
        out[3::4] = a + 0.75 * d
        out[-1] = v[-1]
        v = out
    return v


def snowflake(p: SnowflakeParams) -> PointCloud:
    v = snowflake_vertices(p)
    return PointCloud.from_points(np.column_stack([v.real, v.imag]), normalize=True,
                                  provenance=f"snowflake beta={p.beta!r} depth={p.depth}")


def moran_dimension(ratios: Sequence[float]) -> float:
    """Root ``d`` of ``sum r_i^d = 1``."""
    r = np.asarray(ratios, float)
    if np.any(r <= 0) or np.any(r >= 1):
        raise ValueError("ratios must lie in (0, 1)")
    f = lambda d: float((r ** d).sum()) - 1.0  # noqa: E731
    hi = 1.0
    while f(hi) > 0:
        hi *= 2
    return float(brentq(f, 0.0, hi, xtol=1e-14))


def snowflake_dimension(beta: float) -> float:
    return moran_dimension(SnowflakeParams(beta, 0).ratios)


# ------------------------------------------------------------------- output

def beta_csv(tables: Sequence[BetaLevel]) -> str:
    rows = [f"{e.square.level},{e.square.ix},{e.square.iy},{e.beta!r}"
            for t in tables for e in t.entries]
    return "level,ix,iy,beta\n" + "".join(r + "\n" for r in rows)


def render_beta_svg(cloud: PointCloud, tables: Sequence[BetaLevel], size: int = 512) -> str:
    """The cloud with each square's witness line drawn across its ``3Q``."""
    segs = [e.segment() for t in tables for e in t.entries]
    return render_svg(cloud, lines=segs, size=size)
