"""Whitney squares of the complement of a sampled set and the index kappa."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ..limitset import PointCloud
from .boxcount import DyadicSquare
from .estimate import DimensionEstimate, Method, make_estimate, slope_fit

SQRT2 = math.sqrt(2.0)
REACH = 1.0  # squares farther than this from the set are not part of the decomposition
STOP = 2.0  # accept a square once its distance bound is at least STOP * side
LEVEL_CAP = 24  # default ceiling; deeper levels cost millions of cells and add little


@dataclass(frozen=True)
class WhitneyCell:
    square: DyadicSquare
    dist_to_K: float  # distance from the square's centre to the sample
    dist_lo: float  # certified lower bound for dist(Q, K)

    def bracket_ok(self) -> bool:
        side = self.square.side
        return side <= 10 * self.dist_lo and self.dist_to_K <= 10 * side


@dataclass(frozen=True)
class WhitneyLevels:
    """Cell counts per level, the compact form of a decomposition."""

    levels: np.ndarray
    counts: np.ndarray
    max_level: int

    def csv_text(self) -> str:
        return "level,W_n\n" + "".join(f"{int(n)},{int(c)}\n" for n, c in zip(self.levels,
                                                                               self.counts))


def default_max_level(cloud: PointCloud) -> int:
    """Finest level whose side stays at least ten resolutions, capped at LEVEL_CAP."""
    return min(LEVEL_CAP, max(0, int(math.floor(math.log2(1.0 / (10.0 * cloud.resolution))))))


def _decompose(cloud: PointCloud, max_level: int, keep_cells: bool):
    tree = cKDTree(cloud.points)
    ix, iy = np.meshgrid(np.arange(-1, 2), np.arange(-1, 2))
    ix, iy = ix.ravel().astype(np.int64), iy.ravel().astype(np.int64)
    counts = np.zeros(max_level + 1, dtype=np.int64)
    cells = []
    for level in range(max_level + 1):
        if len(ix) == 0:
            break
        side = 2.0 ** -level
        centers = np.column_stack([(ix + 0.5) * side, (iy + 0.5) * side])
        d_c, _ = tree.query(centers)
        d_lo = np.maximum(d_c - side / SQRT2, 0.0)
        near = d_lo <= REACH
        accept = near & (d_lo >= STOP * side)
        # the bracket follows from the acceptance rule; check it rather than trust it
        if not (np.all(side <= 10 * d_lo[accept]) and np.all(d_c[accept] <= 10 * side)):
            raise AssertionError(f"Whitney bracket violated at level {level}")
        counts[level] = int(accept.sum())
        if keep_cells:
            cells.extend(WhitneyCell(DyadicSquare(level, int(a), int(b)), float(d), float(lo))
                         for a, b, d, lo in zip(ix[accept], iy[accept], d_c[accept],
                                                d_lo[accept]))
        split = near & ~accept
        px, py = ix[split], iy[split]
        ix = np.concatenate([2 * px, 2 * px + 1, 2 * px, 2 * px + 1])
        iy = np.concatenate([2 * py, 2 * py, 2 * py + 1, 2 * py + 1])
    return cells, WhitneyLevels(np.arange(max_level + 1), counts, max_level)


def whitney_decompose(cloud: PointCloud, max_level: Optional[int] = None) -> list[WhitneyCell]:
    """Dyadic Whitney squares of the complement of the sample within distance 1.

    Starts from the nine unit squares around ``[0, 1]^2`` and splits any
    square whose certified distance to the sample is below twice its side.
    Every emitted cell satisfies ``side <= 10 dist`` and ``dist <= 10 side``.
    Squares still unresolved at ``max_level`` are left out.
    """
    if max_level is None:
        max_level = default_max_level(cloud)
    return _decompose(cloud, int(max_level), True)[0]


def whitney_levels(cloud: PointCloud, max_level: Optional[int] = None) -> WhitneyLevels:
    if max_level is None:
        max_level = default_max_level(cloud)
    return _decompose(cloud, int(max_level), False)[1]


def level_counts(cells: Sequence[WhitneyCell]) -> WhitneyLevels:
    if not cells:
        return WhitneyLevels(np.zeros(1, np.int64), np.zeros(1, np.int64), 0)
    lv = np.array([c.square.level for c in cells], dtype=np.int64)
    top = int(lv.max())
    return WhitneyLevels(np.arange(top + 1), np.bincount(lv, minlength=top + 1), top)


def kappa_fit(cells, window: Optional[tuple] = None) -> DimensionEstimate:
    """Slope of ``log2 W_n`` against ``n`` over a level window.

    ``cells`` is a list of :class:`WhitneyCell` or a :class:`WhitneyLevels`.
    The default window is the finer half of the levels between the first
    non-empty one and ``max_level``: end effects (isolated points, arc
    endpoints) add a roughly constant count per level that biases the
    coarse levels downward.  Empty levels inside the window are filled by
    log-linear interpolation and flagged.
    """
    wl = cells if isinstance(cells, WhitneyLevels) else level_counts(cells)
    levels, counts = wl.levels, wl.counts
    if window is None:
        nz = np.flatnonzero(counts)
        if nz.size == 0:
            raise ValueError("no Whitney cells")
        lo, hi = (int(nz[0]) + wl.max_level) // 2, wl.max_level
    else:
        lo, hi = (int(w) for w in window)
    sel = (levels >= lo) & (levels <= hi)
    n, w = levels[sel], counts[sel].astype(float)
    if len(n) < 4:
        raise ValueError(f"window holds {len(n)} levels; at least 4 are needed")
    flags = ()
    empty = w == 0
    if empty.all():
        raise ValueError("all window levels are empty")
    if empty.any():
        flags = ("interpolated_empty_levels",)
        logw = np.interp(n, n[~empty], np.log2(w[~empty]))
    else:
        logw = np.log2(w)
    slope, err = slope_fit(n, logw)
    return make_estimate(slope, err, Method.WHITNEY_KAPPA, (lo, hi), flags=flags,
                         n_scales=len(n))
