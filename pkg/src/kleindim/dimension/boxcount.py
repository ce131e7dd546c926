"""Dyadic grid counts and the Minkowski-dimension fit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from ..limitset import PointCloud
from .estimate import DimensionEstimate, Method, make_estimate, slope_fit

MAX_LEVEL = 30
TRIM = 2  # levels dropped at each end of a default window


@dataclass(frozen=True, order=True)
class DyadicSquare:
    level: int
    ix: int
    iy: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("dyadic level must be non-negative")

    @property
    def side(self) -> float:
        return 2.0 ** -self.level

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        s = self.side
        return (self.ix * s, self.iy * s, (self.ix + 1) * s, (self.iy + 1) * s)

    @property
    def center(self) -> complex:
        s = self.side
        return complex((self.ix + 0.5) * s, (self.iy + 0.5) * s)

    def tripled(self) -> tuple[float, float, float, float]:
        s = self.side
        return ((self.ix - 1) * s, (self.iy - 1) * s, (self.ix + 2) * s, (self.iy + 2) * s)

    def children(self):
        for dx in (0, 1):
            for dy in (0, 1):
                yield DyadicSquare(self.level + 1, 2 * self.ix + dx, 2 * self.iy + dy)


@dataclass(frozen=True)
class BoxCountTable:
    levels: np.ndarray
    counts: np.ndarray
    resolution: float
    dropped: tuple = ()
    diameter: float = math.nan

    def __post_init__(self):
        if np.any(np.diff(self.levels) <= 0):
            raise ValueError("levels must be increasing")
        if np.any(np.diff(self.counts) < 0):
            raise ValueError("counts must not decrease as the scale shrinks")

    @property
    def scales(self) -> np.ndarray:
        return 2.0 ** -self.levels.astype(float)

    def trusted_levels(self) -> np.ndarray:
        """Levels whose cell side is at least the cloud resolution."""
        return self.levels[self.scales >= self.resolution]

    def csv_text(self) -> str:
        rows = ["epsilon,count"] + [f"{e!r},{int(c)}" for e, c in zip(self.scales, self.counts)]
        return "\n".join(rows) + "\n"


def _spread(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.uint64)
    v = (v | (v << np.uint64(16))) & np.uint64(0x0000FFFF0000FFFF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x00FF00FF00FF00FF)
    v = (v | (v << np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    v = (v | (v << np.uint64(2))) & np.uint64(0x3333333333333333)
    v = (v | (v << np.uint64(1))) & np.uint64(0x5555555555555555)
    return v


def morton_codes(points: np.ndarray, level: int) -> np.ndarray:
    """Interleaved cell indices at ``level``; an integer shift keeps the dyadic grid."""
    origin = np.floor(points.min(axis=0))
    scaled = np.floor((points - origin) * 2.0 ** level)
    if scaled.max() >= 2 ** 31:
        raise ValueError("cloud too wide for the requested level")
    ix = scaled[:, 0].astype(np.int64)
    iy = scaled[:, 1].astype(np.int64)
    return (_spread(ix) << np.uint64(1)) | _spread(iy)


def box_count(cloud: PointCloud, levels: Optional[Iterable[int]] = None) -> BoxCountTable:
    """Occupied dyadic cells per level.

    Levels finer than a tenth of the resolution are dropped and listed in
    ``dropped``.  One sort of the finest-level Morton codes serves every level.
    """
    floor_level = int(math.floor(math.log2(10.0 / cloud.resolution)))
    if levels is None:
        levels = range(0, min(MAX_LEVEL, floor_level) + 1)
    levels = sorted(set(int(n) for n in levels))
    if any(n < 0 for n in levels):
        raise ValueError("levels must be non-negative")
    kept = [n for n in levels if n <= min(floor_level, MAX_LEVEL)]
    dropped = tuple(n for n in levels if n not in kept)
    if not kept:
        raise ValueError("every requested level is below the resolution floor")
    top = kept[-1]
    codes = np.sort(morton_codes(cloud.points, top))
    counts = []
    for n in kept:
        shift = np.uint64(2 * (top - n))
        c = codes >> shift
        counts.append(1 + int(np.count_nonzero(c[1:] != c[:-1])))
    return BoxCountTable(np.array(kept, dtype=np.int64), np.array(counts, dtype=np.int64),
                         cloud.resolution, dropped, cloud.diameter)


def _window_levels(table: BoxCountTable, window, levels) -> np.ndarray:
    if levels is not None:
        sel = np.array(sorted(set(int(n) for n in levels)), dtype=np.int64)
        return sel[np.isin(sel, table.levels)]
    if window is not None:
        lo, hi = sorted(float(w) for w in window)
        s = table.scales
        return table.levels[(s >= lo * (1 - 1e-12)) & (s <= hi * (1 + 1e-12))]
    trusted = table.trusted_levels()
    return trusted[TRIM:len(trusted) - TRIM]


def mdim_fit(table: BoxCountTable, window: Optional[tuple] = None,
             levels: Optional[Iterable[int]] = None) -> DimensionEstimate:
    """Slope of ``log N`` against ``log(1/eps)`` over a window of scales.

    ``window`` is ``(eps_min, eps_max)``; by default the trusted levels
    (cell side at least the resolution) minus two at each end are used.
    """
    sel = _window_levels(table, window, levels)
    if len(sel) < 4:
        raise ValueError(f"window holds {len(sel)} scales; at least 4 are needed")
    idx = np.searchsorted(table.levels, sel)
    counts = table.counts[idx].astype(float)
    slope, err = slope_fit(sel * math.log(2.0), np.log(counts))
    flags = ("levels_dropped",) if table.dropped else ()
    return make_estimate(slope, err, Method.BOX_COUNT, (2.0 ** -sel.max(), 2.0 ** -sel.min()),
                         flags=flags, n_scales=len(sel))
