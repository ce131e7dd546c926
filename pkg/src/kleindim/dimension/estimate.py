"""Fitted dimension values and the shared least-squares slope."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class Method(enum.Enum):
    BOX_COUNT = "box-count"
    WHITNEY_KAPPA = "whitney-kappa"
    POINCARE_EXPONENT = "poincare-exponent"
    FROSTMAN_LOWER = "frostman-lower"


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    stderr: float
    method: Method
    scale_window: tuple
    truncated: bool = False
    flags: tuple = ()
    n_scales: int = 0
    raw_value: float = math.nan  # slope before clipping into [0, 2]

    def __post_init__(self):
        if self.stderr < 0 or math.isnan(self.stderr):
            raise ValueError("stderr must be a non-negative number")
        if not 0.0 <= self.value <= 2.0:
            raise ValueError("planar dimension estimates lie in [0, 2]")

    def csv_row(self) -> str:
        lo, hi = self.scale_window
        return (f"{self.method.value},{self.value!r},{self.stderr!r},{lo!r},{hi!r},"
                f"{int(self.truncated)},{';'.join(self.flags)}")


FIT_HEADER = "method,value,stderr,window_lo,window_hi,truncated,flags"


def slope_fit(x, y) -> tuple[float, float]:
    """Ordinary least-squares slope of ``y`` on ``x`` with its standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("need at least two points for a slope")
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0:
        raise ValueError("degenerate abscissae")
    slope = float(((x - xm) * (y - ym)).sum() / sxx)
    if n <= 2:
        return slope, 0.0
    resid = y - ym - slope * (x - xm)
    ssr = float((resid ** 2).sum())
    return slope, math.sqrt(max(ssr, 0.0) / (n - 2) / sxx)


def make_estimate(slope: float, stderr: float, method: Method, window, truncated=False,
                  flags=(), n_scales=0) -> DimensionEstimate:
    flags = tuple(flags)
    value = min(max(slope, 0.0), 2.0)
    if value != slope:
        flags += ("clipped",)
    return DimensionEstimate(value, stderr, method, tuple(float(w) for w in window),
                             bool(truncated), flags, int(n_scales), float(slope))


def write_fit_csv(estimates, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(FIT_HEADER + "\n")
        for e in estimates:
            fh.write(e.csv_row() + "\n")
