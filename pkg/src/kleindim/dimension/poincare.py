"""Critical exponent of the orbit counting function."""

from __future__ import annotations

import enum
from typing import Optional

import numpy as np

from ..groups import GroupPresentation, OrbitCountTable, enumerate_orbit, orbit_counts
from .estimate import DimensionEstimate, Method, make_estimate, slope_fit

DEFAULT_WINDOW = (8.0, 24.0)
GRID_STEP = 0.25


class CountModel(enum.Enum):
    SHELL = "shell"
    CUMULATIVE = "cumulative"


def shell_width(prune_slack: float) -> float:
    # wide enough that a shell always holds at least one translate of a generator
    return max(1.0, 1.5 * prune_slack)


def delta_fit(table: OrbitCountTable, window: tuple = DEFAULT_WINDOW,
              model: CountModel = CountModel.SHELL,
              width: Optional[float] = None) -> DimensionEstimate:
    """Exponential growth rate of the orbit counts over ``window``.

    With the shell model the fitted quantity is ``log(N(R) - N(R - w))``;
    polynomial growth of ``N`` (a loxodromic cyclic group has ``N`` linear
    in ``R``) then gives a flat curve instead of a slowly decaying ``1/R``
    slope.  ``CUMULATIVE`` fits ``log N(R)`` directly.

    Radii of ``table`` inside the window are the fit abscissae.
    """
    model = CountModel(model)
    lo, hi = (float(w) for w in window)
    if hi <= lo:
        raise ValueError("window must satisfy lo < hi")
    limit = table.max_rho - table.prune_slack
    if hi > limit + 1e-12:
        raise ValueError(f"window top {hi} reaches the truncation band (limit {limit:.3f})")
    radii = np.asarray(table.radii, float)
    counts = np.asarray(table.counts, float)
    sel = (radii >= lo - 1e-12) & (radii <= hi + 1e-12)
    r = radii[sel]
    if model is CountModel.SHELL:
        w = shell_width(table.prune_slack) if width is None else float(width)
        # N is a step function sampled on the grid: read it at the last radius <= r - w
        idx = np.searchsorted(radii, r - w + 1e-12, side="right") - 1
        below = np.where(idx >= 0, counts[np.maximum(idx, 0)], 0.0)
        y = counts[sel] - below
    else:
        y = counts[sel]
    keep = y > 0
    if keep.sum() < 4:
        raise ValueError(f"only {int(keep.sum())} usable radii in the window; at least 4 needed")
    slope, err = slope_fit(r[keep], np.log(y[keep]))
    flags = []
    if table.truncated:
        flags.append("lower_bound_biased")
    if not keep.all():
        flags.append("empty_shells_skipped")
    return make_estimate(slope, err, Method.POINCARE_EXPONENT, (lo, hi),
                         truncated=table.truncated, flags=tuple(flags), n_scales=int(keep.sum()))


def orbit_count_table(g: GroupPresentation, max_rho: float, max_points: int = 2_000_000,
                      step: float = GRID_STEP, max_depth: int = 10 ** 9) -> OrbitCountTable:
    """Enumerate up to displacement ``max_rho`` and tabulate N on a regular grid."""
    orbit = enumerate_orbit(g, max_depth, max_rho=max_rho, max_points=max_points)
    radii = np.arange(0.0, max_rho + 0.5 * step, step)
    return orbit_counts(orbit, radii)


def estimate_delta(g: GroupPresentation, window: tuple = DEFAULT_WINDOW,
                   max_points: int = 2_000_000,
                   model: CountModel = CountModel.SHELL) -> tuple[DimensionEstimate, OrbitCountTable]:
    """Enumerate just far enough for ``window`` and fit."""
    max_rho = float(window[1]) + g.prune_slack()
    table = orbit_count_table(g, max_rho, max_points)
    return delta_fit(table, window, model), table


def orbit_count_csv(table: OrbitCountTable) -> str:
    return "R,N\n" + "".join(f"{r:.6g},{int(n)}\n" for r, n in zip(table.radii, table.counts))


def poincare_partial_sum(rho: np.ndarray, s: float) -> float:
    """``sum exp(-s rho)`` over an enumerated orbit; diverges as s falls to the exponent."""
    return float(np.exp(-s * np.asarray(rho, float)).sum())


__all__ = ["CountModel", "DEFAULT_WINDOW", "delta_fit", "estimate_delta", "orbit_count_csv",
           "orbit_count_table", "poincare_partial_sum", "shell_width"]
