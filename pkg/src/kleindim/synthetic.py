"""Reference sets with known dimensions."""

from __future__ import annotations

import numpy as np

from .limitset import PointCloud


def segment(spacing: float = 2.0 ** -16) -> PointCloud:
    n = int(round(1 / spacing))
    x = np.arange(n + 1) * spacing
    return PointCloud.from_points(np.column_stack([x, np.zeros_like(x)]), resolution=spacing,
                                  provenance=f"segment spacing={spacing!r}")


def circle(n: int = 4096, radius: float = 0.5, center=0.5 + 0.5j) -> PointCloud:
    z = center + radius * np.exp(2j * np.pi * np.arange(n) / n)
    return PointCloud.from_points(z, resolution=2 * np.pi * radius / n,
                                  provenance=f"circle n={n} radius={radius!r}")


def cantor_set(depth: int = 12) -> PointCloud:
    """Both endpoints of the ``2^depth`` middle-thirds intervals."""
    left = np.zeros(1)
    length = 1.0
    for _ in range(depth):
        length /= 3.0
        left = np.concatenate([left, left + 2 * length])
    x = np.sort(np.concatenate([left, left + length]))
    return PointCloud.from_points(np.column_stack([x, np.zeros_like(x)]), resolution=length,
                                  provenance=f"cantor depth={depth}")


def one_over_n(n_max: int = 2 ** 16) -> PointCloud:
    """``{0} U {1/n : 2 <= n <= n_max}``, exactly."""
    x = np.concatenate([[0.0], 1.0 / np.arange(2, n_max + 1)])
    return PointCloud.from_points(np.column_stack([x, np.zeros_like(x)]),
                                  provenance=f"one-over-n n_max={n_max}")


def two_points(distance: float = 1.0) -> PointCloud:
    return PointCloud.from_points([[0.0, 0.0], [distance, 0.0]],
                                  provenance=f"two-points distance={distance!r}")
