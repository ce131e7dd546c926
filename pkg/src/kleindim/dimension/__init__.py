"""Dimension estimators: box counting, Whitney index, orbit growth, mass distributions."""

from .boxcount import BoxCountTable, DyadicSquare, box_count, mdim_fit, morton_codes
from .estimate import DimensionEstimate, FIT_HEADER, Method, slope_fit, write_fit_csv
from .frostman import (ConstructionError, MassNode, MassTree, binary_tree, frostman_exponent,
                       frostman_trials, frostman_verify, packing_tree, round_construction)
from .poincare import (CountModel, delta_fit, estimate_delta, orbit_count_csv,
                       orbit_count_table)
from .whitney import WhitneyCell, WhitneyLevels, kappa_fit, whitney_decompose, whitney_levels

__all__ = [
    "BoxCountTable", "ConstructionError", "CountModel", "DimensionEstimate", "DyadicSquare",
    "FIT_HEADER", "MassNode", "MassTree", "Method", "WhitneyCell", "WhitneyLevels",
    "binary_tree", "box_count", "delta_fit", "estimate_delta", "frostman_exponent",
    "frostman_trials", "frostman_verify", "kappa_fit", "mdim_fit", "morton_codes",
    "orbit_count_csv", "orbit_count_table", "packing_tree", "round_construction", "slope_fit",
    "whitney_decompose", "whitney_levels", "write_fit_csv",
]
