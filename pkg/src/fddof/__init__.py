"""Spatial degrees-of-freedom laboratory for a full-duplex base station."""

from .intervals import ElevationSet, IntervalSet, combine, from_elevation, measure
from .regions import (
    CornerPoints, DofRegion, GenieExpansion, NetworkGeometry, corner_points, fd_region,
    genie_sum_bound, hd_region, mimo_ic_dof, overlapped_scenario, region_contains,
    symmetric_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "ElevationSet", "IntervalSet", "combine", "from_elevation", "measure",
    "CornerPoints", "DofRegion", "GenieExpansion", "NetworkGeometry", "corner_points",
    "fd_region", "genie_sum_bound", "hd_region", "mimo_ic_dof", "overlapped_scenario",
    "region_contains", "symmetric_scenario",
]
