"""Tethered robot path planning on occupancy grids.

Optimal tethered motions are obtained by shortening untethered curves
between pre-calculated goal configurations; a brute-force workspace
oracle checks the results.
"""

from .curve import Polyline, concat, length, prefix, reverse
from .gcp import Configuration, GCPResult, gcp, home_configuration
from .gridmap import GridWorld, inflate, load_map, load_map_file, raster_segment, segment_free
from .homotopy import HSignature, compose, homotopic, invert, reduce, signature
from .oracle import build_workspace, oracle_tp, verify_convexity, verify_simply_connected
from .planner import (
    Solution,
    UnreachableGoalError,
    gtsp_solve,
    induced_tether_profile,
    min_required_tether,
    tmv,
    tp,
    tr,
    ttsp,
)
from .render import render_svg
from .shorten import is_self_crossing, segment_clear, shorten, taut_tether

__all__ = [
    "Configuration",
    "GCPResult",
    "GridWorld",
    "HSignature",
    "Polyline",
    "Solution",
    "UnreachableGoalError",
    "build_workspace",
    "compose",
    "concat",
    "gcp",
    "gtsp_solve",
    "home_configuration",
    "homotopic",
    "induced_tether_profile",
    "inflate",
    "invert",
    "is_self_crossing",
    "length",
    "load_map",
    "load_map_file",
    "min_required_tether",
    "oracle_tp",
    "prefix",
    "raster_segment",
    "reduce",
    "render_svg",
    "reverse",
    "segment_clear",
    "segment_free",
    "shorten",
    "signature",
    "taut_tether",
    "tmv",
    "tp",
    "tr",
    "ttsp",
    "verify_convexity",
    "verify_simply_connected",
]
