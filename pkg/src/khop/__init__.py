"""Minimum-cost k-hop spanning trees of planar point sets."""

from .dp_engine import PtasConfig, PtasResult, solve, solve_shift
from .estimator import KHopSpanningTree
from .geom_instance import (ApproxParams, NormalizedInstance, RawInstance, generate_instance,
                            load_instance, normalize)
from .reference_solvers import (HopTree, exact_by_levels, exact_by_parents,
                                heuristic_local_search, prim_mst, validate_tree)

__all__ = [
    "ApproxParams", "HopTree", "KHopSpanningTree", "NormalizedInstance", "PtasConfig",
    "PtasResult", "RawInstance", "exact_by_levels", "exact_by_parents", "generate_instance",
    "heuristic_local_search", "load_instance", "normalize", "prim_mst", "solve", "solve_shift",
    "validate_tree",
]
__version__ = "0.1.0"
