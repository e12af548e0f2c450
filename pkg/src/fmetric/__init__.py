"""Spanners and nearest neighbours in metric spaces where distances are expensive.

Only calls to the distance oracle are counted.  Bookkeeping with the
triangle inequality is treated as free.
"""
from .ann import AnnInstance, AnnResult, ann_search, brute_force_nn, prefilter_with_approx
from .bounds import BoundMatrix, InconsistentMetricError
from .harness import ExperimentSpec, fit_exponent, run_experiment
from .kernels import available_backends
from .metric import DistanceOracle, PointSet, generate_pointset
from .spanner import Spanner, Strategy, build_blind_spanner, build_greedy_spanner, verify_stretch
from .wspd import WspdPair, build_wspd, build_wspd_spanner

__version__ = "0.1.0"

__all__ = [
    "AnnInstance",
    "AnnResult",
    "BoundMatrix",
    "DistanceOracle",
    "ExperimentSpec",
    "InconsistentMetricError",
    "PointSet",
    "Spanner",
    "Strategy",
    "WspdPair",
    "ann_search",
    "available_backends",
    "brute_force_nn",
    "build_blind_spanner",
    "build_greedy_spanner",
    "build_wspd",
    "build_wspd_spanner",
    "fit_exponent",
    "generate_pointset",
    "prefilter_with_approx",
    "run_experiment",
    "verify_stretch",
]
