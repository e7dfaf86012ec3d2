"""LRU hit probabilities under non-stationary content popularity."""
from .analytic import (
    ContentClass,
    ModelSolution,
    NonStationaryCheModel,
    TrafficMix,
    asymptote,
    cache_occupancy,
    hit_probability,
    occupancy_bounds,
    small_cache_estimate,
    solve,
    solve_curve,
    solve_eviction_time,
    tail_gap_bound,
)
from .profiles import (
    ExponentialProfile,
    PowerLawProfile,
    TriangularProfile,
    UniformProfile,
    make_profile,
)
from .simulator import LRUSimulator, estimate_hit_curve, simulate_irm
from .stationary import StationaryCheModel, ZipfCatalog
from .volumes import DeterministicVolume, ParetoVolume

__version__ = "0.1.0"

__all__ = [
    "ContentClass",
    "ModelSolution",
    "NonStationaryCheModel",
    "TrafficMix",
    "asymptote",
    "cache_occupancy",
    "hit_probability",
    "occupancy_bounds",
    "small_cache_estimate",
    "solve",
    "solve_curve",
    "solve_eviction_time",
    "tail_gap_bound",
    "ExponentialProfile",
    "PowerLawProfile",
    "TriangularProfile",
    "UniformProfile",
    "make_profile",
    "LRUSimulator",
    "estimate_hit_curve",
    "simulate_irm",
    "StationaryCheModel",
    "ZipfCatalog",
    "DeterministicVolume",
    "ParetoVolume",
]
