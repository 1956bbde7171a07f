"""Alternative constructions coupled to the reference engine through
shared site-keyed randomness, plus executable checks of the coupling
guarantees (pathwise trace identity, per-seed dominations, exact
change-tracking identities, monotonicity)."""

from .pathswap import (PathSwapResult, run_path_swapping,
                       check_change_tracking, ChangeTrackingReport)
from .sequential import (SequentialRun, run_sequential,
                         sequential_dominance_check, SequentialDominanceReport)
from .polarized import PolarizedResult, run_polarized, random_polarity
from .monotone import MonotonicityReport, check_monotonicity

__all__ = [
    "PathSwapResult", "run_path_swapping",
    "check_change_tracking", "ChangeTrackingReport",
    "SequentialRun", "run_sequential",
    "sequential_dominance_check", "SequentialDominanceReport",
    "PolarizedResult", "run_polarized", "random_polarity",
    "MonotonicityReport", "check_monotonicity",
]
