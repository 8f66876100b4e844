"""Caching and coded delivery for file libraries with shared subfiles.

Files are unions of subfiles indexed by the set of files containing them;
caches exploit that sharing.  The package provides closed-form rate curves
for three schemes (uncoded, shared-subfile coded, correlation-ignorant
coded) plus a cut-set converse, a capacity allocator, deterministic
assignment schedules for the coded steps, a bit-exact delivery simulator
with a transcript decoder, and an exhaustive demand-grid verifier.
"""

__version__ = "0.1.0"

from .allocation import (
    AllocationSolution,
    exhaustive_allocation_oracle,
    optimize_allocation,
)
from .delivery import (
    Transcript,
    cauc_deliver,
    cauc_place,
    cicc_deliver,
    cicc_place,
    coded_delivery_step,
    decode,
    deliver,
    place,
    random_delivery,
)
from .model import (
    CacheAllocation,
    ContentStore,
    DemandVector,
    ExperimentSpec,
    LibraryConfig,
    SubfileId,
    ratios_to_sizes,
)
from .rates import (
    LevelRateCurve,
    RatePoint,
    build_level_curve,
    cacc_alpha,
    cacc_level_rate,
    cacc_m,
    cacc_rate,
    cauc_optimal_allocation,
    cauc_rate,
    cicc_rate,
    cutset_bound,
    lower_convex_hull,
)
from .scheduling import (
    AssignmentSchedule,
    generate_schedule,
    load_schedule,
    schedule_from_text,
    schedule_to_text,
    step_demands,
    validate_schedule,
)
from .verification import (
    GridReport,
    compare_schemes,
    verify_all_demands,
    worst_case_demand,
)

__all__ = [
    "AllocationSolution",
    "AssignmentSchedule",
    "CacheAllocation",
    "ContentStore",
    "DemandVector",
    "ExperimentSpec",
    "GridReport",
    "LevelRateCurve",
    "LibraryConfig",
    "RatePoint",
    "SubfileId",
    "Transcript",
    "build_level_curve",
    "cacc_alpha",
    "cacc_level_rate",
    "cacc_m",
    "cacc_rate",
    "cauc_deliver",
    "cauc_optimal_allocation",
    "cauc_place",
    "cauc_rate",
    "cicc_deliver",
    "cicc_place",
    "cicc_rate",
    "coded_delivery_step",
    "compare_schemes",
    "cutset_bound",
    "decode",
    "deliver",
    "exhaustive_allocation_oracle",
    "generate_schedule",
    "load_schedule",
    "lower_convex_hull",
    "optimize_allocation",
    "place",
    "random_delivery",
    "ratios_to_sizes",
    "schedule_from_text",
    "schedule_to_text",
    "step_demands",
    "validate_schedule",
    "verify_all_demands",
    "worst_case_demand",
]
