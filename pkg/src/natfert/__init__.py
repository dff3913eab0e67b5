"""Natural-fertility microsimulation with ABC + forest regression adjustment."""

import numba as _nb

# skip the TBB probe (and its version warning); OpenMP then the built-in pool
_nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .abc import PosteriorSample, Prior, ReferenceTable, build_reference_table, reject, sample_prior  # noqa: E402
from .adjust import ForestConfig, ForestModel, adjust, fit_forest  # noqa: E402
from .model import (  # noqa: E402
    CohortResult,
    FecundabilityCurve,
    ParameterVector,
    WomanTrajectory,
    draw_marriage_age,
    fecundability_at,
    mean_children_per_woman,
    simulate_cohort,
    simulate_woman,
)
from .summaries import AsfrSchedule, distance, schedule_from_cohort  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "AsfrSchedule",
    "CohortResult",
    "FecundabilityCurve",
    "ForestConfig",
    "ForestModel",
    "ParameterVector",
    "PosteriorSample",
    "Prior",
    "ReferenceTable",
    "WomanTrajectory",
    "adjust",
    "build_reference_table",
    "distance",
    "draw_marriage_age",
    "fecundability_at",
    "fit_forest",
    "mean_children_per_woman",
    "reject",
    "sample_prior",
    "schedule_from_cohort",
    "simulate_cohort",
    "simulate_woman",
]
