"""Age-specific fertility schedules and distances between them."""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCohortError, GridMismatchError
from .model import AGES, N_BINS


@dataclass(frozen=True)
class AsfrSchedule:
    """Births per woman-year for single years of age 10..49.

    ``padded_ages`` lists ages that were absent from the source and filled
    with zero.
    """

    rates: np.ndarray
    padded_ages: tuple = ()

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        if rates.shape != (N_BINS,):
            raise GridMismatchError(f"expected {N_BINS} single-year rates, got shape {rates.shape}")
        if not np.all(np.isfinite(rates)):
            raise ValueError("rates must be finite")
        if np.any(rates < 0):
            raise ValueError(f"negative rate at age {int(AGES[np.argmax(rates < 0)])}")
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)

    @property
    def ages(self):
        return AGES

    @property
    def total_fertility(self):
        return float(self.rates.sum())

    def __eq__(self, other):
        return isinstance(other, AsfrSchedule) and np.array_equal(self.rates, other.rates)

    __hash__ = None


def schedule_from_cohort(result):
    if result.n_women <= 0:
        raise EmptyCohortError("cannot compute rates for an empty cohort")
    return AsfrSchedule(result.births_by_age / result.exposure_by_age)


def _as_rates(x):
    return x.rates if isinstance(x, AsfrSchedule) else np.asarray(x, dtype=float)


def distances(table_rates, y_obs, weights=None):
    """Row-wise distance from every schedule in an (n, 40) array to ``y_obs``."""
    diff = np.atleast_2d(_as_rates(table_rates)) - _as_rates(y_obs)
    if diff.shape[-1] != N_BINS:
        raise GridMismatchError(f"schedules must have {N_BINS} bins, got {diff.shape[-1]}")
    # scale each row by its largest difference so tiny gaps do not underflow to 0
    scale = np.abs(diff).max(axis=1, initial=0.0)
    safe = np.where(scale > 0, scale, 1.0)
    sq = (diff / safe[:, None]) ** 2
    if weights is not None:
        sq = sq * np.asarray(weights, dtype=float)
    return scale * np.sqrt(sq.sum(axis=1))


def distance(a, b, weights=None):
    """Euclidean distance between two schedules, optionally per-bin weighted."""
    ra, rb = _as_rates(a), _as_rates(b)
    if ra.shape != rb.shape:
        raise GridMismatchError(f"age grids differ: {ra.shape} vs {rb.shape}")
    return float(distances(ra[None, :], rb, weights)[0])
