import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from natfert.errors import EmptyCohortError, GridMismatchError
from natfert.model import N_BINS, CohortResult, ParameterVector, simulate_cohort
from natfert.summaries import AsfrSchedule, distance, distances, schedule_from_cohort

rates = arrays(np.float64, N_BINS, elements=st.floats(0.0, 1.0))


def test_single_birth_schedule():
    births = np.zeros(N_BINS, dtype=np.int64)
    births[305 // 12 - 10] += 1
    s = schedule_from_cohort(CohortResult(births, np.ones(N_BINS), 1))
    assert s.rates[25 - 10] == 1.0
    assert s.rates.sum() == 1.0


def test_empty_cohort_schedule():
    with pytest.raises(EmptyCohortError):
        schedule_from_cohort(CohortResult(np.zeros(N_BINS, dtype=np.int64), np.zeros(N_BINS), 0))


def test_zero_fecundability_schedule():
    s = schedule_from_cohort(simulate_cohort(ParameterVector(250.0, 30.0, 0.0, 0.0, 3), 500, 1))
    assert (s.rates == 0).all()


def test_doubled_cohort_same_rates():
    r = simulate_cohort(ParameterVector(250.0, 30.0, 0.3, 0.2, 3), 500, 1)
    doubled = CohortResult(2 * r.births_by_age, 2 * r.exposure_by_age, 2 * r.n_women)
    assert schedule_from_cohort(doubled) == schedule_from_cohort(r)


def test_simulated_rates_zero_below_ten():
    # earliest possible birth: conception at month 121 -> birth at month 130
    s = schedule_from_cohort(simulate_cohort(ParameterVector(130.0, 40.0, 0.6, 0.2, 0), 20000, 2))
    assert s.rates[0] > 0  # age-10 bin reachable with very early marriage
    assert s.ages[0] == 10 and s.ages[-1] == 49


def test_schedule_validation():
    with pytest.raises(GridMismatchError):
        AsfrSchedule(np.zeros(39))
    with pytest.raises(ValueError, match="age 12"):
        AsfrSchedule(np.r_[0, 0, -0.1, np.zeros(37)])
    with pytest.raises(ValueError):
        AsfrSchedule(np.r_[np.nan, np.zeros(39)])


def test_distance_examples():
    a = np.zeros(N_BINS)
    b = a.copy()
    b[17] = 0.1
    assert distance(a, a) == 0.0
    assert distance(a, b) == pytest.approx(0.1, abs=1e-15)
    w = np.ones(N_BINS)
    w[17] = 4.0
    assert distance(a, b, weights=w) == pytest.approx(0.2, abs=1e-15)


def test_distance_grid_mismatch():
    with pytest.raises(GridMismatchError):
        distance(np.zeros(40), np.zeros(35))
    with pytest.raises(GridMismatchError):
        distances(np.zeros((3, 35)), np.zeros(35))


@given(rates, rates)
def test_distance_symmetric_and_definite(a, b):
    assert distance(a, b) == distance(b, a)
    assert (distance(a, b) == 0) == np.array_equal(a, b)


@given(rates, rates, rates)
def test_triangle_inequality(a, b, c):
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12


@given(arrays(np.float64, (5, N_BINS), elements=st.floats(0, 1)), rates)
def test_rowwise_matches_pairwise(table, y):
    d = distances(table, y)
    assert d == pytest.approx([distance(row, y) for row in table], abs=0)
