import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from natfert.abc import (
    DEFAULT_BOUNDS,
    Acceptance,
    Prior,
    ReferenceTable,
    accepted_count,
    build_reference_table,
    reject,
    sample_prior,
)
from natfert.errors import ZeroAcceptanceError
from natfert.model import N_BINS, PARAM_NAMES, ParameterVector, simulate_cohort
from natfert.summaries import schedule_from_cohort


@pytest.fixture(scope="module")
def small_table():
    return build_reference_table(Prior(), 400, 300, 31)


def fake_table(n, rng):
    return ReferenceTable(rng.random((n, 5)), rng.random((n, N_BINS)), np.arange(n, dtype=np.uint64), 10)


def test_prior_validation():
    with pytest.raises(ValueError):
        Prior({**DEFAULT_BOUNDS, "delta": (5.0, 5.0)})
    with pytest.raises(ValueError):
        Prior({**DEFAULT_BOUNDS, "phi_1": (-0.1, 0.5)})
    with pytest.raises(ValueError):
        Prior({k: v for k, v in DEFAULT_BOUNDS.items() if k != "mu_m"})
    with pytest.raises(ValueError):
        Prior({**DEFAULT_BOUNDS, "phi_1": (0.0, 3.0), "phi_2": (0.0, 3.0)})
    with pytest.raises(ValueError):
        Prior({**DEFAULT_BOUNDS, "lambda": (0.0, 1.0)})


def test_sample_prior_empty():
    assert sample_prior(Prior(), 0, 1).shape == (0, 5)


def test_sample_prior_support():
    prior = Prior()
    theta = sample_prior(prior, 100_000, 3)
    assert prior.contains(theta).all()
    assert set(np.unique(theta[:, 4])) <= set(range(25))
    for row in theta[:50]:
        ParameterVector.from_array(row)


def test_sample_prior_moments():
    prior = Prior()
    theta = sample_prior(prior, 1_000_000, 4)
    mid = (prior.lower + prior.upper) / 2
    se = (prior.upper - prior.lower) / np.sqrt(12) / np.sqrt(len(theta))
    assert np.all(np.abs(theta.mean(axis=0) - mid) < 3 * se)


def test_sample_prior_deterministic():
    np.testing.assert_array_equal(sample_prior(Prior(), 100, 9), sample_prior(Prior(), 100, 9))
    assert not np.array_equal(sample_prior(Prior(), 100, 9), sample_prior(Prior(), 100, 10))


def test_reference_table_basics(small_table):
    t = small_table
    assert len(t) == 400 and t.n_marriages == 300
    assert t.rates.shape == (400, N_BINS)
    for i in range(5):
        again = schedule_from_cohort(simulate_cohort(ParameterVector.from_array(t.theta[i]), 300, int(t.seeds[i])))
        np.testing.assert_array_equal(again.rates, t.rates[i])


def test_reference_table_rebuild_identical(small_table):
    again = build_reference_table(Prior(), 400, 300, 31, n_threads=3)
    assert again.to_csv_text() == small_table.to_csv_text()


def test_low_fecundability_entries_near_zero():
    prior = Prior({**DEFAULT_BOUNDS, "phi_1": (0.0, 1e-4), "phi_2": (0.0, 1e-4)})
    t = build_reference_table(prior, 30, 200, 5)
    assert t.rates.sum(axis=1).max() < 0.1


def test_reference_table_csv_roundtrip(small_table, tmp_path):
    (tmp_path / "t.csv").write_text(small_table.to_csv_text())
    (tmp_path / "t.json").write_text(small_table.sidecar_text())
    back = ReferenceTable.read(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.theta, small_table.theta)
    np.testing.assert_array_equal(back.rates, small_table.rates)
    np.testing.assert_array_equal(back.seeds, small_table.seeds)
    assert back.n_marriages == 300 and back.prior == small_table.prior and back.master_seed == 31


def test_reject_infinite_epsilon(rng):
    t = fake_table(50, rng)
    assert len(reject(t, rng.random(N_BINS), epsilon=np.inf)) == 50


def test_reject_quantile_takes_smallest(rng):
    t = fake_table(1000, rng)
    y = rng.random(N_BINS)
    s = reject(t, y, quantile=0.01)
    assert len(s) == 10
    brute = sorted(range(1000), key=lambda i: (np.sqrt(((t.rates[i] - y) ** 2).sum()), i))[:10]
    assert list(s.indices) == brute
    assert np.all(np.diff(s.distances) >= 0)
    np.testing.assert_array_equal(s.theta, t.theta[brute])
    np.testing.assert_array_equal(s.summaries, t.rates[brute])


def test_accepted_count_rounding():
    assert accepted_count(100_000, 0.005) == 500
    assert accepted_count(1000, 0.01) == 10
    assert accepted_count(7, 0.5) == 4
    with pytest.raises(ValueError):
        accepted_count(10, 0.0)


@given(st.integers(0, 199), st.floats(0.005, 1.0))
def test_self_entry_always_accepted(i, q):
    rng = np.random.default_rng(i)
    t = fake_table(200, rng)
    assert i in reject(t, t.rates[i], quantile=max(q, 1 / 200)).indices


def test_ties_broken_by_index():
    rates = np.zeros((6, N_BINS))
    rates[[1, 4], 0] = 1.0
    t = ReferenceTable(np.zeros((6, 5)), rates, np.zeros(6, dtype=np.uint64), 1)
    assert list(reject(t, np.zeros(N_BINS), quantile=0.5).indices) == [0, 2, 3]


def test_zero_acceptance(rng):
    t = fake_table(20, rng)
    with pytest.raises(ZeroAcceptanceError):
        reject(t, t.rates[0] + 10, epsilon=0.5)


def test_reject_argument_checks(rng):
    t = fake_table(5, rng)
    with pytest.raises(ValueError):
        reject(t, t.rates[0])
    with pytest.raises(ValueError):
        reject(t, t.rates[0], epsilon=1.0, quantile=0.5)


@given(st.floats(0.5, 3.0), st.floats(0.5, 3.0), st.integers(0, 1000))
def test_acceptance_monotone_in_epsilon(e1, e2, seed):
    rng = np.random.default_rng(seed)
    t = fake_table(100, rng)
    y = rng.random(N_BINS)
    lo, hi = sorted((e1, e2))

    def accepted(eps):
        try:
            return set(reject(t, y, epsilon=eps).indices)
        except ZeroAcceptanceError:
            return set()

    assert accepted(lo) <= accepted(hi)


@given(st.integers(1, 100), st.integers(0, 1000))
def test_quantile_and_threshold_agree(k, seed):
    rng = np.random.default_rng(seed)
    t = fake_table(100, rng)
    y = rng.random(N_BINS)
    by_q = reject(t, y, quantile=k / 100)
    eps = np.nextafter(by_q.distances[-1], np.inf)
    assert set(by_q.indices) == set(reject(t, y, epsilon=eps).indices)


def test_acceptance_config():
    with pytest.raises(ValueError):
        Acceptance("median", 0.1)
    with pytest.raises(ValueError):
        Acceptance("quantile", 1.5)
    with pytest.raises(ValueError):
        Acceptance("epsilon", 0.0)


def test_posterior_narrows_for_marriage_mean():
    prior = Prior()
    table = build_reference_table(prior, 3000, 1000, 8)
    truth = ParameterVector(252.0, 36.0, 0.25, 0.15, 10)
    y = schedule_from_cohort(simulate_cohort(truth, 1000, 99))
    s = reject(table, y, quantile=0.02)
    assert prior.contains(s.theta).all()
    prior_sd = (prior.upper - prior.lower) / np.sqrt(12)
    mu = PARAM_NAMES.index("mu_m")
    assert s.theta[:, mu].std() < 0.5 * prior_sd[mu]
    assert abs(s.theta[:, mu].mean() - 252.0) < 20
