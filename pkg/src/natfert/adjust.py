"""Forest regression adjustment of accepted ABC draws."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .abc import PosteriorSample
from .errors import DimensionMismatchError, TooFewSamplesError
from .forest import RegressionForest
from .model import N_BINS, PARAM_NAMES

# sigma_m, phi_1, phi_2, delta cannot go below zero
NONNEGATIVE = np.array([False, True, True, True, True])


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    min_samples_leaf: int = 5
    max_features: int = math.ceil(N_BINS / 3)
    bootstrap: bool = True

    def to_dict(self):
        return asdict(self)


def _dim_seed(seed, dim):
    return int(np.random.SeedSequence([int(seed), dim]).generate_state(1, np.uint64)[0])


class ForestModel:
    """One forest per parameter, mapping a 40-bin schedule to that parameter."""

    def __init__(self, forests, config, seed, training_summaries=None):
        self.forests = forests
        self.config = config
        self.seed = seed
        self.training_summaries = training_summaries

    def predict(self, summaries, n_threads=None):
        X = np.atleast_2d(np.asarray(summaries, dtype=float))
        if X.shape[1] != N_BINS:
            raise DimensionMismatchError(f"expected {N_BINS} summary columns, got {X.shape[1]}")
        return np.column_stack([f.predict(X, n_threads) for f in self.forests])

    def oob_fitted(self, summaries, n_threads=None):
        """Out-of-bag fitted values for the training rows.

        Rows that were in every bootstrap sample (or inputs that are not the
        training set) fall back to ordinary predictions.
        """
        X = np.atleast_2d(np.asarray(summaries, dtype=float))
        full = self.predict(X, n_threads)
        if self.training_summaries is None or not np.array_equal(X, self.training_summaries):
            return full
        oob = np.column_stack([f.oob_prediction_ for f in self.forests])
        return np.where(np.isnan(oob), full, oob)

    @property
    def oob_mse(self):
        return np.array([f.oob_mse_ for f in self.forests])

    @property
    def oob_r2(self):
        return np.array([f.oob_r2_ for f in self.forests])


def fit_forest(summaries, theta, config=None, seed=0, *, n_threads=None):
    """Train one forest per column of ``theta`` on the accepted (summary, theta) pairs."""
    config = config or ForestConfig()
    X = np.asarray(summaries, dtype=float)
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if X.ndim != 2 or X.shape[1] != N_BINS:
        raise DimensionMismatchError(f"summaries must be (n, {N_BINS}), got {X.shape}")
    if len(theta) != len(X):
        raise DimensionMismatchError(f"{len(X)} summaries but {len(theta)} parameter rows")
    if len(X) < max(2, config.min_samples_leaf):
        raise TooFewSamplesError(f"{len(X)} accepted draws; at least {max(2, config.min_samples_leaf)} needed")
    forests = []
    for d in range(theta.shape[1]):
        rf = RegressionForest(
            config.n_trees, config.min_samples_leaf, config.max_features, config.bootstrap, _dim_seed(seed, d)
        )
        forests.append(rf.fit(X, theta[:, d], n_threads))
    return ForestModel(forests, config, seed, X.copy())


def adjust(sample, model, y_obs, *, residuals="oob", clamp=True, n_threads=None):
    """theta_adj = m(y_obs) + (theta_i - m(y_i)), per parameter.

    With ``residuals="oob"`` each m(y_i) is the out-of-bag prediction, so a
    draw's own parameter value does not leak into its fitted value; with
    ``"in_sample"`` the full forest is used. Non-negative parameters are
    clamped at zero afterwards; the number of clamped values is kept on the
    result.
    """
    if residuals not in ("oob", "in_sample"):
        raise ValueError(f"residuals must be 'oob' or 'in_sample', got {residuals!r}")
    if sample.summaries is None:
        raise ValueError("sample carries no summaries; produce it with reject()")
    y_obs = getattr(y_obs, "rates", y_obs)
    y_obs = np.asarray(y_obs, dtype=float).reshape(1, -1)
    if y_obs.shape[1] != N_BINS or sample.theta.shape[1] != len(model.forests):
        raise DimensionMismatchError("observed schedule or parameter dimension does not match the model")
    at_obs = model.predict(y_obs, n_threads)[0]
    if residuals == "oob":
        at_sims = model.oob_fitted(sample.summaries, n_threads)
    else:
        at_sims = model.predict(sample.summaries, n_threads)
    adjusted = at_obs + (sample.theta - at_sims)
    n_clamped = 0
    if clamp:
        below = (adjusted < 0) & NONNEGATIVE
        n_clamped = int(below.sum())
        adjusted = np.where(below, 0.0, adjusted)
    return PosteriorSample(
        adjusted,
        sample.distances,
        sample.indices,
        adjusted=True,
        raw_theta=sample.theta,
        summaries=sample.summaries,
        n_clamped=n_clamped,
    )


def posterior_columns():
    return [*PARAM_NAMES, *(f"{n}_adj" for n in PARAM_NAMES), "distance"]
