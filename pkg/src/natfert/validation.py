"""Leave-one-out cross-validation and posterior-predictive bands."""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .abc import Acceptance
from .adjust import ForestConfig, adjust, fit_forest
from .errors import ZeroVarianceError
from .model import AGES, PARAM_NAMES, simulate_batch

_HELDOUT_STREAM = 2
_PREDICTIVE_STREAM = 3


def prediction_error(estimates, truths, variances=None):
    """Squared estimation errors standardized by parameter variance, summed over draws.

    ``variances`` defaults to the sample variance (ddof=1) of ``truths``.
    Returns (per-parameter errors, their total).
    """
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    tru = np.atleast_2d(np.asarray(truths, dtype=float))
    if est.shape != tru.shape:
        raise ValueError(f"estimates {est.shape} and truths {tru.shape} differ in shape")
    if variances is None:
        if len(tru) < 2:
            raise ZeroVarianceError("need at least two truths to estimate a variance")
        variances = tru.var(axis=0, ddof=1)
    variances = np.broadcast_to(np.asarray(variances, dtype=float), est.shape[1:])
    if np.any(variances <= 0):
        raise ZeroVarianceError(f"non-positive variance for parameter(s) {np.flatnonzero(variances <= 0).tolist()}")
    per_param = ((tru - est) ** 2 / variances).sum(axis=0)
    return per_param, float(per_param.sum())


def _fold_seed(master_seed, fold):
    return int(np.random.SeedSequence([int(master_seed), _HELDOUT_STREAM, fold]).generate_state(1, np.uint64)[0])


@dataclass
class CrossValReport:
    indices: np.ndarray
    truths: np.ndarray
    estimates: np.ndarray
    variances: np.ndarray = None
    errors: np.ndarray = None  # per-parameter prediction error
    total: float = float("nan")
    n_accepted: list = field(default_factory=list)

    @property
    def defined(self):
        return self.errors is not None

    def squared_standardized(self):
        return (self.truths - self.estimates) ** 2 / self.variances

    def folds_csv_text(self):
        cols = ["fold", "index", *(f"{n}_true" for n in PARAM_NAMES), *(f"{n}_est" for n in PARAM_NAMES)]
        cols += [f"{n}_sqerr" for n in PARAM_NAMES]
        lines = [",".join(cols)]
        sq = self.squared_standardized() if self.defined else np.full_like(self.truths, np.nan)
        for k, idx in enumerate(self.indices):
            row = [str(k), str(int(idx))]
            row += [repr(float(v)) for v in (*self.truths[k], *self.estimates[k], *sq[k])]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def summary(self):
        out = {"n_heldout": len(self.indices), "defined": self.defined, "variance": "sample (ddof=1) over held-out truths"}
        if self.defined:
            out["prediction_error"] = {n: float(v) for n, v in zip(PARAM_NAMES, self.errors)}
            out["total"] = self.total
        return out

    def summary_text(self):
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def heldout_indices(n_table, n_heldout, master_seed):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(master_seed), _HELDOUT_STREAM])))
    return np.sort(rng.choice(n_table, size=n_heldout, replace=False))


def cross_validate(
    table, n_heldout=100, acceptance=None, forest_config=None, master_seed=0, *, indices=None, weights=None, n_threads=None
):
    """Treat randomly chosen table entries as pseudo-observed and re-estimate them.

    For each held-out entry the rest of the table goes through rejection,
    forest fitting and adjustment; the adjusted posterior mean is the
    estimate. ``indices`` overrides the random choice of held-out entries;
    ``weights`` are per-age distance weights.
    """
    acceptance = acceptance or Acceptance()
    forest_config = forest_config or ForestConfig()
    if indices is not None:
        idx = np.asarray(indices, dtype=np.int64)
        n_heldout = len(idx)
    else:
        n_heldout = int(n_heldout)
        if n_heldout >= len(table):
            warnings.warn(f"n_heldout={n_heldout} reduced to {len(table) - 1} (table has {len(table)} entries)", stacklevel=2)
            n_heldout = max(len(table) - 1, 0)
        idx = heldout_indices(len(table), n_heldout, master_seed)
    truths = table.theta[idx].copy()
    estimates = np.empty_like(truths)
    n_accepted = []
    for k, i in enumerate(idx):
        rest = table.without(i)
        y = table.rates[i]
        sample = acceptance.apply(rest, y, weights)
        model = fit_forest(sample.summaries, sample.theta, forest_config, _fold_seed(master_seed, k), n_threads=n_threads)
        estimates[k] = adjust(sample, model, y, n_threads=n_threads).mean
        n_accepted.append(len(sample))
    report = CrossValReport(idx, truths, estimates, n_accepted=n_accepted)
    if n_heldout >= 2:
        report.variances = truths.var(axis=0, ddof=1)
        report.errors, report.total = prediction_error(estimates, truths, report.variances)
    return report


@dataclass
class PredictiveBand:
    lo: np.ndarray
    median: np.ndarray
    hi: np.ndarray
    observed: np.ndarray = None
    simulations: np.ndarray = field(default=None, repr=False)

    @property
    def ages(self):
        return AGES

    def covers(self, observed=None):
        """Boolean per age: observed rate inside [lo, hi]."""
        obs = self.observed if observed is None else getattr(observed, "rates", observed)
        obs = np.asarray(obs, dtype=float)
        return (obs >= self.lo) & (obs <= self.hi)

    def to_csv_text(self):
        lines = ["age,lo,median,hi,observed"]
        obs = self.observed if self.observed is not None else [None] * len(AGES)
        for a, lo, md, hi, ob in zip(AGES, self.lo, self.median, self.hi, obs):
            lines.append(f"{a},{lo!r},{md!r},{hi!r},{'' if ob is None else repr(float(ob))}")
        return "\n".join(lines) + "\n"


def physical(theta):
    """Project parameter rows onto values the simulator accepts."""
    theta = np.array(theta, dtype=float, copy=True)
    theta[:, 0] = np.maximum(theta[:, 0], 1.0)
    theta[:, 1:] = np.maximum(theta[:, 1:], 0.0)
    theta[:, 4] = np.floor(theta[:, 4] + 0.5)
    return theta


def predictive_seeds(n, master_seed):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(master_seed), _PREDICTIVE_STREAM])))
    return rng.integers(0, 2**64, size=n, dtype=np.uint64, endpoint=False)


def posterior_predictive(sample, n_marriages, draws_per_theta=1, master_seed=0, *, observed=None, n_threads=None):
    """Per-age 2.5 / 50 / 97.5 percentiles of rates simulated from posterior draws."""
    if len(sample) == 0:
        raise ValueError("posterior sample is empty")
    theta = np.repeat(physical(sample.theta), int(draws_per_theta), axis=0)
    seeds = predictive_seeds(len(theta), master_seed)
    rates = simulate_batch(theta, seeds, n_marriages, n_threads=n_threads) / float(n_marriages)
    lo, md, hi = np.quantile(rates, [0.025, 0.5, 0.975], axis=0)
    if observed is not None:
        observed = np.asarray(getattr(observed, "rates", observed), dtype=float)
    return PredictiveBand(lo, md, hi, observed, rates)
