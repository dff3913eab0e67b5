"""Rejection ABC: prior sampling, prior-predictive reference tables, acceptance."""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ZeroAcceptanceError
from .model import AGES, N_BINS, PARAM_NAMES, simulate_batch, unclamped_peak
from .summaries import AsfrSchedule, distances

DEFAULT_BOUNDS = {
    "mu_m": (180.0, 420.0),
    "sigma_m": (6.0, 120.0),
    "phi_1": (0.0, 0.6),
    "phi_2": (0.0, 0.6),
    "delta": (0.0, 24.0),
}

RATE_COLUMNS = tuple(f"rate_{a}" for a in AGES)

# SeedSequence spawn keys for the independent streams derived from a master seed
_PRIOR_STREAM = 0
_SIM_SEED_STREAM = 1


def _generator(master_seed, stream):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(master_seed), stream])))


@dataclass(frozen=True)
class Prior:
    """Independent uniforms on a box; ``bounds`` maps parameter name to (low, high)."""

    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))

    def __post_init__(self):
        missing = set(PARAM_NAMES) - set(self.bounds)
        if missing:
            raise ValueError(f"prior bounds missing for {sorted(missing)}")
        unknown = set(self.bounds) - set(PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown prior parameters {sorted(unknown)}")
        b = {k: (float(lo), float(hi)) for k, (lo, hi) in self.bounds.items()}
        for name, (lo, hi) in b.items():
            if not lo < hi:
                raise ValueError(f"prior for {name}: lower {lo} must be below upper {hi}")
        if b["mu_m"][0] <= 0 or b["sigma_m"][0] <= 0:
            raise ValueError("mu_m and sigma_m bounds must be positive")
        if min(b["phi_1"][0], b["phi_2"][0], b["delta"][0]) < 0:
            raise ValueError("phi_1, phi_2 and delta bounds must be non-negative")
        if unclamped_peak(b["phi_1"][1], b["phi_2"][1]) > 1.0:
            raise ValueError("upper phi bounds allow fecundability above 1")
        object.__setattr__(self, "bounds", b)

    @property
    def lower(self):
        return np.array([self.bounds[k][0] for k in PARAM_NAMES])

    @property
    def upper(self):
        return np.array([self.bounds[k][1] for k in PARAM_NAMES])

    def contains(self, theta):
        theta = np.atleast_2d(theta)
        return np.all((theta >= self.lower) & (theta <= self.upper), axis=1)

    def to_dict(self):
        return {k: list(self.bounds[k]) for k in PARAM_NAMES}


def sample_prior(prior, n_draws, master_seed):
    """(n_draws, 5) uniform draws in the prior box; delta rounded to whole months."""
    n_draws = int(n_draws)
    if n_draws < 0:
        raise ValueError("n_draws must be >= 0")
    u = _generator(master_seed, _PRIOR_STREAM).random((n_draws, len(PARAM_NAMES)))
    theta = prior.lower + u * (prior.upper - prior.lower)
    theta[:, 4] = np.floor(theta[:, 4] + 0.5)
    return theta


def simulation_seeds(n_draws, master_seed):
    return _generator(master_seed, _SIM_SEED_STREAM).integers(
        0, 2**64, size=int(n_draws), dtype=np.uint64, endpoint=False
    )


@dataclass
class ReferenceTable:
    theta: np.ndarray  # (n, 5)
    rates: np.ndarray  # (n, 40)
    seeds: np.ndarray  # (n,) uint64
    n_marriages: int
    prior: Prior = None
    master_seed: int = None

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.rates = np.asarray(self.rates, dtype=float)
        self.seeds = np.asarray(self.seeds, dtype=np.uint64)
        n = len(self.theta)
        if self.theta.shape != (n, 5) or self.rates.shape != (n, N_BINS) or self.seeds.shape != (n,):
            raise ValueError("reference table arrays have inconsistent shapes")

    def __len__(self):
        return len(self.theta)

    def entries(self):
        for th, y, s in zip(self.theta, self.rates, self.seeds):
            yield th, AsfrSchedule(y), int(s)

    def without(self, index):
        keep = np.ones(len(self), dtype=bool)
        keep[index] = False
        return ReferenceTable(
            self.theta[keep], self.rates[keep], self.seeds[keep], self.n_marriages, self.prior, self.master_seed
        )

    def sidecar(self):
        return {
            "n_draws": len(self),
            "n_marriages": int(self.n_marriages),
            "master_seed": self.master_seed,
            "prior": self.prior.to_dict() if self.prior else None,
            "columns": list(PARAM_NAMES) + list(RATE_COLUMNS) + ["seed"],
        }

    def to_csv_text(self):
        lines = [",".join(list(PARAM_NAMES) + list(RATE_COLUMNS) + ["seed"])]
        for th, y, s in zip(self.theta, self.rates, self.seeds):
            lines.append(",".join([*(repr(float(v)) for v in th), *(repr(float(v)) for v in y), str(int(s))]))
        return "\n".join(lines) + "\n"

    def sidecar_text(self):
        return json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def read(cls, csv_path, json_path=None):
        csv_path = Path(csv_path)
        json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
        meta = json.loads(json_path.read_text())
        with open(csv_path) as fh:
            header = fh.readline().strip().split(",")
            expected = list(PARAM_NAMES) + list(RATE_COLUMNS) + ["seed"]
            if header != expected:
                raise ValueError(f"{csv_path}: unexpected header")
            rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
        theta = np.array([[float(v) for v in r[:5]] for r in rows]).reshape(-1, 5)
        rates = np.array([[float(v) for v in r[5:-1]] for r in rows]).reshape(-1, N_BINS)
        seeds = np.array([int(r[-1]) for r in rows], dtype=np.uint64)
        prior = Prior(meta["prior"]) if meta.get("prior") else None
        return cls(theta, rates, seeds, meta["n_marriages"], prior, meta.get("master_seed"))


def build_reference_table(prior, n_draws, n_marriages, master_seed, *, n_threads=None):
    """Prior-predictive table: one cohort of ``n_marriages`` women per prior draw."""
    if int(n_draws) <= 0 or int(n_marriages) <= 0:
        raise ValueError("n_draws and n_marriages must be positive")
    theta = sample_prior(prior, n_draws, master_seed)
    seeds = simulation_seeds(n_draws, master_seed)
    births = simulate_batch(theta, seeds, n_marriages, n_threads=n_threads)
    return ReferenceTable(theta, births / float(n_marriages), seeds, int(n_marriages), prior, int(master_seed))


@dataclass
class PosteriorSample:
    """Accepted draws sorted by distance (ties by table index).

    For an adjusted sample ``theta`` holds the adjusted values and
    ``raw_theta`` the accepted ones they came from.
    """

    theta: np.ndarray
    distances: np.ndarray
    indices: np.ndarray
    adjusted: bool = False
    raw_theta: np.ndarray = None
    summaries: np.ndarray = None
    n_clamped: int = 0

    def __len__(self):
        return len(self.theta)

    @property
    def mean(self):
        return self.theta.mean(axis=0)


def accepted_count(n, quantile):
    if not 0 < quantile <= 1:
        raise ValueError(f"quantile must lie in (0, 1], got {quantile}")
    # round() guards against products like 0.005 * 100000 = 500.00000000000006
    return max(1, math.ceil(round(quantile * n, 9)))


def reject(table, y_obs, *, epsilon=None, quantile=None, weights=None):
    """Accept table entries close to ``y_obs``.

    Exactly one of ``epsilon`` (keep distance < epsilon) or ``quantile``
    (keep the ceil(q * N) closest entries) must be given.
    """
    if (epsilon is None) == (quantile is None):
        raise ValueError("give exactly one of epsilon or quantile")
    if len(table) == 0:
        raise ValueError("reference table is empty")
    d = distances(table.rates, y_obs, weights)
    order = np.argsort(d, kind="stable")
    if quantile is not None:
        keep = order[: accepted_count(len(table), quantile)]
    else:
        keep = order[d[order] < epsilon]
        if len(keep) == 0:
            raise ZeroAcceptanceError(f"no simulation within epsilon={epsilon} (closest {d.min():.6g})")
    return PosteriorSample(table.theta[keep].copy(), d[keep], keep, summaries=table.rates[keep].copy())


@dataclass(frozen=True)
class Acceptance:
    """Rejection rule: ``mode`` is "quantile" or "epsilon"."""

    mode: str = "quantile"
    value: float = 0.005

    def __post_init__(self):
        if self.mode not in ("quantile", "epsilon"):
            raise ValueError(f"acceptance mode must be 'quantile' or 'epsilon', got {self.mode!r}")
        if self.mode == "quantile" and not 0 < self.value <= 1:
            raise ValueError("quantile must lie in (0, 1]")
        if self.mode == "epsilon" and not self.value > 0:
            raise ValueError("epsilon must be positive")

    def apply(self, table, y_obs, weights=None):
        return reject(table, y_obs, weights=weights, **{self.mode: self.value})
