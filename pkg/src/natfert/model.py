"""Monthly microsimulation of reproductive life courses under natural fertility.

Time runs in whole months from birth (month 0) to exact age 50 (month 600).
A woman marries at a lognormal age, and from then on is exposed to
conception whenever she is neither pregnant nor amenorrheic. State machine
for a conception in month ``t``:

* month ``t`` is the exposed month in which the conception happens;
* the birth is recorded in month ``t + 9`` (dropped if that is >= 600);
* months ``t + 1 .. t + 9 + delta`` are non-susceptible;
* exposure resumes in month ``t + 10 + delta``.

Conception inside an exposure spell starting at month ``s`` is drawn by
inversion: with one uniform ``U`` per spell, conception happens in the first
month ``t >= s`` whose spell survival ``prod_{k=s..t} (1 - phi_k)`` drops
below ``U``. This has exactly the law of independent monthly Bernoulli
trials while costing one draw and a binary search per birth.
"""

import contextlib
import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .errors import DegeneratePriorError, EmptyCohortError
from .rng import TAG_CONCEPTION, TAG_MARRIAGE, box_muller, split_key, uniform_pair

MONTHS = 600
AGE_MIN = 10
AGE_MAX = 50
N_BINS = AGE_MAX - AGE_MIN
AGES = np.arange(AGE_MIN, AGE_MAX)
GESTATION = 9
LAST_CONCEPTION = MONTHS - 1 - GESTATION  # 590: latest conception with a recordable birth
MAX_MARRIAGE_ATTEMPTS = 1000
MAX_BIRTHS = 64
PARAM_NAMES = ("mu_m", "sigma_m", "phi_1", "phi_2", "delta")

# largest double below 1; keeps log-survival finite when phi is clamped at 1
_PHI_CAP = 1.0 - 2.0**-53
_CHUNKS = 64


@dataclass(frozen=True)
class ParameterVector:
    """Model parameters. Ages and durations are in months."""

    mu_m: float
    sigma_m: float
    phi_1: float
    phi_2: float
    delta: int

    def __post_init__(self):
        if not (self.mu_m > 0 and self.sigma_m > 0):
            raise ValueError(f"mu_m and sigma_m must be positive: {self}")
        if self.phi_1 < 0 or self.phi_2 < 0:
            raise ValueError(f"phi_1 and phi_2 must be non-negative: {self}")
        if self.delta < 0 or int(self.delta) != self.delta:
            raise ValueError(f"delta must be a non-negative whole number of months: {self}")
        object.__setattr__(self, "delta", int(self.delta))
        peak = unclamped_peak(self.phi_1, self.phi_2)
        if peak > 1.0 + 1e-12:
            raise ValueError(f"fecundability peaks at {peak:.4f} > 1: {self}")

    def as_array(self):
        return np.array([self.mu_m, self.sigma_m, self.phi_1, self.phi_2, float(self.delta)])

    @classmethod
    def from_array(cls, values):
        """Build from a length-5 array; delta is rounded to whole months."""
        mu, sigma, p1, p2, delta = (float(v) for v in values)
        return cls(mu, sigma, p1, p2, int(math.floor(delta + 0.5)))


@dataclass(frozen=True)
class FecundabilityCurve:
    phi_1: float
    phi_2: float

    def __call__(self, age_months):
        return fecundability_at(self, age_months)

    def monthly(self):
        """Fecundability for every month 0..599."""
        return fecundability_at(self, np.arange(MONTHS))

    def peak(self):
        return float(self.monthly().max())


def unclamped_peak(p1, p2):
    """Maximum of the fecundability polynomial before clamping to [0, 1]."""
    xs = np.linspace(0.0, 1.0, 4001)
    return float((3.0 * xs * (1.0 - xs) * (p1 * (1.0 - xs) + p2 * xs)).max())


def fecundability_at(curve, age_months):
    """Per-month conception probability at the given age in months.

    The two interior cubic Bernstein bases on the window 10..50 years;
    zero outside the window, clamped to [0, 1].
    """
    age = np.asarray(age_months, dtype=float) / 12.0
    xs = (age - AGE_MIN) / (AGE_MAX - AGE_MIN)
    phi = curve.phi_1 * 3.0 * xs * (1.0 - xs) ** 2 + curve.phi_2 * 3.0 * xs**2 * (1.0 - xs)
    phi = np.where((age >= AGE_MIN) & (age < AGE_MAX), phi, 0.0)
    phi = np.clip(phi, 0.0, 1.0)
    return float(phi) if phi.ndim == 0 else phi


@dataclass(frozen=True)
class WomanTrajectory:
    marriage_age_months: int
    birth_ages_months: tuple = ()


@dataclass
class CohortResult:
    births_by_age: np.ndarray
    exposure_by_age: np.ndarray
    n_women: int
    trajectories: list = field(default=None, repr=False)

    @property
    def total_births(self):
        return int(self.births_by_age.sum())


def lognormal_log_params(mu, sigma):
    """Log-scale location and scale whose lognormal has natural-scale mean mu, sd sigma."""
    s2 = math.log1p((sigma / mu) ** 2)
    return math.log(mu) - 0.5 * s2, math.sqrt(s2)


# ---------------------------------------------------------------- kernels


@nb.njit(cache=True)
def _log_survival(phi1, phi2):
    """cum[t] = sum_{k<t} log(1 - phi_k), length MONTHS + 1."""
    cum = np.zeros(MONTHS + 1)
    acc = 0.0
    for t in range(MONTHS):
        age = t / 12.0
        p = 0.0
        if age >= AGE_MIN and age < AGE_MAX:
            xs = (age - AGE_MIN) / (AGE_MAX - AGE_MIN)
            p = phi1 * 3.0 * xs * (1.0 - xs) ** 2 + phi2 * 3.0 * xs**2 * (1.0 - xs)
            p = min(max(p, 0.0), _PHI_CAP)
        acc += math.log1p(-p)
        cum[t + 1] = acc
    return cum


@nb.njit(cache=True)
def _draw_marriage(k0, k1, w, mu_log, sd_log):
    for attempt in range(MAX_MARRIAGE_ATTEMPTS):
        u1, u2 = uniform_pair(k0, k1, w, attempt, TAG_MARRIAGE)
        m = math.floor(math.exp(mu_log + sd_log * box_muller(u1, u2)) + 0.5)
        if m >= 1 and m < MONTHS:
            return int(m)
    return -1


@nb.njit(cache=True)
def _marriage_kernel(k0, k1, n, mu_log, sd_log):
    out = np.empty(n, dtype=np.int64)
    for w in range(n):
        out[w] = _draw_marriage(k0, k1, w, mu_log, sd_log)
    return out


@nb.njit(cache=True)
def _woman(cum, k0, k1, w, mu_log, sd_log, delta, months_out):
    """Fill months_out with birth months; return (marriage month, n births)."""
    m = _draw_marriage(k0, k1, w, mu_log, sd_log)
    if m < 0:
        return -1, 0
    s = m
    j = 0
    n = 0
    while s <= LAST_CONCEPTION:
        u = uniform_pair(k0, k1, w, j, TAG_CONCEPTION)[0]
        j += 1
        thr = cum[s] + math.log(u)
        if not cum[LAST_CONCEPTION + 1] < thr:
            break
        lo = s
        hi = LAST_CONCEPTION
        while lo < hi:
            mid = (lo + hi) // 2
            if cum[mid + 1] < thr:
                hi = mid
            else:
                lo = mid + 1
        months_out[n] = lo + GESTATION
        n += 1
        s = lo + GESTATION + 1 + delta
    return m, n


@nb.njit(cache=True, parallel=True)
def _cohort_kernel(cum, k0, k1, n_women, mu_log, sd_log, delta, n_chunks):
    births = np.zeros((n_chunks, N_BINS), dtype=np.int64)
    status = np.zeros(n_chunks, dtype=np.int64)
    for c in nb.prange(n_chunks):
        buf = np.empty(MAX_BIRTHS, dtype=np.int64)
        lo = c * n_women // n_chunks
        hi = (c + 1) * n_women // n_chunks
        for w in range(lo, hi):
            m, n = _woman(cum, k0, k1, w, mu_log, sd_log, delta, buf)
            if m < 0:
                status[c] = 1
                break
            for i in range(n):
                births[c, buf[i] // 12 - AGE_MIN] += 1
    return births.sum(axis=0), status.max()


@nb.njit(cache=True)
def _trajectory_kernel(cum, k0, k1, n_women, mu_log, sd_log, delta):
    marriages = np.empty(n_women, dtype=np.int64)
    counts = np.empty(n_women, dtype=np.int64)
    months = np.empty((n_women, MAX_BIRTHS), dtype=np.int64)
    for w in range(n_women):
        m, n = _woman(cum, k0, k1, w, mu_log, sd_log, delta, months[w])
        marriages[w] = m
        counts[w] = n
    return marriages, counts, months


@nb.njit(cache=True, parallel=True)
def _batch_kernel(thetas, k0s, k1s, n_women):
    """One cohort per row of thetas (mu_log, sd_log, phi_1, phi_2, delta)."""
    d = thetas.shape[0]
    births = np.zeros((d, N_BINS), dtype=np.int64)
    status = np.zeros(d, dtype=np.int64)
    for i in nb.prange(d):
        cum = _log_survival(thetas[i, 2], thetas[i, 3])
        delta = int(thetas[i, 4])
        buf = np.empty(MAX_BIRTHS, dtype=np.int64)
        for w in range(n_women):
            m, n = _woman(cum, k0s[i], k1s[i], w, thetas[i, 0], thetas[i, 1], delta, buf)
            if m < 0:
                status[i] = 1
                break
            for b in range(n):
                births[i, buf[b] // 12 - AGE_MIN] += 1
    return births, status


# ---------------------------------------------------------------- public API


@contextlib.contextmanager
def threads(n):
    """Temporarily run compiled kernels on ``n`` threads (None leaves the default)."""
    if n is None:
        yield
        return
    previous = nb.get_num_threads()
    nb.set_num_threads(max(1, min(int(n), nb.config.NUMBA_NUM_THREADS)))
    try:
        yield
    finally:
        nb.set_num_threads(previous)


def log_survival_curve(phi_1, phi_2):
    return _log_survival(float(phi_1), float(phi_2))


def draw_marriage_age(mu_m, sigma_m, rng_stream):
    """Marriage month from a lognormal with natural-scale mean/sd, redrawn if >= 600.

    ``rng_stream.marriage_uniforms(attempt)`` supplies the uniform pair for
    each proposal.
    """
    if not (mu_m > 0 and sigma_m > 0):
        raise ValueError("mu_m and sigma_m must be positive")
    mu_log, sd_log = lognormal_log_params(mu_m, sigma_m)
    for attempt in range(MAX_MARRIAGE_ATTEMPTS):
        u1, u2 = rng_stream.marriage_uniforms(attempt)
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        m = math.floor(math.exp(mu_log + sd_log * z) + 0.5)
        if 1 <= m < MONTHS:
            return int(m)
    raise DegeneratePriorError(
        f"{MAX_MARRIAGE_ATTEMPTS} consecutive marriage ages >= {MONTHS} months "
        f"(mu_m={mu_m}, sigma_m={sigma_m})"
    )


def draw_marriage_ages(mu_m, sigma_m, n, master_seed):
    """Marriage months of women 0..n-1 of the cohort keyed by ``master_seed``."""
    k0, k1 = split_key(master_seed)
    out = _marriage_kernel(k0, k1, int(n), *lognormal_log_params(mu_m, sigma_m))
    if (out < 0).any():
        raise DegeneratePriorError(f"marriage age could not be drawn below {MONTHS} months (mu_m={mu_m})")
    return out


def simulate_woman(params, rng_stream):
    """Walk one woman month by month from birth to age 50.

    ``rng_stream`` provides ``marriage_uniforms(attempt)`` and
    ``spell_uniform(j)`` (the uniform governing the j-th exposure spell).
    """
    cum = log_survival_curve(params.phi_1, params.phi_2)
    marriage = draw_marriage_age(params.mu_m, params.sigma_m, rng_stream)
    births = []
    resume = marriage
    spell = 0
    threshold = None
    for t in range(MONTHS):
        if t < resume:
            continue
        if threshold is None:
            threshold = cum[t] + math.log(rng_stream.spell_uniform(spell))
            spell += 1
        if cum[t + 1] < threshold:
            if t + GESTATION < MONTHS:
                births.append(t + GESTATION)
            resume = t + GESTATION + 1 + params.delta
            threshold = None
    return WomanTrajectory(marriage, tuple(births))


def simulate_cohort(params, n_women, master_seed, *, n_threads=None, keep_trajectories=False):
    """Aggregate ``n_women`` independent trajectories into single-year birth counts.

    Woman ``i`` reads the counter-based stream ``(master_seed, i)``, so the
    result is a pure function of the arguments.
    """
    n_women = int(n_women)
    if n_women < 0:
        raise ValueError("n_women must be >= 0")
    exposure = np.full(N_BINS, float(n_women))
    if n_women == 0:
        return CohortResult(np.zeros(N_BINS, dtype=np.int64), exposure, 0, [] if keep_trajectories else None)
    k0, k1 = split_key(master_seed)
    cum = log_survival_curve(params.phi_1, params.phi_2)
    mu_log, sd_log = lognormal_log_params(params.mu_m, params.sigma_m)
    if keep_trajectories:
        marriages, counts, months = _trajectory_kernel(cum, k0, k1, n_women, mu_log, sd_log, params.delta)
        if (marriages < 0).any():
            raise DegeneratePriorError(f"marriage age could not be drawn below {MONTHS} months: {params}")
        trajs = [
            WomanTrajectory(int(m), tuple(int(b) for b in months[i, : counts[i]]))
            for i, m in enumerate(marriages)
        ]
        births = np.zeros(N_BINS, dtype=np.int64)
        for tr in trajs:
            for b in tr.birth_ages_months:
                births[b // 12 - AGE_MIN] += 1
        return CohortResult(births, exposure, n_women, trajs)
    with threads(n_threads):
        births, status = _cohort_kernel(cum, k0, k1, n_women, mu_log, sd_log, params.delta, _CHUNKS)
    if status:
        raise DegeneratePriorError(f"marriage age could not be drawn below {MONTHS} months: {params}")
    return CohortResult(births, exposure, n_women)


def simulate_batch(thetas, seeds, n_women, *, n_threads=None):
    """Birth counts (rows x 40) for one cohort per parameter row.

    ``thetas`` is an (n, 5) array in ParameterVector order; delta is rounded
    to whole months, phi values are clamped per month inside the kernel.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    seeds = np.asarray(seeds, dtype=np.uint64)
    if len(seeds) != len(thetas):
        raise ValueError("one seed per parameter row is required")
    packed = np.empty_like(thetas)
    for i, (mu, sigma, p1, p2, delta) in enumerate(thetas):
        packed[i, 0], packed[i, 1] = lognormal_log_params(mu, sigma)
        packed[i, 2], packed[i, 3] = p1, p2
        packed[i, 4] = math.floor(delta + 0.5)
    k0s = seeds & np.uint64(0xFFFFFFFF)
    k1s = seeds >> np.uint64(32)
    with threads(n_threads):
        births, status = _batch_kernel(packed, k0s, k1s, int(n_women))
    if status.any():
        bad = thetas[int(np.argmax(status))]
        raise DegeneratePriorError(f"marriage age could not be drawn below {MONTHS} months: {bad}")
    return births


def mean_children_per_woman(result):
    if result.n_women <= 0:
        raise EmptyCohortError("mean children per woman is undefined for an empty cohort")
    return result.total_births / result.n_women
