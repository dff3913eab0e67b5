"""Run configuration: one JSON document, overridable from the command line."""

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .abc import DEFAULT_BOUNDS, Acceptance, Prior
from .adjust import ForestConfig
from .errors import ConfigError
from .io import PRESETS, canonical_json, sha256_text

OUTPUT_ENV = "NATFERT_OUTPUT_DIR"
DEFAULT_OUTPUT = "natfert-out"

# settings that change how fast a run goes but not what it produces
_NOT_HASHED = ("threads", "output_dir")


def _default_prior():
    return {k: list(v) for k, v in DEFAULT_BOUNDS.items()}


def _default_forest():
    return ForestConfig().to_dict()


@dataclass
class RunConfig:
    """Settings for ``fit`` and ``validate``.

    ``observed`` is a path to an ``age,rate`` CSV or the name of a bundled
    preset (hutterites, quebec, france). ``n_marriages`` falls back to the
    dataset's marriage count.
    """

    observed: str = None
    prior: dict = field(default_factory=_default_prior)
    n_draws: int = 100_000
    acceptance: dict = field(default_factory=lambda: {"mode": "quantile", "value": 0.005})
    n_marriages: int = None
    forest: dict = field(default_factory=_default_forest)
    seed: int = None
    output_dir: str = None
    threads: int = None
    n_heldout: int = 100
    draws_per_theta: int = 1
    distance_weights: list = None

    def __post_init__(self):
        self.prior = {k: [float(x) for x in v] for k, v in self.prior.items()}
        self.forest = {**_default_forest(), **self.forest}

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def hashed_dict(self):
        return {k: v for k, v in self.to_dict().items() if k not in _NOT_HASHED}

    def config_hash(self):
        return sha256_text(canonical_json(self.hashed_dict()))

    def updated(self, **overrides):
        """Copy with every non-None override applied (flags win over the file)."""
        data = self.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_dict(data)

    # typed views -------------------------------------------------------

    def prior_obj(self):
        try:
            return Prior({k: tuple(v) for k, v in self.prior.items()})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def acceptance_obj(self):
        try:
            return Acceptance(self.acceptance["mode"], float(self.acceptance["value"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad acceptance setting {self.acceptance!r}: {exc}") from exc

    def forest_obj(self):
        try:
            return ForestConfig(**self.forest)
        except TypeError as exc:
            raise ConfigError(f"bad forest setting: {exc}") from exc

    def output_path(self):
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)

    def observed_is_preset(self):
        return self.observed in PRESETS

    def validate(self, *, need_observed=True):
        if self.seed is None:
            raise ConfigError("a seed is required (--seed or \"seed\" in the config)")
        if not 0 <= int(self.seed) < 2**63:
            raise ConfigError("seed must lie in [0, 2**63)")
        if need_observed and not self.observed:
            raise ConfigError("no observed data given (--observed or --preset)")
        if int(self.n_draws) <= 0:
            raise ConfigError("n_draws must be positive")
        if self.n_marriages is not None and int(self.n_marriages) <= 0:
            raise ConfigError("n_marriages must be positive")
        if int(self.draws_per_theta) <= 0:
            raise ConfigError("draws_per_theta must be positive")
        if self.distance_weights is not None and len(self.distance_weights) != 40:
            raise ConfigError("distance_weights needs one weight per age 10..49")
        self.prior_obj()
        self.acceptance_obj()
        self.forest_obj()
        return self
