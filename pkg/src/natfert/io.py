"""Observed-data ingestion and artifact writing."""

import csv
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import AGE_MAX, AGE_MIN, AGES, PARAM_NAMES
from .summaries import AsfrSchedule

# Marriage counts and cohorts of the three historical populations; the
# bundled schedules are synthetic stand-ins simulated at these sizes.
PRESETS = {
    "hutterites": {"n_marriages": 161, "label": "Hutterites (synthetic)", "cohorts": "1860-1914"},
    "quebec": {"n_marriages": 14303, "label": "XVIII century Quebec (synthetic)", "cohorts": "1722-1730"},
    "france": {"n_marriages": 3235, "label": "XVII-XVIII century France (synthetic)", "cohorts": "1680-1760"},
}


@dataclass(frozen=True)
class ObservedDataset:
    schedule: AsfrSchedule
    n_marriages: int = None
    label: str = None
    cohorts: str = None

    @property
    def padded_ages(self):
        return self.schedule.padded_ages


def preset_path(name):
    if name not in PRESETS:
        raise DataError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return Path(resources.files("natfert") / "data" / f"{name}.csv")


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def load_observed(path):
    """Read an ``age,rate`` CSV (plus optional ``<name>.meta.json`` sidecar).

    Ages 10..49 missing from the file are zero-filled and listed in
    ``padded_ages``.
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip().lower() for h in header]
        for col in ("age", "rate"):
            if col not in header:
                raise DataError(f"{path}: missing column {col!r} (header: {','.join(header)})")
        ia, ir = header.index("age"), header.index("rate")
        rates = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                age = int(float(row[ia]))
                rate = float(row[ir])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}, line {lineno}: cannot parse {row!r}") from exc
            if float(row[ia]) != age or not AGE_MIN <= age < AGE_MAX:
                raise DataError(f"{path}, line {lineno}: age {row[ia]} is not a whole year in {AGE_MIN}..{AGE_MAX - 1}")
            if age in rates:
                raise DataError(f"{path}, line {lineno}: duplicate age {age}")
            if not np.isfinite(rate):
                raise DataError(f"{path}, line {lineno}: non-finite rate at age {age}")
            if rate < 0:
                raise DataError(f"{path}, line {lineno}: negative rate {rate} at age {age}")
            rates[age] = rate
    padded = tuple(int(a) for a in AGES if a not in rates)
    schedule = AsfrSchedule(np.array([rates.get(int(a), 0.0) for a in AGES]), padded)

    meta = {}
    side = sidecar_path(path)
    if side.exists():
        try:
            meta = json.loads(side.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{side}: invalid JSON ({exc})") from exc
    n = meta.get("n_marriages")
    if n is not None and (int(n) != n or n <= 0):
        raise DataError(f"{side}: n_marriages must be a positive integer, got {n!r}")
    return ObservedDataset(schedule, None if n is None else int(n), meta.get("label"), meta.get("cohorts"))


def write_atomic(path, text):
    """Write ``text`` to a temporary file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def schedule_csv_text(schedule):
    rates = getattr(schedule, "rates", schedule)
    lines = ["age,rate"] + [f"{a},{float(r)!r}" for a, r in zip(AGES, rates)]
    return "\n".join(lines) + "\n"


def posterior_csv_text(sample):
    """Raw and adjusted draws side by side, one row per accepted simulation."""
    raw = sample.raw_theta if sample.adjusted else sample.theta
    adj = sample.theta if sample.adjusted else np.full_like(sample.theta, np.nan)
    cols = [*PARAM_NAMES, *(f"{n}_adj" for n in PARAM_NAMES), "distance"]
    lines = [",".join(cols)]
    for r, a, d in zip(raw, adj, sample.distances):
        lines.append(",".join(repr(float(v)) for v in (*r, *a, d)))
    return "\n".join(lines) + "\n"


def read_posterior_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :5], data[:, 5:10], data[:, 10]


def sha256_text(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_outputs(out_dir, files, manifest):
    """Write every ``name -> text`` pair atomically, then a manifest with their hashes."""
    out_dir = Path(out_dir)
    for name, text in files.items():
        write_atomic(out_dir / name, text)
    manifest = dict(manifest, outputs={name: sha256_text(text) for name, text in sorted(files.items())})
    write_atomic(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out_dir

