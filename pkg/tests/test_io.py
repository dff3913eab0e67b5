import hashlib
import json

import numpy as np
import pytest

from natfert.abc import PosteriorSample
from natfert.errors import DataError
from natfert.io import (
    PRESETS,
    load_observed,
    posterior_csv_text,
    preset_path,
    read_posterior_csv,
    schedule_csv_text,
    write_atomic,
    write_outputs,
)
from natfert.model import AGES


def write_schedule(tmp_path, rows, header="age,rate", meta=None, name="obs.csv"):
    path = tmp_path / name
    path.write_text("\n".join([header, *rows]) + "\n")
    if meta is not None:
        (tmp_path / (path.stem + ".meta.json")).write_text(json.dumps(meta))
    return path


def test_missing_ages_are_zero_padded(tmp_path):
    path = write_schedule(tmp_path, [f"{a},0.{a}" for a in range(15, 50)])
    ds = load_observed(path)
    assert ds.padded_ages == (10, 11, 12, 13, 14)
    assert (ds.schedule.rates[:5] == 0).all()
    assert ds.schedule.rates[AGES.tolist().index(20)] == 0.20
    assert ds.n_marriages is None


def test_negative_rate_names_the_age(tmp_path):
    rows = [f"{a},0.1" for a in range(10, 50)]
    rows[23] = "33,-0.02"
    with pytest.raises(DataError, match="age 33"):
        load_observed(write_schedule(tmp_path, rows))


def test_missing_column_named(tmp_path):
    with pytest.raises(DataError, match="'rate'"):
        load_observed(write_schedule(tmp_path, ["20,0.1"], header="age,asfr"))


def test_parse_error_reports_line(tmp_path):
    with pytest.raises(DataError, match="line 4"):
        load_observed(write_schedule(tmp_path, ["20,0.1", "21,0.2", "22,abc"]))


@pytest.mark.parametrize("row", ["9,0.1", "50,0.1", "20.5,0.1"])
def test_out_of_grid_ages_rejected(tmp_path, row):
    with pytest.raises(DataError, match="line 2"):
        load_observed(write_schedule(tmp_path, [row]))


def test_duplicate_and_nonfinite_rejected(tmp_path):
    with pytest.raises(DataError, match="duplicate"):
        load_observed(write_schedule(tmp_path, ["20,0.1", "20,0.2"]))
    with pytest.raises(DataError, match="non-finite"):
        load_observed(write_schedule(tmp_path, ["20,nan"]))


def test_missing_file_and_empty_file(tmp_path):
    with pytest.raises(DataError):
        load_observed(tmp_path / "nope.csv")
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(DataError, match="empty"):
        load_observed(tmp_path / "empty.csv")


def test_sidecar_read_and_checked(tmp_path):
    rows = [f"{a},0.1" for a in range(10, 50)]
    ds = load_observed(write_schedule(tmp_path, rows, meta={"n_marriages": 250, "label": "X", "cohorts": "1700-1710"}))
    assert (ds.n_marriages, ds.label, ds.cohorts) == (250, "X", "1700-1710")
    with pytest.raises(DataError, match="n_marriages"):
        load_observed(write_schedule(tmp_path, rows, meta={"n_marriages": 0}, name="bad.csv"))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_bundled_fixtures_load(name):
    ds = load_observed(preset_path(name))
    assert ds.n_marriages == PRESETS[name]["n_marriages"]
    assert ds.padded_ages == ()
    assert 5.0 < ds.schedule.total_fertility < 12.5


def test_hutterite_fixture_marriage_count():
    assert load_observed(preset_path("hutterites")).n_marriages == 161


def test_unknown_preset():
    with pytest.raises(DataError):
        preset_path("mars")


def test_schedule_csv_roundtrip(tmp_path, rng):
    rates = rng.random(40) / 2
    path = tmp_path / "s.csv"
    path.write_text(schedule_csv_text(rates))
    np.testing.assert_array_equal(load_observed(path).schedule.rates, rates)


def test_posterior_csv_roundtrip(tmp_path, rng):
    raw = rng.random((6, 5))
    adj = PosteriorSample(raw + 1, rng.random(6), np.arange(6), adjusted=True, raw_theta=raw)
    text = posterior_csv_text(adj)
    assert text.splitlines()[0] == (
        "mu_m,sigma_m,phi_1,phi_2,delta,mu_m_adj,sigma_m_adj,phi_1_adj,phi_2_adj,delta_adj,distance"
    )
    (tmp_path / "p.csv").write_text(text)
    r, a, d = read_posterior_csv(tmp_path / "p.csv")
    np.testing.assert_array_equal(r, raw)
    np.testing.assert_array_equal(a, raw + 1)
    np.testing.assert_array_equal(d, adj.distances)


def test_atomic_write_leaves_no_temp_files(tmp_path):
    write_atomic(tmp_path / "sub" / "a.txt", "hello\n")
    assert (tmp_path / "sub" / "a.txt").read_text() == "hello\n"
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["a.txt"]


def test_atomic_write_keeps_old_file_on_failure(tmp_path):
    target = tmp_path / "a.txt"
    target.write_text("old\n")
    with pytest.raises(TypeError):
        write_atomic(target, 42)
    assert target.read_text() == "old\n"
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]


def test_write_outputs_manifest_hashes(tmp_path):
    write_outputs(tmp_path, {"x.csv": "a\n", "y.json": "{}\n"}, {"seed": 3})
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert set(manifest["outputs"]) == {"x.csv", "y.json"}
    assert manifest["outputs"]["x.csv"] == hashlib.sha256(b"a\n").hexdigest()
