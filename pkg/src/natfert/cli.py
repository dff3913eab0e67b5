"""Command-line interface: ``natfert simulate | fit | validate | sweep``.

Exit status: 0 on success, 2 for configuration errors, 3 for data errors,
4 for runtime failures.
"""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .abc import build_reference_table
from .adjust import adjust, fit_forest
from .config import RunConfig
from .errors import ConfigError, DataError
from .io import (
    PRESETS,
    canonical_json,
    load_observed,
    posterior_csv_text,
    preset_path,
    schedule_csv_text,
    sha256_text,
    write_atomic,
    write_outputs,
)
from .model import PARAM_NAMES, ParameterVector, mean_children_per_woman, simulate_cohort
from .summaries import schedule_from_cohort
from .validation import cross_validate, posterior_predictive

log = logging.getLogger("natfert")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4


def _manifest(command, config_dict, seed, config_hash=None):
    return {
        "artifact_version": __version__,
        "command": command,
        "config": config_dict,
        "config_sha256": config_hash or sha256_text(canonical_json(config_dict)),
        "seed": seed,
    }


def resolve_observed(config):
    if config.observed_is_preset():
        return load_observed(preset_path(config.observed))
    return load_observed(config.observed)


def _n_marriages(config, dataset):
    n = config.n_marriages or dataset.n_marriages
    if not n:
        raise ConfigError("n_marriages is not set and the dataset sidecar does not provide it")
    return int(n)


def cmd_simulate(params, n_women, seed, out=None, *, n_threads=None):
    result = simulate_cohort(params, n_women, seed, n_threads=n_threads)
    schedule = schedule_from_cohort(result)
    text = schedule_csv_text(schedule)
    if out:
        out = Path(out)
        write_atomic(out, text)
        cfg = {"params": dataclasses.asdict(params), "n_women": int(n_women)}
        manifest = _manifest("simulate", cfg, seed)
        manifest["outputs"] = {out.name: sha256_text(text)}
        write_atomic(out.with_name(out.stem + ".manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return schedule, mean_children_per_woman(result), text


def cmd_fit(config):
    """Reference table, rejection, forest adjustment and posterior-predictive band."""
    config.validate()
    dataset = resolve_observed(config)
    y_obs = dataset.schedule
    n_m = _n_marriages(config, dataset)
    seed = int(config.seed)
    log.info("building reference table: %d draws x %d marriages", config.n_draws, n_m)
    table = build_reference_table(config.prior_obj(), config.n_draws, n_m, seed, n_threads=config.threads)
    acc = config.acceptance_obj()
    sample = acc.apply(table, y_obs, weights=config.distance_weights)
    log.info("accepted %d draws; fitting forests", len(sample))
    model = fit_forest(sample.summaries, sample.theta, config.forest_obj(), seed, n_threads=config.threads)
    adjusted = adjust(sample, model, y_obs, n_threads=config.threads)
    band = posterior_predictive(adjusted, n_m, config.draws_per_theta, seed, observed=y_obs, n_threads=config.threads)
    children = band.simulations.sum(axis=1)
    summary = {
        "n_marriages": n_m,
        "n_draws": len(table),
        "n_accepted": len(sample),
        "n_clamped": adjusted.n_clamped,
        "padded_ages": list(dataset.padded_ages),
        "raw_mean": dict(zip(PARAM_NAMES, map(float, sample.mean))),
        "adjusted_mean": dict(zip(PARAM_NAMES, map(float, adjusted.mean))),
        "adjusted_sd": dict(zip(PARAM_NAMES, map(float, adjusted.theta.std(axis=0, ddof=1)))) if len(adjusted) > 1 else None,
        "forest_oob_r2": dict(zip(PARAM_NAMES, map(float, model.oob_r2))),
        "predictive_mean_children_per_woman": float(children.mean()),
        "observed_total_fertility": y_obs.total_fertility,
        "band_coverage": int(band.covers().sum()),
    }
    files = {
        "reference_table.csv": table.to_csv_text(),
        "reference_table.json": table.sidecar_text(),
        "posterior.csv": posterior_csv_text(adjusted),
        "predictive_band.csv": band.to_csv_text(),
        "fit_summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n",
    }
    out = config.output_path()
    write_outputs(out, files, _manifest("fit", config.hashed_dict(), seed, config.config_hash()))
    return {"table": table, "sample": sample, "adjusted": adjusted, "model": model, "band": band,
            "summary": summary, "output_dir": out}


def cmd_validate(config, n_heldout=None):
    """Leave-one-out cross-validation over a fresh reference table."""
    if n_heldout is not None:
        config = config.updated(n_heldout=n_heldout)
    config.validate(need_observed=config.n_marriages is None)
    n_m = int(config.n_marriages) if config.n_marriages else _n_marriages(config, resolve_observed(config))
    seed = int(config.seed)
    table = build_reference_table(config.prior_obj(), config.n_draws, n_m, seed, n_threads=config.threads)
    report = cross_validate(
        table,
        config.n_heldout,
        config.acceptance_obj(),
        config.forest_obj(),
        seed,
        weights=config.distance_weights,
        n_threads=config.threads,
    )
    files = {"cv_folds.csv": report.folds_csv_text(), "cv_summary.json": report.summary_text()}
    out = config.output_path()
    write_outputs(out, files, _manifest("validate", config.hashed_dict(), seed, config.config_hash()))
    return {"table": table, "report": report, "output_dir": out}


def cmd_sweep(param, grid, fixed, n_women, seed, out_dir, *, n_threads=None):
    """One simulated schedule per grid value of ``param``; all frames share the seed."""
    if param not in PARAM_NAMES:
        raise ConfigError(f"unknown parameter {param!r}; choose from {PARAM_NAMES}")
    files = {}
    rows = ["frame,parameter,value,mean_children_per_woman"]
    means = []
    for k, value in enumerate(grid):
        try:
            params = dataclasses.replace(fixed, **{param: value})
        except ValueError as exc:
            raise ConfigError(f"grid value {value} for {param}: {exc}") from exc
        result = simulate_cohort(params, n_women, seed, n_threads=n_threads)
        files[f"frame_{k:03d}.csv"] = schedule_csv_text(schedule_from_cohort(result))
        means.append(mean_children_per_woman(result))
        rows.append(f"{k},{param},{float(value)!r},{means[-1]!r}")
    files["sweep.csv"] = "\n".join(rows) + "\n"
    cfg = {"parameter": param, "grid": [float(v) for v in grid], "fixed": dataclasses.asdict(fixed),
           "n_women": int(n_women)}
    write_outputs(out_dir, files, _manifest("sweep", cfg, seed))
    return np.array(means)


# ---------------------------------------------------------------- argparse


def _add_params(p, required=True):
    p.add_argument("--mu-m", type=float, required=required, help="mean marriage age, months")
    p.add_argument("--sigma-m", type=float, required=required, help="sd of marriage age, months")
    p.add_argument("--phi-1", type=float, required=required)
    p.add_argument("--phi-2", type=float, required=required)
    p.add_argument("--delta", type=int, required=required, help="post-partum amenorrhea, months")


def _add_run_options(p):
    p.add_argument("--config", help="JSON run configuration")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--observed", help="age,rate CSV of observed fertility")
    src.add_argument("--preset", choices=sorted(PRESETS), help="bundled synthetic dataset")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-draws", type=int)
    acc = p.add_mutually_exclusive_group()
    acc.add_argument("--quantile", type=float, help="accept this fraction of closest simulations")
    acc.add_argument("--epsilon", type=float, help="accept simulations closer than this")
    p.add_argument("--n-marriages", type=int, help="cohort size per simulation (default: dataset's)")
    p.add_argument("--trees", type=int, help="trees per forest")
    p.add_argument("--out-dir", help="output directory (default: $NATFERT_OUTPUT_DIR or ./natfert-out)")
    p.add_argument("--threads", type=int, help="worker threads; 1 gives a serial reference run")


def _config_from_args(args):
    config = RunConfig.load(args.config) if args.config else RunConfig()
    over = {
        "observed": args.preset or args.observed,
        "seed": args.seed,
        "n_draws": args.n_draws,
        "n_marriages": args.n_marriages,
        "output_dir": args.out_dir,
        "threads": args.threads,
    }
    if args.quantile is not None:
        over["acceptance"] = {"mode": "quantile", "value": args.quantile}
    if args.epsilon is not None:
        over["acceptance"] = {"mode": "epsilon", "value": args.epsilon}
    if args.trees is not None:
        over["forest"] = {**config.forest, "n_trees": args.trees}
    return config.updated(**over)


def build_parser():
    parser = argparse.ArgumentParser(prog="natfert", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one cohort and write its fertility schedule")
    _add_params(p)
    p.add_argument("--n-women", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.add_argument("--threads", type=int)

    p = sub.add_parser("fit", help="estimate parameters from an observed schedule")
    _add_run_options(p)

    p = sub.add_parser("validate", help="cross-validate the estimator on simulated data")
    _add_run_options(p)
    p.add_argument("--n-heldout", type=int)

    p = sub.add_parser("sweep", help="schedules along a grid of one parameter")
    p.add_argument("--param", required=True, choices=PARAM_NAMES)
    p.add_argument("--grid", required=True, help="comma-separated values")
    _add_params(p)
    p.add_argument("--n-women", type=int, default=50_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threads", type=int)
    return parser


def _params(args):
    try:
        return ParameterVector(args.mu_m, args.sigma_m, args.phi_1, args.phi_2, args.delta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def run(args):
    if args.command == "simulate":
        _, mean, text = cmd_simulate(_params(args), args.n_women, args.seed, args.out, n_threads=args.threads)
        if not args.out:
            sys.stdout.write(text)
        log.info("mean children per woman: %.4f", mean)
    elif args.command == "fit":
        res = cmd_fit(_config_from_args(args))
        print(json.dumps(res["summary"]["adjusted_mean"], indent=2))
        print(f"outputs written to {res['output_dir']}")
    elif args.command == "validate":
        res = cmd_validate(_config_from_args(args), args.n_heldout)
        print(res["report"].summary_text(), end="")
        print(f"outputs written to {res['output_dir']}")
    elif args.command == "sweep":
        try:
            grid = [float(v) for v in args.grid.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --grid: {exc}") from exc
        if args.param == "delta":
            grid = [int(v) for v in grid]
        means = cmd_sweep(args.param, grid, _params(args), args.n_women, args.seed, args.out_dir,
                          n_threads=args.threads)
        for v, m in zip(grid, means):
            print(f"{args.param}={v}: {m:.4f} children per woman")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
