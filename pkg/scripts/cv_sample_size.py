"""Cross-validated prediction error at several cohort sizes.

Every table uses the same master seed, so its prior draws and held-out
entries coincide across sizes and only the simulation noise differs. Prints
the per-parameter error for each size.

    python3 scripts/cv_sample_size.py --sizes 161 3235 14303 --n-draws 20000 --n-heldout 25
"""

import argparse
import time

from natfert.abc import Acceptance, Prior, build_reference_table
from natfert.adjust import ForestConfig
from natfert.model import PARAM_NAMES
from natfert.validation import cross_validate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[161, 3235, 14_303])
    ap.add_argument("--n-draws", type=int, default=20_000)
    ap.add_argument("--n-heldout", type=int, default=25)
    ap.add_argument("--quantile", type=float, default=0.01)
    ap.add_argument("--trees", type=int, default=500)
    ap.add_argument("--seed", type=int, default=606)
    args = ap.parse_args()

    print("n_marriages," + ",".join(PARAM_NAMES) + ",total,seconds")
    for n in args.sizes:
        start = time.perf_counter()
        table = build_reference_table(Prior(), args.n_draws, n, args.seed)
        report = cross_validate(
            table, args.n_heldout, Acceptance("quantile", args.quantile), ForestConfig(n_trees=args.trees), args.seed
        )
        cells = ",".join(f"{e:.4f}" for e in report.errors)
        print(f"{n},{cells},{report.total:.4f},{time.perf_counter() - start:.0f}", flush=True)


if __name__ == "__main__":
    main()
