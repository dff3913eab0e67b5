"""Schedules along a grid of each parameter, holding the others fixed.

Writes one directory per parameter (frame_XXX.csv plus sweep.csv) ready for
plotting, and prints mean children per woman along each grid.

    python3 scripts/parameter_effects.py --out effects --n-women 50000
"""

import argparse
from pathlib import Path

from natfert.cli import cmd_sweep
from natfert.model import ParameterVector

GRIDS = {
    "mu_m": [216.0, 240.0, 264.0, 288.0, 312.0],
    "sigma_m": [12.0, 24.0, 36.0, 60.0, 96.0],
    "phi_1": [0.0, 0.1, 0.2, 0.3, 0.4],
    "phi_2": [0.0, 0.1, 0.2, 0.3, 0.4],
    "delta": [0, 6, 12, 18, 24],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("effects"))
    ap.add_argument("--n-women", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    fixed = ParameterVector(252.0, 36.0, 0.25, 0.15, 10)
    for name, grid in GRIDS.items():
        means = cmd_sweep(name, grid, fixed, args.n_women, args.seed, args.out / name)
        print(f"{name:8s} " + "  ".join(f"{v:g}:{m:.2f}" for v, m in zip(grid, means)))


if __name__ == "__main__":
    main()
