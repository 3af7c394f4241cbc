"""Operator length in the l-bit model for several interaction ranges kappa.

Writes one series per kappa (L=64, W=1, 192 realizations) and the fitted
slope table to <out>/slopes.csv.

    python3 scripts/figA1_lbit.py --out runs/figA1
"""

from __future__ import annotations

import argparse
from pathlib import Path

from opspread import cli
from opspread.harness import ExperimentConfig, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/figA1"))
    ap.add_argument("--L", type=int, default=64)
    ap.add_argument("--kappa", type=float, nargs="+", default=[1.0, 0.5, 0.32])
    ap.add_argument("--n-realizations", type=int, default=192)
    ap.add_argument("--t-max", type=float, default=1e12)
    args = ap.parse_args()
    for kappa in args.kappa:
        cfg = ExperimentConfig(
            mode="lbit", L=args.L, kappa=kappa, W=1.0, t_max=args.t_max, per_decade=8,
            n_realizations=args.n_realizations, output_dir=str(args.out / f"kappa{kappa:g}"),
        )
        run_experiment(cfg)
    raise SystemExit(cli.main([
        "slope-fit", "--kappa", *map(str, args.kappa), "--L", str(args.L),
        "--n-realizations", str(args.n_realizations), "--output", str(args.out / "slopes.csv"),
    ]))


if __name__ == "__main__":
    main()
