"""Interaction sweep at fixed disorder W=6.5 with operator-MPS evolution.

Delta in {0, 0.2, 0.4, 1}; prints the fitted ln t slope of h over [20, t_max].

    python3 scripts/fig3_interaction_sweep.py --out runs/fig3 --n-realizations 100
"""

from __future__ import annotations

import argparse
from pathlib import Path

from opspread.harness import ExperimentConfig, read_series, run_experiment, series_log_slope


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/fig3"))
    ap.add_argument("--L", type=int, default=12)
    ap.add_argument("--delta", type=float, nargs="+", default=[0.0, 0.2, 0.4, 1.0])
    ap.add_argument("--n-realizations", type=int, default=100)
    ap.add_argument("--t-max", type=float, default=500.0)
    ap.add_argument("--dt", type=float, default=0.05)
    ap.add_argument("--chi-max", type=int, default=256)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    print("delta,slope,stderr")
    for delta in args.delta:
        out = args.out / f"delta{delta:g}"
        cfg = ExperimentConfig(
            mode="evolve", L=args.L, delta=delta, W=6.5, t_max=args.t_max, per_decade=16,
            dt=args.dt, chi_max=args.chi_max, n_realizations=args.n_realizations,
            workers=args.workers, output_dir=str(out),
        )
        run_experiment(cfg)
        slope, err, _ = series_log_slope(read_series(out / "series.csv"), 20.0, args.t_max)
        print(f"{delta!r},{slope!r},{err!r}")


if __name__ == "__main__":
    main()
