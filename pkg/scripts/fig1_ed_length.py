"""Long-time operator length from exact diagonalization.

L=12, Delta=1, several disorder strengths, t up to 1e5. Each W gets its own
run directory containing series.csv, raw.csv and manifest.json.

    python3 scripts/fig1_ed_length.py --out runs/fig1 --n-realizations 48
"""

from __future__ import annotations

import argparse
from pathlib import Path

from opspread.harness import ExperimentConfig, run_experiment

DISORDERS = (1.0, 2.0, 3.0, 4.0, 5.0, 6.5, 8.0)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/fig1"))
    ap.add_argument("--L", type=int, default=12)
    ap.add_argument("--n-realizations", type=int, default=48)
    ap.add_argument("--t-max", type=float, default=1e5)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--W", type=float, nargs="+", default=list(DISORDERS))
    args = ap.parse_args()
    for W in args.W:
        cfg = ExperimentConfig(
            mode="ed", L=args.L, delta=1.0, W=W, t_max=args.t_max, per_decade=24,
            n_realizations=args.n_realizations, workers=args.workers,
            output_dir=str(args.out / f"W{W:g}"),
        )
        avg = run_experiment(cfg)
        print(f"W={W:g}: h(t_max)={avg.mean['h'][-1]:.4f} +- {avg.stderr['h'][-1]:.4f}")


if __name__ == "__main__":
    main()
