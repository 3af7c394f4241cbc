"""Command-line entry point.

Every subcommand that runs an ensemble accepts ``--config FILE`` plus one
flag per :class:`~opspread.harness.ExperimentConfig` field; flags override
the file, which overrides the defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .harness import (
    ExperimentConfig,
    ExperimentFailed,
    config_field_parsers,
    read_config_file,
    read_series,
    rescale_by_logL,
    run_experiment,
    series_log_slope,
    slope_table,
    window_average,
)

RUN_MODES = ("evolve", "ed", "lbit", "shadows")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    for name, conv in config_field_parsers().items():
        if name == "mode":
            continue
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=conv, default=None)


def resolve_config(mode: str, args: argparse.Namespace) -> ExperimentConfig:
    values: dict[str, object] = {}
    if args.config is not None:
        values.update(read_config_file(args.config))
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    values["mode"] = mode
    return ExperimentConfig(**values)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args.command, args)
    try:
        avg = run_experiment(cfg)
    except ExperimentFailed as exc:
        print(f"error: {exc} (see {cfg.output_dir}/manifest.json)", file=sys.stderr)
        return 2
    print(f"wrote {cfg.output_dir}: {len(avg.times)} times, {avg.n_realizations} realizations")
    return 0


def _cmd_window_avg(args: argparse.Namespace) -> int:
    rows = ["L,W,delta,h_window,m_window,h_window_over_lnL,m_window_over_lnL"]
    for run in args.runs:
        cfg = json.loads((Path(run) / "manifest.json").read_text())["config"]
        s = read_series(Path(run) / "series.csv")
        L = cfg["L"]
        hw = window_average(s["t"], s["h_mean"], L)
        mw = window_average(s["t"], s["m_mean"], L)
        hr, mr = rescale_by_logL([hw, mw], [L, L])
        rows.append(",".join(repr(float(x)) for x in (L, cfg["W"], cfg["delta"], hw, mw, hr, mr)))
    _emit(rows, args.output)
    return 0


def _cmd_slope_fit(args: argparse.Namespace) -> int:
    if args.series is not None:
        s = read_series(args.series)
        slope, err, icpt = series_log_slope(s, args.t_lo, args.t_hi, args.column)
        rows = ["column,t_lo,t_hi,slope,stderr,intercept",
                f"{args.column},{args.t_lo!r},{args.t_hi!r},{slope!r},{err!r},{icpt!r}"]
    else:
        table = slope_table(args.kappa, args.L, args.W, args.n_realizations, args.base_seed)
        rows = ["kappa,slope,stderr,n_realizations"]
        rows += [f"{k!r},{s!r},{e!r},{n}" for k, s, e, n in table]
    _emit(rows, args.output)
    return 0


def _emit(rows: list[str], output: Path | None) -> None:
    text = "\n".join(rows) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opspread", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in RUN_MODES:
        _add_config_flags(sub.add_parser(mode, help=f"run a disorder ensemble in {mode} mode"))

    w = sub.add_parser("window-avg", help="time-window averages over [0, L] of finished runs")
    w.add_argument("runs", nargs="+", help="run directories holding series.csv and manifest.json")
    w.add_argument("--output", type=Path)

    s = sub.add_parser("slope-fit", help="log-time slopes (l-bit kappa table or an existing series)")
    s.add_argument("--kappa", type=float, nargs="+", default=[1.0, 0.5, 0.32])
    s.add_argument("--L", type=int, default=64)
    s.add_argument("--W", type=float, default=1.0)
    s.add_argument("--n-realizations", type=int, default=192)
    s.add_argument("--base-seed", type=int, default=0)
    s.add_argument("--series", type=Path, help="fit this series.csv instead of the l-bit model")
    s.add_argument("--column", default="h_mean")
    s.add_argument("--t-lo", type=float, default=20.0)
    s.add_argument("--t-hi", type=float, default=200.0)
    s.add_argument("--output", type=Path)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.command in RUN_MODES:
        return _cmd_run(args)
    if args.command == "window-avg":
        return _cmd_window_avg(args)
    return _cmd_slope_fit(args)


if __name__ == "__main__":
    raise SystemExit(main())
