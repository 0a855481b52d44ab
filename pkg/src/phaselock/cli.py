"""Command line entry point: calibrate, run, compare, metrics."""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import harness
from .calibration import CalibrationError
from .harness import ConfigError, ExperimentConfig
from .metrics import IntervalSpec, NoTransitionError, noise_stats, rise_fall_time


def _load(config_path: str | None) -> ExperimentConfig:
    if config_path is None:
        return ExperimentConfig()
    return harness.load_config(config_path)


def cmd_calibrate(args) -> int:
    cfg = _load(args.config)
    result = harness.calibrate_from_config(cfg, seed=args.seed)
    timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    seed = cfg.seed if args.seed is None else args.seed
    harness.write_calibration_record(args.out, result, seed, timestamp)
    print(
        f"calibrated: s_min={result.s_min} s_max={result.s_max} "
        f"gain_estimate={result.gain_estimate:.6g} rad/AU "
        f"({result.rounds} classification rounds)"
    )
    return 0


def cmd_run(args) -> int:
    cfg = _load(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    records = harness.run_experiment(cfg, seed=seed)
    harness.write_timeseries_csv(args.out, records, cfg, seed)
    print(f"wrote {len(records)} ticks to {args.out}")
    return 0


def cmd_compare(args) -> int:
    cfg = _load(args.config)
    seeds = list(range(cfg.seed, cfg.seed + args.seeds))
    report = harness.compare_algorithms(cfg, seeds)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "comparison.csv").write_text(
        harness.comparison_csv(report), encoding="utf-8", newline="\n"
    )
    summary = harness.comparison_summary(report)
    (out_dir / "summary.txt").write_text(summary, encoding="utf-8", newline="\n")
    if args.keep_runs:
        from dataclasses import replace

        for seed in seeds:
            for kind in ("classical", "adaptive"):
                run_cfg = replace(cfg, controller=replace(cfg.controller, kind=kind))
                records = harness.run_experiment(run_cfg, seed=seed)
                harness.write_timeseries_csv(
                    out_dir / f"run_{kind}_{seed}.csv", records, run_cfg, seed
                )
    print(summary, end="")
    return 0


def parse_intervals(spec: str) -> list[IntervalSpec]:
    """Parse '1:130,169:243' style interval lists."""
    intervals = []
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            start, end = chunk.split(":")
            intervals.append(IntervalSpec(float(start), float(end)))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad interval {chunk!r}; expected start:end") from exc
    if not intervals:
        raise ConfigError("no intervals given")
    return intervals


def cmd_metrics(args) -> int:
    data = harness.read_timeseries_csv(args.input)
    intervals = parse_intervals(args.intervals)
    t = data["t"]
    channels = ("cc_tg_d1", "cc_tg_d2")

    lines = ["channel,t_start,t_end,mean,std,sigma_p,cv,t10,t90,rise_fall"]
    table = [
        f"{'channel':<10} {'interval':<14} {'mean':>10} {'std':>9} "
        f"{'sigma_p':>8} {'cv':>7} {'t10-t90':>14}"
    ]
    for channel in channels:
        series = data[channel]
        for interval in intervals:
            stats = noise_stats(series, interval, t=t)
            try:
                rf = rise_fall_time(series, interval, t=t)
                rf_cols = f"{rf.t10:.2f},{rf.t90:.2f},{rf.duration:.2f}"
                rf_disp = f"{rf.t10:7.1f}-{rf.t90:<6.1f}"
            except NoTransitionError:
                rf_cols = ",,"
                rf_disp = f"{'-':>14}"
            lines.append(
                f"{channel},{interval.t_start:g},{interval.t_end:g},"
                f"{stats.mean:.3f},{stats.std:.3f},{stats.sigma_p:.3f},"
                f"{stats.cv:.3f},{rf_cols}"
            )
            table.append(
                f"{channel:<10} [{interval.t_start:g}, {interval.t_end:g}]"
                f"{'':<2} {stats.mean:>10.3f} {stats.std:>9.3f} "
                f"{stats.sigma_p:>8.3f} {stats.cv:>7.3f} {rf_disp}"
            )
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    print("\n".join(table))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaselock",
        description="Simulate coincidence-fed P&O phase stabilization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="discover circular bounds via sawtooth sweep")
    p.add_argument("--config", help="YAML experiment config (defaults when omitted)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="calibration record path")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("run", help="run one seeded scenario and log a CSV")
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="time-series CSV path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="paired classical/adaptive comparison")
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--seeds", type=int, required=True, help="number of paired seeds")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--keep-runs", action="store_true",
                   help="also write every per-seed run CSV")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("metrics", help="noise and transition statistics from a CSV")
    p.add_argument("--input", required=True, help="time-series CSV")
    p.add_argument("--intervals", required=True,
                   help="comma list of start:end seconds, e.g. 1:130,169:243")
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CalibrationError, NoTransitionError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
