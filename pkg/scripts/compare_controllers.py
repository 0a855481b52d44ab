#!/usr/bin/env python3
"""Paired-seed comparison of the classical and adaptive controllers.

Each seed shares one noise-phase realization between both controllers, so
every reported delta isolates the controller choice.
"""

import argparse
from pathlib import Path

from phaselock import harness


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--first-seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("out/comparison"))
    parser.add_argument("--config", default=None)
    args = parser.parse_args()

    cfg = harness.load_config(args.config) if args.config else harness.ExperimentConfig()
    seeds = list(range(args.first_seed, args.first_seed + args.seeds))
    report = harness.compare_algorithms(cfg, seeds)

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "comparison.csv").write_text(harness.comparison_csv(report))
    summary = harness.comparison_summary(report)
    (args.out / "summary.txt").write_text(summary)
    print(summary, end="")


if __name__ == "__main__":
    main()
