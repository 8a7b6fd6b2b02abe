#!/usr/bin/env python3
"""A/B experiment: direct gradient-descent fitting of the standard
synthetic scene under instance-level (SSI) vs hierarchical losses.

Writes a CSV next to the table so the numbers can be plotted externally.

    python3 scripts/run_ab_experiment.py [--out results.csv]
"""

import argparse

from hdnorm import FitConfig, compare_losses, standard_fixture
from hdnorm.harness import format_table, rows_to_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None, help="optional CSV output path")
    parser.add_argument("--steps", type=int, default=300)
    parser.add_argument("--step-size", type=float, default=100.0)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    spec = standard_fixture()
    common = dict(steps=args.steps, step_size=args.step_size,
                  init="noisy_gt", seed=args.seed)
    configs = [
        FitConfig("ssi", (1,), **common),
        FitConfig("hdn_s", (1, 2, 4, 8), **common),
        FitConfig("hdn_dp", (1, 2, 4), **common),
        FitConfig("hdn_dr", (1, 2, 4), **common),
        FitConfig("hdn_dr", (4,), **common),  # local-only finest level
    ]
    rows = compare_losses(spec, configs)
    print(format_table(rows))
    if args.out:
        with open(args.out, "w") as f:
            f.write(rows_to_csv(rows))
        print(f"\nwrote {args.out}")


if __name__ == "__main__":
    main()
