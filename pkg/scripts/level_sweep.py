#!/usr/bin/env python3
"""Sweep the number of context levels for each hierarchy kind and report
how the fitted foreground detail error changes.

    python3 scripts/level_sweep.py
"""

import argparse

from hdnorm import FitConfig, compare_losses, standard_fixture
from hdnorm.harness import format_table

SWEEPS = {
    "hdn_s": [(1,), (1, 2), (1, 2, 4), (1, 2, 4, 8)],
    "hdn_dp": [(1,), (1, 2), (1, 2, 4)],
    "hdn_dr": [(1,), (1, 2), (1, 2, 4)],
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=300)
    parser.add_argument("--step-size", type=float, default=100.0)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    spec = standard_fixture()
    common = dict(steps=args.steps, step_size=args.step_size,
                  init="noisy_gt", seed=args.seed)
    for kind, level_sets in SWEEPS.items():
        configs = [FitConfig(kind, sizes, **common) for sizes in level_sets]
        rows = compare_losses(spec, configs)
        print(f"== {kind} (baseline: single global level) ==")
        print(format_table(rows))
        print()


if __name__ == "__main__":
    main()
