"""Compare the closed-form c442 value with the numeric two-term maximum and
with the best quantum value of the 442 Bell expression.

The closed form is a lower bound on the two-term maximum.  This script
measures how far below it falls along the GHZ family and on random states.

Usage: python3 scripts/analytic_gap.py [--points 16] [--random 10]
"""

import argparse
import math
import sys

import numpy as np

from multibell import compute_tensor, condition_442_analytic, condition_442_numeric, make_ghz
from multibell.bellineq import InequalitySpec, maximize_lhs
from multibell.qstate import random_state


def compare(label: str, state, spec: InequalitySpec) -> str:
    t = compute_tensor(state)
    analytic = condition_442_analytic(t).max_value
    numeric = condition_442_numeric(t).max_value
    bell = (maximize_lhs(t, spec).value / 8) ** 2
    return f"{label:<14} {analytic:12.8f} {numeric:12.8f} {bell:12.8f} {numeric - analytic:10.2e}"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=16, help="GHZ angles in (0, pi/4]")
    parser.add_argument("--random", type=int, default=10, help="number of random pure states")
    args = parser.parse_args(argv)

    spec = InequalitySpec.of("f442")
    print(f"{'state':<14} {'analytic':>12} {'numeric':>12} {'(bell/8)^2':>12} {'gap':>10}")
    for a in (math.pi / 4) * np.arange(1, args.points + 1) / args.points:
        print(compare(f"ghz({a:.4f})", make_ghz(3, a), spec))
    for seed in range(args.random):
        print(compare(f"random{seed}", random_state(3, seed=seed), spec))
    return 0


if __name__ == "__main__":
    sys.exit(main())
