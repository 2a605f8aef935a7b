"""Recompute the headline numbers: violation factors, noise thresholds and
classical bounds for the GHZ, W and four-photon families.

Usage: python3 scripts/reproduce_tables.py [--out results.csv] [--restarts 32]
"""

import argparse
import csv
import math
import sys
import time

from multibell import OptimizerConfig, compute_tensor, evaluate, make_four_photon, make_ghz, make_w, noise_threshold
from multibell.bellineq import InequalitySpec
from multibell.lhv_oracle import classical_bound

FIELDS = ["state", "criterion_id", "max_value", "violation_factor", "threshold"]


def state_table(config: OptimizerConfig):
    cases = [
        ("ghz3(pi/8)", make_ghz(3, math.pi / 8), ("standard", "c442", "c442-numeric", "c332")),
        ("ghz3(pi/4)", make_ghz(3, math.pi / 4), ("standard", "c442", "c442-numeric", "c332")),
        ("ghz4(pi/4)", make_ghz(4, math.pi / 4), ("standard", "cN")),
        ("fourphoton", make_four_photon(), ("standard", "cN")),
    ]
    cases += [(f"w{n}", make_w(n), ("standard", "cN") if n > 3 else ("standard", "c442", "cN")) for n in (3, 4, 5, 6)]
    for name, state, ids in cases:
        t = compute_tensor(state)
        for cid in ids:
            res = evaluate(t, cid, config)
            yield {
                "state": name,
                "criterion_id": cid,
                "max_value": f"{res.max_value:.12g}",
                "violation_factor": f"{res.violation_factor:.12g}",
                "threshold": f"{noise_threshold(state, cid, config):.12g}",
            }


def bound_table():
    for family, n in [("f442", 3), ("f332", 3), ("fN", 3), ("fN", 4), ("fN", 5), ("standard", 3), ("standard", 4)]:
        spec = InequalitySpec.of(family, n)
        yield family, n, classical_bound(spec)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", help="write the state table as CSV here instead of stdout")
    parser.add_argument("--restarts", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    config = OptimizerConfig(restarts=args.restarts, seed=args.seed)
    start = time.perf_counter()
    rows = list(state_table(config))
    handle = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(handle, fieldnames=FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            handle.close()

    print("\nclassical bounds (exhaustive enumeration)", file=sys.stderr)
    for family, n, bound in bound_table():
        print(f"  {family:<9} N={n}  {bound:g}", file=sys.stderr)
    print(f"done in {time.perf_counter() - start:.1f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
