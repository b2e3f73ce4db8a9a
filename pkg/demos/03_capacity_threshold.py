"""Capacity formulas, then a Monte-Carlo look at the rate threshold.

For BSC(0.1) the capacity (rate measured as log M / log n) is 1/2.  Below
it the error rate falls as n grows; above it the error rate climbs.

Run:  python demos/03_capacity_threshold.py [--trials 4000] [--svg sweep.svg]
"""
import argparse

import numpy as np

from permchan import capacity_value, sweep_rate
from permchan.cli import sweep_svg

ap = argparse.ArgumentParser()
ap.add_argument("--trials", type=int, default=4000)
ap.add_argument("--svg")
args = ap.parse_args()

channels = {
    "BSC(0.1)": [[0.9, 0.1], [0.1, 0.9]],
    "Z-channel": [[0.5, 0.5], [0, 1]],
    "ternary erasure": [[0.7, 0, 0, 0.3], [0, 0.8, 0, 0.2], [0, 0, 0.6, 0.4]],
    "identity 3x3": np.eye(3).tolist(),
    "zigzag": [[0.5, 0.5, 0], [0, 0.5, 0.5], [0, 0, 1]],
}
for name, P in channels.items():
    rep = capacity_value(P)
    shown = f"{rep.value}" if rep.solved else f"between {rep.lower} and {rep.upper}"
    print(f"{name:16s} {rep.kind.value:18s} {shown}   {rep.caveat}")

print(f"\nError rates for BSC(0.1), {args.trials} trials per cell:")
rows = sweep_rate(channels["BSC(0.1)"], [0.3, 0.45, 0.6, 0.8], [64, 256, 1024, 4096], args.trials, seed=7)
print("  rate     n     M   err      95% interval")
for r in rows:
    if r.outcome is None:
        print(f"  {r.rate:<5} {r.n:5d}  {r.status}")
        continue
    lo, hi = r.outcome.wilson
    print(f"  {r.rate:<5} {r.n:5d} {r.M:5d}  {r.outcome.rate:.4f}  [{lo:.4f}, {hi:.4f}]")
if args.svg:
    with open(args.svg, "w") as fh:
        fh.write(sweep_svg(rows))
    print(f"chart written to {args.svg}")
