"""Sweep the Werner family and compare solver verdicts with the PPT oracle.

The family crosses its separability boundary at w = 1/3, so the sweep shows
where the iteration's verdict tracks the exact criterion and where the step
budget gives up.

    python scripts/werner_sweep.py --points 9 --samples 50000 --budget 200
"""

import argparse
import csv
import sys

import numpy as np

from sepiter import SolverConfig, run, werner
from sepiter.criteria import ppt_min_eigenvalue


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--kappa", type=float, default=0.02)
    ap.add_argument("--samples", type=int, default=50_000)
    ap.add_argument("--budget", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("-o", "--output", default=None, help="optional CSV path")
    args = ap.parse_args()

    rows = []
    print(f"{'w':>6} {'verdict':>24} {'steps':>6} {'residual':>10} "
          f"{'x_norm':>8} {'ppt_min':>9}")
    for w in np.linspace(0.0, 1.0, args.points):
        rho = werner(float(w))
        cfg = SolverConfig(kappa=args.kappa, sample_count=args.samples,
                           max_iters=args.budget, seed=args.seed)
        res = run(rho, cfg)
        v = res.verdict
        ppt = ppt_min_eigenvalue(rho)
        print(f"{w:6.3f} {v.outcome:>24} {v.steps_used:6d} {v.final_residual:10.5f} "
              f"{v.final_x_norm:8.2f} {ppt:+9.5f}")
        rows.append([f"{w:.6f}", v.outcome, v.steps_used, repr(v.final_residual),
                     repr(v.final_x_norm), repr(ppt)])

    if args.output:
        with open(args.output, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["w", "verdict", "steps", "residual_l1", "x_norm_l1", "ppt_min"])
            writer.writerows(rows)
        print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
