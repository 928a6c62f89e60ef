"""Monte Carlo error scaling of the two closed-form moment integrals.

Shows the trace-norm gap between sample averages and the exact expressions
shrinking like 1/sqrt(N), alongside the estimator's own noise-floor figure,
which should stay a modest multiple of the observed gap.

    python scripts/moment_convergence.py --n 2 --max-exponent 6
"""

import argparse
import sys

from sepiter import make_sample_set
from sepiter.ensemble import (
    mc_moment_bipartite,
    mc_moment_single,
    moment_bipartite_closed,
    moment_single_closed,
)
from sepiter.operators import HermitianOperator, trace_norm, trace_norm_of
from sepiter.sampling import SeedStream


def random_direction(d: int, seed: int) -> HermitianOperator:
    gen = SeedStream(seed, 0).generator()
    g = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    h = HermitianOperator((g + g.conj().T) / 2)
    return HermitianOperator(h.mat / trace_norm(h))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--max-exponent", type=int, default=6,
                    help="largest sample count is 10**max_exponent")
    args = ap.parse_args()

    n = args.n
    a = random_direction(n, args.seed)
    y = random_direction(n * n, args.seed + 1)
    closed_a = moment_single_closed(a)
    closed_y = moment_bipartite_closed(y, (n, n))

    print(f"{'samples':>9} {'single gap':>12} {'single floor':>13} "
          f"{'pair gap':>12} {'pair floor':>12}")
    for k in range(2, args.max_exponent + 1):
        count = 10**k
        single = make_sample_set(args.seed, count, (n, 1))
        pair = make_sample_set(args.seed + 1, count, (n, n))
        mc_a, floor_a = mc_moment_single(a, single)
        mc_y, floor_y = mc_moment_bipartite(y, pair)
        gap_a = trace_norm_of(mc_a.mat - closed_a.mat)
        gap_y = trace_norm_of(mc_y.mat - closed_y.mat)
        print(f"{count:9d} {gap_a:12.6f} {floor_a:13.6f} {gap_y:12.6f} {floor_y:12.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
