#!/usr/bin/env python3
"""Show a discrete space whose expected instance size diverges.

The n-th world holds the first 2**n unary facts and has probability
6 / (pi^2 n^2); the world probabilities sum to 1, but the expected size
partial sums grow without bound.  Prints the partial sums and the first
truncation depths at which they cross 1e3 and 1e6.

Usage: python scripts/divergence_demo.py [N_MAX]
"""

import sys

from infpdb.core import divergent_size_partial_sum


def main() -> int:
    n_max = int(sys.argv[1]) if len(sys.argv) > 1 else 35
    crossed = {1e3: None, 1e6: None}
    print(f"{'N':>4}  {'partial expected size':>22}")
    for n in range(1, n_max + 1):
        s = divergent_size_partial_sum(n)
        print(f"{n:>4}  {s:>22.4f}")
        for threshold, at in crossed.items():
            if at is None and s > threshold:
                crossed[threshold] = n
    for threshold, at in crossed.items():
        label = f"exceeds {threshold:g}"
        print(f"{label}: N = {at}" if at else f"{label}: not within N_MAX")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
