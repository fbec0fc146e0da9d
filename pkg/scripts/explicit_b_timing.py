"""Time the independent evaluation of b_n from its finite sum, against the recurrence.

Useful for seeing where the exact-identity budget goes: the explicit sums are
bigint-bound and dominate everything else.
"""
import argparse
import time

from faber_bergman.exact import b_seq, b_seq_explicit, sequences


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=20000)
    ap.add_argument("--every", type=int, default=2000, help="report interval")
    args = ap.parse_args()
    t0 = time.perf_counter()
    sequences(args.n_max)
    print(f"recurrence to {args.n_max}: {time.perf_counter() - t0:.2f}s")
    t1 = time.perf_counter()
    for n in range(0, args.n_max + 1, 2):
        assert b_seq_explicit(n) == b_seq(n), n
        if n and n % args.every == 0:
            print(f"n={n:6d}  cumulative {time.perf_counter() - t1:8.2f}s")
    print(f"explicit sums: {time.perf_counter() - t1:.2f}s")


if __name__ == "__main__":
    main()
