"""Convergence of the lens exterior norms to 1/(2 pi), printed per checkpoint."""
import argparse
import json
import time

from faber_bergman.asymptotics import TARGET_NORM, lens_limit_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=2000)
    ap.add_argument("--precision-bits", type=int, default=256)
    ap.add_argument("--json", action="store_true", help="dump the full report")
    args = ap.parse_args()

    t0 = time.perf_counter()
    rep = lens_limit_check(args.n_max, args.precision_bits)
    if args.json:
        print(json.dumps(rep.to_dict(), indent=2))
        return
    print(f"{'N':>6} {'I(2N)':>22} {'|I - 1/(2pi)|':>14}")
    for n, v, d in rep.checkpoints:
        print(f"{n:6d} {v:22.16f} {d:14.3e}")
    print(f"target 1/(2pi) = {TARGET_NORM:.16f}")
    print(f"fitted limit (scaled by 1/pi) {rep.limit_estimate:.10f}, deviation {rep.limit_deviation:.2e}")
    print(f"envelope constant {rep.envelope_constant:.5f}, residual decreasing: {rep.envelope_decreasing}")
    print(f"{time.perf_counter() - t0:.2f}s")


if __name__ == "__main__":
    main()
