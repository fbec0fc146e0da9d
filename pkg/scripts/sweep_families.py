"""Limit classification of ||E'_{n+1}||^2 over a few curve families.

Lens, circle, two lunes (corners of angle 2pi/3 and 5pi/4) and the analytic
ellipse-like curves phi = z + eps/z.
"""
import argparse
import time

from faber_bergman.asymptotics import SweepCurve, limit_sweep
from faber_bergman.faber import ExteriorMap
from faber_bergman.quadrature import BoundaryPath


def curves():
    out = [
        SweepCurve("lens", ExteriorMap.lens(), BoundaryPath.lens()),
        SweepCurve("circle", ExteriorMap.circle(), BoundaryPath.circle()),
    ]
    for beta in ("2/3", "5/4"):
        out.append(SweepCurve(f"lune-{beta}", ExteriorMap.lune(beta), BoundaryPath.lune(beta)))
    # z + eps/z is univalent outside its critical points only for eps < 1/4
    for eps in ("1/10", "1/5"):
        m = ExteriorMap.from_phi({1: 1, -1: eps}, name=f"z+{eps}/z")
        out.append(SweepCurve(m.name, m, BoundaryPath.for_map(m)))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=32)
    ap.add_argument("--tol", type=float, default=1e-10)
    args = ap.parse_args()
    t0 = time.perf_counter()
    for rep in limit_sweep(curves(), args.n_max, args.tol):
        lim = "-" if rep.estimated_limit is None else f"{rep.estimated_limit:.6g}"
        err = "-" if rep.limit_error is None else f"{rep.limit_error:.1e}"
        print(f"{rep.name:12s} {rep.classification:24s} limit {lim:>12} +- {err:8} {'; '.join(rep.notes)}")
    print(f"{time.perf_counter() - t0:.2f}s")


if __name__ == "__main__":
    main()
