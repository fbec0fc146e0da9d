"""alpha_n, n*alpha_n and the exterior lower bound for a curve, as a text table."""
import argparse

from faber_bergman.bergman import alpha_decomposition, alpha_table, build_basis
from faber_bergman.curvespec import builtin, load


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--curve", default="lens", help="built-in name or curve-spec JSON")
    ap.add_argument("--n-max", type=int, default=30)
    ap.add_argument("--precision-bits", type=int, default=256)
    args = ap.parse_args()

    spec = builtin(args.curve) if args.curve in ("lens", "circle", "disk") else load(args.curve)
    basis = build_basis(spec.path, args.n_max, precision_bits=args.precision_bits)
    rows = alpha_table(basis, spec.emap.gamma, spec.emap)
    print(f"# {spec.name}: {basis.precision_bits} bits, Gram residual {basis.gram_residual:.2e}")
    print(f"{'n':>3} {'alpha_n':>20} {'n*alpha_n':>20} {'bound':>20} {'resid':>9}")
    for r in rows:
        res = alpha_decomposition(basis, spec.emap, r.n).residual
        print(f"{r.n:3d} {float(r.alpha_n.real):20.15f} {float(r.n_alpha_n.real):20.15f} "
              f"{float(r.exterior_bound):20.15f} {res:9.1e}")


if __name__ == "__main__":
    main()
