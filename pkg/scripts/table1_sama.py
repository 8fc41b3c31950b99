"""Two-grid factors (and optionally measured W-cycle factors) for delta = 0.4 over lambda and M."""

import argparse

from fracwr import bench
from fracwr.sama import convergence_factor_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=0.4)
    ap.add_argument("--max-m", type=int, default=1024)
    ap.add_argument("--samples", type=int, default=64)
    ap.add_argument("--measure", action="store_true", help="also run W-cycles on a 256-point grid (M <= 128)")
    args = ap.parse_args()
    exps = list(range(-8, 9, 2))
    ms = [m for m in (32, 64, 128, 256, 512, 1024) if m <= args.max_m]
    table = {m: convergence_factor_sweep(1, args.delta, exps, m, 0, 1, args.samples, smoothing=False) for m in ms}
    print("log2(lambda) " + " ".join(f"{'M=' + str(m):>9}" for m in ms))
    for i, e in enumerate(exps):
        print(f"{e:12d} " + " ".join(f"{table[m][i].predicted_rho:9.3f}" for m in ms))
        if args.measure:
            cells = [
                f"({bench.measured_factor(args.delta, 2.0**e, m):.3f})" if m <= 128 else ""
                for m in ms
            ]
            print(" " * 13 + " ".join(f"{c:>9}" for c in cells))


if __name__ == "__main__":
    main()
