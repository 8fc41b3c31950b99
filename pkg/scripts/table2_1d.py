"""V(0,1) iteration counts and mean factors for the 1d Mittag-Leffler problem."""

import argparse

from fracwr import problems
from fracwr.wrmg import CycleConfig, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="128,256,512,1024")
    args = ap.parse_args()
    cfg = CycleConfig("V", 0, 1, tol=1e-10)
    for n in (int(s) for s in args.sizes.split(",")):
        cells = []
        for d in (0.1, 0.4, 0.7, 1.0):
            _, hist = solve(problems.mittag_leffler_1d(d, n - 1, n), cfg)
            cells.append(f"{hist.iterations:3d} ({hist.mean_factor:.3f}) {hist.seconds[-1]:6.2f}s")
        print(f"{n:5d}^2  " + "   ".join(cells))


if __name__ == "__main__":
    main()
