"""V(1,1) iteration counts and mean factors for the 2d manufactured problem."""

import argparse

from fracwr import problems
from fracwr.wrmg import CycleConfig, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="32,64")
    args = ap.parse_args()
    cfg = CycleConfig("V", 1, 1, tol=1e-10)
    for n in (int(s) for s in args.sizes.split(",")):
        cells = []
        for d in (0.1, 0.4, 0.7, 1.0):
            _, hist = solve(problems.manufactured_2d(d, n - 1, n), cfg)
            cells.append(f"{hist.iterations:3d} ({hist.mean_factor:.3f}) {hist.seconds[-1]:6.2f}s")
        print(f"{n:4d}^3  " + "   ".join(cells))


if __name__ == "__main__":
    main()
