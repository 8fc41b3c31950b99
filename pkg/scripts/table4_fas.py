"""FAS V(0,1) iteration counts and mean factors for the porous-media problem."""

import argparse

from fracwr import problems
from fracwr.fas import solve_nonlinear
from fracwr.wrmg import CycleConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="32,64,128,256")
    ap.add_argument("--upwind", choices=["forward", "backward"], default="forward")
    args = ap.parse_args()
    cfg = CycleConfig("V", 0, 1, tol=1e-10)
    for n in (int(s) for s in args.sizes.split(",")):
        cells = []
        for d in (0.1, 0.4, 0.7, 1.0):
            _, hist = solve_nonlinear(problems.porous_media(d, n - 1, n), cfg, upwind=args.upwind)
            cells.append(f"{hist.iterations:3d} ({hist.mean_factor:.3f}) {hist.seconds[-1]:6.2f}s")
        print(f"{n:5d}^2  " + "   ".join(cells))


if __name__ == "__main__":
    main()
