"""Observed temporal order against the exact Mittag-Leffler solution at fixed fine h."""

import argparse

from fracwr import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=512)
    ap.add_argument("--nt", default="64,128,256,512,1024")
    args = ap.parse_args()
    nts = [int(s) for s in args.nt.split(",")]
    for d in (0.1, 0.4, 0.7, 1.0):
        cfg = bench.ExperimentConfig("order-study", delta=d, nx=[args.nx], nt=nts, tol=1e-12)
        rows = bench.run_order_study(cfg)
        errs = " ".join(f"{r.error:.3e}" for r in rows)
        orders = " ".join(f"{r.order:.3f}" for r in rows[1:])
        print(f"delta={d:<4} errors {errs}\n           orders {orders}")


if __name__ == "__main__":
    main()
