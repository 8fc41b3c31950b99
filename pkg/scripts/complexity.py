"""Solve-time scaling: doubling M at small N, then doubling N at moderate M."""

import argparse

from fracwr import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m-ladder", default="4096,8192,16384,32768")
    ap.add_argument("--n-ladder", default="64,128,256,512,1024")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    ints = lambda s: [int(v) for v in s.split(",")]
    m_cfg = bench.ExperimentConfig("complexity", nx=[16], nt=ints(args.m_ladder), repeats=args.repeats)
    n_cfg = bench.ExperimentConfig("complexity", nx=ints(args.n_ladder), nt=[256], repeats=args.repeats)
    rows = bench.run_complexity(m_cfg) + bench.run_complexity(n_cfg)
    print(bench.csv_text(bench.TIMING_HEADER, bench.timing_rows(rows), "complexity"), end="")
    print("envelope ok" if bench.complexity_ok(rows) else "envelope exceeded")


if __name__ == "__main__":
    main()
