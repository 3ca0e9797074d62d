"""Histogram of simulated theta, written as CSV and drawn as text bars.

    python scripts/theta_histogram.py --out theta_hist.csv
"""

import argparse
import csv

from volcorr.montecarlo import SimConfig, histogram_from_samples, quantile_interval, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--bins", type=int, default=40)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    theta = simulate(SimConfig(n=args.n, paths=args.paths, seed=args.seed)).theta
    hist = histogram_from_samples(theta, args.bins)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lower", "upper", "count"])
            for lo, hi, c in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts):
                w.writerow([repr(float(lo)), repr(float(hi)), int(c)])

    peak = hist.counts.max()
    for lo, c in zip(hist.bin_edges[:-1], hist.counts):
        print(f"{lo:+.2f} {'#' * int(60 * c / peak)}")
    lo, hi = quantile_interval(theta, 0.95)
    print(f"middle 95%: [{lo:.3f}, {hi:.3f}]")


if __name__ == "__main__":
    main()
