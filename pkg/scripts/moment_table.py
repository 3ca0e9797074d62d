"""Monte Carlo moments of theta next to the series values and the reference draw.

    python scripts/moment_table.py --paths 10000 --n 10000 --seed 42
"""

import argparse

from volcorr.moments import even_moment
from volcorr.montecarlo import SimConfig, estimate_moments
from volcorr.quadrature import second_moment

REFERENCE = {2: 0.235057, 4: 0.109276, 6: 0.0609591, 8: 0.0378654, 10: 0.0251693}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    table = estimate_moments(SimConfig(n=args.n, paths=args.paths, seed=args.seed,
                                       workers=args.workers))
    analytic = {1: second_moment().value}
    analytic.update({n: even_moment(n).value for n in range(2, 6)})

    print(f"{'k':>3} {'MC':>11} {'SE':>9} {'series':>11} {'z(series)':>9} {'reference':>10}")
    for k in range(1, 11):
        est, se = table.estimate[k], table.std_error[k]
        if k % 2:
            print(f"{k:3d} {est:11.6f} {se:9.6f} {0.0:11.6f} {abs(est) / se:9.2f}")
            continue
        a = analytic[k // 2]
        print(f"{k:3d} {est:11.6f} {se:9.6f} {a:11.6f} {abs(est - a) / se:9.2f} {REFERENCE[k]:10.6f}")


if __name__ == "__main__":
    main()
