"""E[theta^2] three ways: double integral, series at n = 1, and its convergence in u_max.

    python scripts/second_moment.py
"""

import time

from volcorr.moments import even_moment
from volcorr.quadrature import QuadratureSpec, second_moment


def main():
    print(f"{'u_max':>6} {'rel_tol':>8} {'value':>16} {'err':>9} {'tail':>9} {'evals':>7} {'ms':>6}")
    for u_max in (10.0, 20.0, 30.0, 60.0):
        for rel in (1e-4, 1e-8):
            t0 = time.perf_counter()
            r = second_moment(QuadratureSpec(rel_tol=rel, u_max=u_max))
            ms = 1e3 * (time.perf_counter() - t0)
            print(f"{u_max:6.0f} {rel:8.0e} {r.value:16.13f} {r.error_estimate:9.1e} "
                  f"{r.truncation_tail:9.1e} {r.evaluations:7d} {ms:6.1f}")
    for r_max in (20, 30, 40):
        m = even_moment(1, r_max=r_max)
        print(f"series r_max={r_max}: {m.value:.10f} (used r <= {m.r_truncation}, "
              f"tail {m.tail_estimate:.1e})")


if __name__ == "__main__":
    main()
