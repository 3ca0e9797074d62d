"""Higher even moments of the correlation from the odd-power bracket series.

The bracket

    B(u, v) = u/(1+v) S(u sqrt((1-v)/(1+v))) - u/(1-v) S(u sqrt((1+v)/(1-v)))

is odd and analytic in |v| < 1, B(u, v) = sum_r s_r(u) v^(2r-1).  The moment
of order 2n is

    E theta^(2n) = C(2n, n) 2n / 4^n * sum_{r >= n} W(n, r) * int_0^inf S T s_r du

with W(n, r) = C(r-1, n-1) int_0^1 (1-v^2)^(n-1) v^(2(r-n)) dv.  Note the
u-weight is S(u) T(u): with that weight n = 1 reproduces the second-moment
double integral exactly.

The coefficients s_r(u) are read off a discrete Cauchy integral: B is sampled
on the complex circle |v| = v_radius and transformed with an FFT.  Rounding
error in s_r then grows like v_radius^-(2r-1), far more slowly than for a
real-interval fit.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import beta as beta_fn, comb, zeta

from .errors import DomainError, IllConditionedError, QuadratureError
from .quadrature import QuadratureSpec, _S_tail, integrate_1d
from .specialfun import _S, _T, _checked

__all__ = [
    "SeriesTable",
    "MomentResult",
    "bracket_B",
    "extract_sr",
    "weight_integral",
    "even_moment",
    "moment_prefactor",
    "DEFAULT_V_RADIUS",
    "DEFAULT_NODES",
    "DEFAULT_TABLE_R",
]

DEFAULT_V_RADIUS = 0.8
DEFAULT_NODES = 256
DEFAULT_TABLE_R = 64
# largest tolerated rounding amplification eps * v_radius^-(2 r_max - 1)
_MAX_AMPLIFICATION = 1e-3
_EPS = np.finfo(float).eps

# log(sinh z / z) = sum_k (-1)^(k+1) zeta(2k) z^(2k) / (k pi^(2k)), |z| < pi
_LK = np.arange(1, 31)
_LOGSINHC = (-1.0) ** (_LK + 1) * zeta(2.0 * _LK) / (_LK * np.pi ** (2 * _LK))


@dataclass(frozen=True)
class SeriesTable:
    """``coeffs[r-1, k]`` is s_r(u_grid[k])."""

    u_grid: np.ndarray
    r_max: int
    coeffs: np.ndarray
    v_radius: float
    node_count: int
    residual: np.ndarray      # reconstruction error / max|B| per u on [-v_radius, v_radius]
    decay_onset: np.ndarray   # per u, first r from which |s_{r+1}| v^2 < |s_r| holds on average

    @property
    def amplification(self):
        return _EPS * self.v_radius ** -(2 * self.r_max - 1)


@dataclass(frozen=True)
class MomentResult:
    n: int
    value: float
    r_truncation: int
    tail_estimate: float
    method: str
    error_estimate: float = 0.0
    evaluations: int = 0

    def to_dict(self):
        return {
            "n": self.n,
            "value": self.value,
            "error_estimate": self.error_estimate,
            "tail_estimate": self.tail_estimate,
            "r_truncation": self.r_truncation,
            "method": self.method,
            "evaluations": self.evaluations,
        }


def _log_S_complex(z):
    """Analytic continuation of log S to Re z > 0."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 0.5
    z2 = z[small] ** 2
    acc = np.zeros_like(z2)
    for c in _LOGSINHC[::-1]:
        acc = acc * z2 + c
    out[small] = -0.5 * acc * z2
    zb = z[~small]
    out[~small] = 0.5 * (np.log(zb) - zb + math.log(2.0) - np.log1p(-np.exp(-2.0 * zb)))
    return out


def _bracket_complex(u, v):
    w = np.sqrt((1.0 - v) / (1.0 + v))
    return (u / (1.0 + v) * np.exp(_log_S_complex(u * w))
            - u / (1.0 - v) * np.exp(_log_S_complex(u / w)))


def bracket_B(u, v):
    """The odd bracket B(u, v) for real u >= 0 and |v| < 1."""
    ua = _checked(u, "u")
    va = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(va)) or np.any(np.abs(va) >= 1):
        raise DomainError(f"|v| must be < 1, got {v!r}")
    ub, vb = np.broadcast_arrays(np.atleast_1d(ua), np.atleast_1d(va))
    ub, vb = ub.ravel().astype(float), vb.ravel()
    x1 = ub * np.sqrt((1.0 - vb) / (1.0 + vb))
    x2 = ub * np.sqrt((1.0 + vb) / (1.0 - vb))
    out = ub / (1.0 + vb) * _S(x1) - ub / (1.0 - vb) * _S(x2)
    if np.ndim(ua) == 0 and np.ndim(va) == 0:
        return float(out[0])
    return out.reshape(np.broadcast(ua, va).shape)


def _check_extraction(r_max, v_radius, node_count):
    if int(r_max) != r_max or r_max < 1:
        raise DomainError(f"r_max must be a positive integer, got {r_max!r}")
    if not 0 < v_radius < 1:
        raise DomainError(f"v_radius must lie in (0, 1), got {v_radius}")
    if node_count < 4 * r_max:
        raise DomainError(f"node_count must be >= 4 r_max = {4 * r_max}, got {node_count}")
    amp = _EPS * v_radius ** -(2 * r_max - 1)
    if amp > _MAX_AMPLIFICATION:
        raise IllConditionedError(
            f"s_{r_max} would carry rounding error ~{amp:.1e} x max|B| at v_radius={v_radius}; "
            "use a larger v_radius or fewer coefficients"
        )


def _sr_rows(u, r_max, v_radius, node_count):
    """s_1..s_rmax for each u; returns array of shape (len(u), r_max)."""
    k = np.arange(node_count)
    v = v_radius * np.exp(2j * np.pi * k / node_count)
    b = _bracket_complex(np.asarray(u, dtype=float)[:, None], v[None, :])
    c = np.fft.fft(b, axis=1) / node_count
    odd = np.arange(1, 2 * r_max, 2)
    return (c[:, odd] / v_radius**odd).real


def extract_sr(u_grid, r_max=DEFAULT_TABLE_R, v_radius=DEFAULT_V_RADIUS,
               node_count=DEFAULT_NODES, check_points=201):
    """Tabulate s_r(u) for r = 1..r_max on ``u_grid``.

    The reconstruction error of the truncated odd series against B on
    [-v_radius, v_radius] is stored per u (relative to max|B| there).
    """
    _check_extraction(r_max, v_radius, node_count)
    u = _checked(u_grid, "u_grid").ravel()
    if np.any(np.diff(u) <= 0):
        raise DomainError("u_grid must be strictly increasing")
    rows = _sr_rows(u, r_max, v_radius, node_count)

    v = np.linspace(-v_radius, v_radius, check_points)
    powers = v[None, :] ** np.arange(1, 2 * r_max, 2)[:, None]
    recon = rows @ powers
    exact = bracket_B(u[:, None], v[None, :])
    scale = np.abs(exact).max(axis=1)
    residual = np.abs(recon - exact).max(axis=1) / np.where(scale > 0, scale, 1.0)

    ratio = np.abs(rows[:, 1:]) * v_radius**2 < np.abs(rows[:, :-1])
    onset = np.array([_onset(row) for row in ratio])
    return SeriesTable(u, int(r_max), rows.T.copy(), float(v_radius), int(node_count),
                       residual, onset)


def _onset(flags):
    # first index from which at least 90% of the remaining ratios decay
    for i in range(len(flags)):
        if flags[i:].mean() >= 0.9:
            return i + 1
    return len(flags) + 1


def weight_integral(n, r):
    """C(r-1, n-1) * int_0^1 (1 - v^2)^(n-1) v^(2(r-n)) dv in closed form."""
    if int(n) != n or n < 1 or int(r) != r:
        raise DomainError(f"n must be a positive integer and r an integer, got {n!r}, {r!r}")
    if r < n:
        raise DomainError(f"need r >= n, got n={n}, r={r}")
    return float(comb(r - 1, n - 1, exact=True) * 0.5 * beta_fn(r - n + 0.5, n))


def moment_prefactor(n):
    return float(comb(2 * n, n, exact=True) * 2 * n / 4.0**n)


def even_moment(n, r_max=40, spec=QuadratureSpec(), v_radius=DEFAULT_V_RADIUS,
                node_count=DEFAULT_NODES, stop_rel=1e-6):
    """E[theta^(2n)] from the truncated bracket series.

    The u-integrals int_0^u_max S T s_r du for all r <= r_max share one
    adaptive subdivision.  The r-sum stops at r_max or once a term drops
    below ``stop_rel`` times the running sum; the remaining tail is
    extrapolated geometrically from the last two retained terms.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if r_max < n + 5:
        raise DomainError(f"r_max must be >= n + 5 = {n + 5}, got {r_max}")
    _check_extraction(r_max, v_radius, node_count)

    def f(u):
        return (_S(u) * _T(u))[:, None] * _sr_rows(u, r_max, v_radius, node_count)

    try:
        a, a_err, evals = integrate_1d(f, 0.0, spec.u_max, rel_tol=spec.rel_tol,
                                   abs_tol=spec.abs_tol, max_evals=spec.max_evals,
                                   breaks=(1.0, 2.0, 4.0, 8.0, 16.0, 32.0))
    except QuadratureError as exc:
        a, a_err, _ = exc.result
        raise QuadratureError(f"u-integral for moment order {2 * n}: {exc}",
                              MomentResult(n, float("nan"), 0, float("inf"), "series")) from exc

    # |T| <= 1/6 and |s_r(u)| <= max_{|v|=rho} |B(u, v)| / rho^(2r-1)
    edge = np.abs(_bracket_complex(spec.u_max, v_radius * np.exp(
        2j * np.pi * np.arange(node_count) / node_count))).max()
    u_tail = edge / spec.u_max * _S_tail(1, spec.u_max) / 6.0

    pref = moment_prefactor(n)
    terms, r_used = [], n
    for r in range(n, r_max + 1):
        terms.append(pref * weight_integral(n, r) * a[r - 1])
        r_used = r
        if len(terms) > 5 and abs(terms[-1]) < stop_rel * abs(math.fsum(terms)):
            break
    value = math.fsum(terms)
    q = abs(terms[-1] / terms[-2]) if terms[-2] != 0 else 0.0
    if q >= 1:
        raise QuadratureError(
            f"r-series for moment order {2 * n} is not decaying at r={r_used} "
            f"(ratio {q:.3f}); raise r_max within the v_radius limit",
            MomentResult(n, value, r_used, float("inf"), "series"),
        )
    r_tail = abs(terms[-1]) * q / (1.0 - q)
    w = [weight_integral(n, r) for r in range(n, r_used + 1)]
    u_tail_total = pref * math.fsum(wr * u_tail * v_radius ** -(2 * r - 1)
                                    for r, wr in zip(range(n, r_used + 1), w))
    quad_err = pref * math.fsum(w) * a_err
    if not 0 <= value <= 1:
        raise QuadratureError(f"moment order {2 * n} came out as {value}, outside [0, 1]",
                              MomentResult(n, value, r_used, r_tail, "series"))
    return MomentResult(n, float(value), r_used, float(r_tail + u_tail_total), "series",
                        float(quad_err), int(evals))
