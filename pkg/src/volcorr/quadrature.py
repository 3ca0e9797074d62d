"""Adaptive Gauss-Kronrod integration and the second-moment double integral.

The cubature is a global-adaptive product rule: every cell carries a 15-point
Kronrod estimate per axis and the embedded 7-point Gauss estimate; the cell
with the largest ``|K - G|`` is bisected along whichever axis contributes more
of that difference.  Cell bookkeeping is ordered by (error, cell id) and the
final sums use ``math.fsum``, so a given spec always reproduces the same bits.
"""

from dataclasses import dataclass, replace
import heapq
import math

import numpy as np
from scipy.special import gamma, gammaincc

from .errors import ConfigurationError, QuadratureError
from .specialfun import _S, _T, _T_prime, _checked, zdF_dz_arrays

__all__ = [
    "QuadratureSpec",
    "IntegralResult",
    "gk15_rule",
    "integrate_1d",
    "integrate_2d",
    "divided_diff_T",
    "second_moment_integrand",
    "second_moment",
    "second_moment_tail",
    "generating_rhs",
    "generating_lhs",
]

# 15-point Kronrod abscissae/weights and the embedded 7-point Gauss weights
# (QUADPACK qk15), listed from the outermost node inwards.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GWEIGHTS = np.zeros(15)
GWEIGHTS[1::2] = np.concatenate([_WG[:-1], _WG[::-1]])


def gk15_rule():
    """Return (nodes, kronrod_weights, gauss_weights) on [-1, 1].

    Gauss weights are zero at the Kronrod-only nodes.
    """
    return NODES.copy(), KWEIGHTS.copy(), GWEIGHTS.copy()


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    u_max: float = 60.0
    diag_eps: float = 1e-4
    max_evals: int = 5_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigurationError("rel_tol and abs_tol must be positive")
        if not self.u_max > 1:
            raise ConfigurationError("u_max must exceed 1")
        if not 0 < self.diag_eps < 0.1:
            raise ConfigurationError("diag_eps must lie in (0, 0.1)")
        if self.max_evals < 1:
            raise ConfigurationError("max_evals must be positive")


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    evaluations: int
    truncation_tail: float = 0.0

    def to_dict(self):
        return {
            "value": self.value,
            "error_estimate": self.error_estimate,
            "truncation_tail": self.truncation_tail,
            "evaluations": self.evaluations,
        }


def _tolerance(total, rel_tol, abs_tol):
    return max(abs_tol, rel_tol * float(np.max(np.abs(total))))


def integrate_1d(f, a, b, rel_tol=1e-10, abs_tol=1e-14, max_evals=200_000, breaks=None):
    """Global-adaptive GK15 on [a, b].

    ``f`` maps an array of shape (n,) to shape (n,) or (n, k); vector-valued
    integrands share one subdivision and the per-cell error is the max over
    components.  Returns (value, error_estimate, evaluations) with ``value``
    a float or an array of length k.
    """
    edges = [a] + sorted(x for x in (breaks or ()) if a < x < b) + [b]
    cells = list(zip(edges[:-1], edges[1:]))
    heap, done = [], {}
    evals = 0
    next_id = 0

    def evaluate(batch):
        nonlocal evals
        lo = np.array([c[0] for c in batch])
        hi = np.array([c[1] for c in batch])
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        x = mid[:, None] + half[:, None] * NODES[None, :]
        y = np.asarray(f(x.ravel()), dtype=float)
        y = y.reshape(len(batch), 15, *y.shape[1:])
        evals += y.shape[0] * 15
        k = np.tensordot(y, KWEIGHTS, axes=([1], [0]))
        g = np.tensordot(y, GWEIGHTS, axes=([1], [0]))
        scale = half.reshape(-1, *([1] * (k.ndim - 1)))
        k, g = k * scale, g * scale
        err = np.abs(k - g)
        if err.ndim > 1:
            err = err.max(axis=1)
        return k, err

    def push(batch):
        nonlocal next_id
        vals, errs = evaluate(batch)
        for (lo, hi), v, e in zip(batch, vals, errs):
            done[next_id] = (lo, hi, v, float(e))
            heapq.heappush(heap, (-float(e), next_id))
            next_id += 1

    def totals():
        ids = sorted(done)
        vals = np.array([done[i][2] for i in ids])
        if vals.ndim == 1:
            val = math.fsum(vals)
        else:
            val = np.array([math.fsum(col) for col in vals.T])
        return val, math.fsum(done[i][3] for i in ids)

    push(cells)
    while True:
        value, err = totals()
        if err <= _tolerance(value, rel_tol, abs_tol):
            return value, err, evals
        if evals >= max_evals:
            raise QuadratureError(
                f"1-D budget of {max_evals} evaluations exhausted (error {err:.3e})",
                (value, err, evals),
            )
        batch = []
        for _ in range(min(8, len(heap))):
            _, cid = heapq.heappop(heap)
            lo, hi, _, _ = done.pop(cid)
            m = 0.5 * (lo + hi)
            batch += [(lo, m), (m, hi)]
        push(batch)


def integrate_2d(f, x0, x1, y0, y1, rel_tol=1e-8, abs_tol=1e-12, max_evals=5_000_000,
                 x_breaks=(), y_breaks=()):
    """Global-adaptive product GK15 cubature on a rectangle.

    ``f(x, y)`` is evaluated on broadcast arrays.  Returns an
    :class:`IntegralResult` (``truncation_tail`` left at 0) or raises
    :class:`QuadratureError` carrying the best estimate.
    """
    xe = [x0] + sorted(b for b in x_breaks if x0 < b < x1) + [x1]
    ye = [y0] + sorted(b for b in y_breaks if y0 < b < y1) + [y1]
    start = [(a, b, c, d) for a, b in zip(xe[:-1], xe[1:]) for c, d in zip(ye[:-1], ye[1:])]
    heap, done = [], {}
    evals = 0
    next_id = 0
    kk = np.outer(KWEIGHTS, KWEIGHTS)
    gk = np.outer(GWEIGHTS, KWEIGHTS)   # Gauss in x, Kronrod in y
    kg = np.outer(KWEIGHTS, GWEIGHTS)
    gg = np.outer(GWEIGHTS, GWEIGHTS)

    def push(batch):
        nonlocal evals, next_id
        cells = np.array(batch)
        mx, hx = 0.5 * (cells[:, 0] + cells[:, 1]), 0.5 * (cells[:, 1] - cells[:, 0])
        my, hy = 0.5 * (cells[:, 2] + cells[:, 3]), 0.5 * (cells[:, 3] - cells[:, 2])
        X = (mx[:, None] + hx[:, None] * NODES[None, :])[:, :, None]
        Y = (my[:, None] + hy[:, None] * NODES[None, :])[:, None, :]
        X, Y = np.broadcast_arrays(X, Y)
        vals = np.asarray(f(X, Y), dtype=float)
        evals += vals.size
        area = hx * hy
        k = np.einsum("bij,ij->b", vals, kk) * area
        ex = np.abs(k - np.einsum("bij,ij->b", vals, gk) * area)
        ey = np.abs(k - np.einsum("bij,ij->b", vals, kg) * area)
        e = np.abs(k - np.einsum("bij,ij->b", vals, gg) * area)
        for cell, kv, ev, exv, eyv in zip(batch, k, e, ex, ey):
            done[next_id] = (cell, float(kv), float(ev), exv >= eyv)
            heapq.heappush(heap, (-float(ev), next_id))
            next_id += 1

    push(start)
    while True:
        ids = sorted(done)
        value = math.fsum(done[i][1] for i in ids)
        err = math.fsum(done[i][2] for i in ids)
        if err <= _tolerance(value, rel_tol, abs_tol):
            return IntegralResult(value, err, evals)
        if evals >= max_evals:
            raise QuadratureError(
                f"2-D budget of {max_evals} evaluations exhausted (error {err:.3e})",
                IntegralResult(value, err, evals),
            )
        batch = []
        for _ in range(min(16, len(heap))):
            _, cid = heapq.heappop(heap)
            (a, b, c, d), _, _, split_x = done.pop(cid)
            if split_x:
                m = 0.5 * (a + b)
                batch += [(a, m, c, d), (m, b, c, d)]
            else:
                m = 0.5 * (c + d)
                batch += [(a, b, c, m), (a, b, m, d)]
        push(batch)


def divided_diff_T(u1, u2, diag_eps=1e-4):
    """(T(u1) - T(u2)) / (u1 - u2), switching to T'(midpoint) near the diagonal.

    The confluent branch is used when ``|u1 - u2| < diag_eps * max(1, u1, u2)``.
    Symmetric in its arguments.
    """
    a = _checked(u1, "u1")
    b = _checked(u2, "u2")
    x, y = np.broadcast_arrays(np.atleast_1d(a), np.atleast_1d(b))
    out = _dd(x.astype(float), y.astype(float), diag_eps)
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return float(out[0])
    return out.reshape(np.broadcast(a, b).shape)


def _dd(x, y, diag_eps):
    hi = np.maximum(x, y)
    lo = np.minimum(x, y)
    gap = hi - lo
    near = gap < diag_eps * np.maximum(1.0, hi)
    out = np.empty_like(hi)
    out[near] = _T_prime(0.5 * (hi[near] + lo[near]))
    far = ~near
    out[far] = (_T(hi[far]) - _T(lo[far])) / gap[far]
    return out


def _integrand(u1, u2, diag_eps):
    ssum = u1 + u2
    with np.errstate(invalid="ignore", divide="ignore"):
        pref = np.where(ssum > 0, 2.0 * u1 * u2 / np.where(ssum > 0, ssum, 1.0), 0.0)
    return pref * _S(u1) * _S(u2) * _dd(u1, u2, diag_eps)


def second_moment_integrand(u1, u2, diag_eps=1e-4):
    """(2 u1 u2 / (u1 + u2)) S(u1) S(u2) (T(u1) - T(u2)) / (u1 - u2).

    Finite everywhere on the closed quadrant; zero whenever u2 == 0.
    """
    a = _checked(u1, "u1")
    b = _checked(u2, "u2")
    x, y = np.broadcast_arrays(np.atleast_1d(a).astype(float), np.atleast_1d(b).astype(float))
    out = _integrand(x.ravel(), y.ravel(), diag_eps).reshape(x.shape)
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return float(out[0])
    return out


_C = np.linspace(0.0, 40.0, 40001)
# sup T' (attained near c ~ 1.9); the 1% pad covers grid resolution
TPRIME_MAX = 1.01 * float(np.max(_T_prime(_C)))
# sup (T(c+) - T(c-)) / (c+^2 - c-^2) = sup T'(c) / (2c), attained as c -> 0
DT_DC2_MAX = 1.0 / 90.0


def _S_tail(order, x):
    """Upper bound on the integral of x**order * S(x) over [x, inf).

    Uses S(x) <= sqrt(2x / (1 - exp(-2x))) exp(-x/2).
    """
    s = order + 1.5
    upper = gamma(s) * gammaincc(s, x / 2.0) * 2.0**s * math.sqrt(2.0)
    return float(upper / math.sqrt(-math.expm1(-2.0 * x)))


def _S_moment(order):
    val, _, _ = integrate_1d(lambda u: u**order * _S(u), 0.0, 200.0, rel_tol=1e-12, abs_tol=1e-15,
                             breaks=(1.0, 5.0, 20.0, 60.0))
    return val


_S_M1 = _S_moment(1)
_S_M3 = _S_moment(3)


def second_moment_tail(u_max):
    """Bound on the part of the second-moment integral with u1 > u_max."""
    return TPRIME_MAX * 2.0 * _S_M1 * _S_tail(0, u_max)


def second_moment(spec=QuadratureSpec()):
    """Integrate :func:`second_moment_integrand` over 0 <= u2 <= u1 <= u_max.

    The triangle is mapped to [0, u_max] x [0, 1] through u2 = t * u1 so the
    diagonal becomes the edge t = 1.  The analytic bound for u1 > u_max is
    returned in ``truncation_tail`` and is not added to ``value``.
    """
    def g(u1, t):
        shape = u1.shape
        u1 = u1.ravel()
        return (u1 * _integrand(u1, u1 * t.ravel(), spec.diag_eps)).reshape(shape)

    breaks = [x for x in (1.0, 2.0, 4.0, 8.0, 16.0, 32.0) if x < spec.u_max]
    try:
        res = integrate_2d(g, 0.0, spec.u_max, 0.0, 1.0, spec.rel_tol, spec.abs_tol,
                           spec.max_evals, x_breaks=breaks)
    except QuadratureError as exc:
        exc.result = replace(exc.result, truncation_tail=second_moment_tail(spec.u_max))
        raise
    return replace(res, truncation_tail=second_moment_tail(spec.u_max))


def _generating_tail(z, t_lo, t_hi, d_max):
    # z F' / (b1 b2) <= z^2 b1 b2 S(c+) S(c-) / 90 and S(c+) <= S(b1 / sqrt 2)
    c = 2.0 * z * z * DT_DC2_MAX
    small = c * math.exp(4.0 * t_lo) / 8.0
    wide = c * 4.0 * _S_M3 * math.exp(-2.0 * d_max) / 2.0
    x = math.exp(t_hi) / math.sqrt(2.0)
    large = c * 4.0 * _S_tail(3, x) / 2.0
    return small + wide + large


def generating_rhs(z, spec=QuadratureSpec(), t_lo=-8.0, d_max=20.0):
    """Double integral over beta1, beta2 > 0 of (d b1 / b1)(d b2 / b2) z dF/dz.

    Integrated in log coordinates t = ln(beta) on the half beta2 <= beta1
    (doubled), parametrised by (t1, d = t1 - t2) so the beta1 == beta2 ridge
    sits on the edge d = 0.  The upper cut is beta1 = sqrt(2) u_max, matching
    the second-moment tail policy.
    """
    if not 0 < z < 1:
        raise ConfigurationError(f"z must lie in (0, 1), got {z}")
    t_hi = math.log(math.sqrt(2.0) * spec.u_max)

    def g(t1, d):
        shape = t1.shape
        b1 = np.exp(t1.ravel())
        b2 = np.exp(t1.ravel() - d.ravel())
        return (2.0 * zdF_dz_arrays(b1, b2, z)).reshape(shape)

    tail = _generating_tail(z, t_lo, t_hi, d_max)
    try:
        res = integrate_2d(g, t_lo, t_hi, 0.0, d_max, spec.rel_tol, spec.abs_tol * z * z,
                           spec.max_evals, x_breaks=(-4.0, -2.0, 0.0, 2.0),
                           y_breaks=(0.5, 2.0, 6.0))
    except QuadratureError as exc:
        exc.result = replace(exc.result, truncation_tail=tail)
        raise
    return replace(res, truncation_tail=tail)


def generating_lhs(z, even_moments):
    """Left side of the generating identity truncated to the given moments.

    ``even_moments[k]`` is E[theta^(2k+2)].
    """
    total = []
    for k, mu in enumerate(even_moments):
        n = k + 1
        coef = math.exp(2 * math.lgamma(n + 1) + 2 * n * math.log(2.0) - math.lgamma(2 * n + 1))
        total.append(z ** (2 * n) / (2 * n) * mu * coef)
    return math.fsum(total)
