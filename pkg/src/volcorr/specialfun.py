"""Scalar special functions behind the closed-form moment generating function.

Everything here is vectorised over numpy arrays; scalar input gives a
Python float back.  The functions are

    S(u)   = sqrt(u / sinh u)
    T(c)   = (1 - c coth c) / (2 c^2)        (= S'(c) / (c S(c)))
    F      = S(c+) S(c-)                      (MGF of the quadratic forms)

together with the spectral coordinates c+/c- and the derivative of F in its
third argument.  Removable singularities at the origin are handled by series
branches, large arguments by log-space or saturated forms.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import zeta

from .errors import DomainError

__all__ = [
    "MgfPoint",
    "CPair",
    "eval_S",
    "eval_T",
    "eval_T_prime",
    "cpair",
    "dcpair_dz",
    "eval_F",
    "dF_dz",
    "S_SERIES_CUTOFF",
    "S_LOG_CUTOFF",
    "T_SERIES_CUTOFF",
    "TPRIME_SERIES_CUTOFF",
]

S_SERIES_CUTOFF = 1e-3
S_LOG_CUTOFF = 30.0
T_SERIES_CUTOFF = 0.5
TPRIME_SERIES_CUTOFF = 1.5

# 1 - c coth c = sum_{k>=1} d_k c^{2k},  d_k = -2 (-1)^{k+1} zeta(2k) / pi^{2k}.
# Radius of convergence is pi; 40 terms reach rounding level for c <= 1.5.
_NTERMS = 40
_K = np.arange(1, _NTERMS + 1)
_D = -2.0 * (-1.0) ** (_K + 1) * zeta(2.0 * _K) / np.pi ** (2 * _K)
_D[:2] = (-1.0 / 3.0, 1.0 / 45.0)
_T_COEF = _D / 2.0                                # T(c) = sum _T_COEF[k-1] c^{2k-2}
_TP_COEF = (_D * (2 * _K - 2) / 2.0)[1:]          # T'(c) = sum c^{2k-3}, k >= 2


def _checked(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be nonnegative, got {x!r}")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def _horner_even(coef, x2):
    acc = np.zeros_like(x2)
    for ck in coef[::-1]:
        acc = acc * x2 + ck
    return acc


def _S(u):
    """S on a checked float array (no validation)."""
    out = np.empty_like(u)
    small = u < S_SERIES_CUTOFF
    large = u > S_LOG_CUTOFF
    mid = ~(small | large)
    us = u[small] ** 2
    out[small] = np.exp(-us / 12.0 + us * us / 360.0 - us**3 / 5670.0)
    um = u[mid]
    out[mid] = np.sqrt(um / np.sinh(um))
    ul = u[large]
    out[large] = np.exp(0.5 * (np.log(ul) - ul + math.log(2.0) - np.log1p(-np.exp(-2.0 * ul))))
    return out


def _T(c):
    out = np.empty_like(c)
    small = c < T_SERIES_CUTOFF
    out[small] = _horner_even(_T_COEF, c[small] ** 2)
    cb = c[~small]
    out[~small] = (1.0 - cb / np.tanh(cb)) / (2.0 * cb * cb)
    return out


def _T_prime(c):
    out = np.empty_like(c)
    small = c < TPRIME_SERIES_CUTOFF
    cs = c[small]
    out[small] = cs * _horner_even(_TP_COEF, cs * cs)
    cb = c[~small]
    e = np.exp(-2.0 * cb)
    inv_sinh2 = 4.0 * e / (1.0 - e) ** 2
    out[~small] = -1.0 / cb**3 + 1.0 / (2.0 * cb * cb * np.tanh(cb)) + inv_sinh2 / (2.0 * cb)
    return out


def eval_S(u):
    """Return sqrt(u / sinh u), with S(0) = 1.

    Uses a Taylor branch below ``S_SERIES_CUTOFF`` and a log-space form above
    ``S_LOG_CUTOFF`` so that nothing overflows for large ``u``.
    """
    arr = _checked(u, "u")
    return _out(_S(np.atleast_1d(arr)).reshape(arr.shape), u)


def eval_T(c):
    """Return (1 - c coth c) / (2 c^2), with T(0) = -1/6.

    Below ``T_SERIES_CUTOFF`` the zeta-coefficient series of ``1 - c coth c``
    is summed instead of the cancelling closed form.
    """
    arr = _checked(c, "c")
    return _out(_T(np.atleast_1d(arr)).reshape(arr.shape), c)


def eval_T_prime(c):
    """Derivative of :func:`eval_T`.

    The closed form ``-1/c^3 + coth(c)/(2c^2) + 1/(2c sinh^2 c)`` loses about
    ``log10(45/c^4)`` digits, so the series is used up to ``c = 1.5``.
    """
    arr = _checked(c, "c")
    return _out(_T_prime(np.atleast_1d(arr)).reshape(arr.shape), c)


@dataclass(frozen=True)
class MgfPoint:
    """Argument triple (beta1, beta2, a) of the moment generating function."""

    beta1: float
    beta2: float
    a: float

    def __post_init__(self):
        for name in ("beta1", "beta2", "a"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if self.beta1 < 0 or self.beta2 < 0:
            raise DomainError(f"betas must be nonnegative, got {self.beta1}, {self.beta2}")
        if abs(self.a) > 1:
            raise DomainError(f"|a| must be <= 1, got {self.a}")


@dataclass(frozen=True)
class CPair:
    c_plus: float
    c_minus: float


def _cpair_arrays(b1, b2, a):
    """Vectorised c+/c-; inputs assumed admissible.

    c- is recovered from the product identity c+^2 c-^2 = b1^2 b2^2 (1 - a^2)
    instead of (s - D)/2, which cancels badly when one beta dominates or
    |a| -> 1.
    """
    b1s = b1 * b1
    b2s = b2 * b2
    # hypot: squaring b1^2 - b2^2 underflows once the betas drop below ~1e-77
    disc = np.hypot(b1s - b2s, 2.0 * np.abs(a) * (b1 * b2))
    cp = np.sqrt(0.5 * (b1s + b2s + disc))
    with np.errstate(invalid="ignore", divide="ignore"):
        cm = np.where(cp > 0, b1 * b2 / np.where(cp > 0, cp, 1.0), 0.0)
    # rounding can push c- an ulp past c+ when the two coincide
    cm = np.minimum(cm * np.sqrt((1.0 - a) * (1.0 + a)), cp)
    return cp, cm, disc


def cpair(p):
    """Spectral coordinates (c+, c-) of an :class:`MgfPoint`."""
    cp, cm, _ = _cpair_arrays(np.float64(p.beta1), np.float64(p.beta2), np.float64(abs(p.a)))
    return CPair(float(cp), float(cm))


def dcpair_dz(p):
    """Derivatives of (c+, c-) with respect to the correlation slot ``a``.

    dc+/dz = z b1^2 b2^2 / (c+ D) and dc-/dz = -z b1^2 b2^2 / (c- D), with
    D = sqrt((b1^2 - b2^2)^2 + 4 z^2 b1^2 b2^2).
    """
    _require_interior(p)
    b1s, b2s = p.beta1**2, p.beta2**2
    cp, cm, disc = _cpair_arrays(np.float64(p.beta1), np.float64(p.beta2), np.float64(abs(p.a)))
    num = p.a * b1s * b2s / float(disc)
    return num / float(cp), -num / float(cm)


def eval_F(p):
    """F(beta1, beta2, a) = S(c+) S(c-)."""
    c = cpair(p)
    return float(_S(np.array([c.c_plus]))[0] * _S(np.array([c.c_minus]))[0])


def _require_interior(p):
    if not abs(p.a) < 1:
        raise DomainError(f"derivative in a needs |a| < 1, got {p.a}")
    if not (p.beta1 > 0 and p.beta2 > 0):
        raise DomainError("derivative in a needs beta1 > 0 and beta2 > 0")
    if p.beta1 == p.beta2 and p.a == 0:
        raise DomainError("c+ and c- coincide at beta1 == beta2, a == 0")


def _dd_T_sq(cp, cm):
    """(T(c+) - T(c-)) / (c+^2 - c-^2) without cancellation near c+ == c-."""
    gap = cp - cm
    near = gap < 1e-4 * np.maximum(1.0, cp)
    safe = np.where(near, 1.0, gap)
    dd = np.where(near, _T_prime(0.5 * (cp + cm)), (_T(cp) - _T(cm)) / safe)
    return dd / (cp + cm)


def zdF_dz_arrays(b1, b2, z):
    """Vectorised z * dF/dz for b1, b2 > 0, 0 <= z < 1.

    Chain rule through c+/c- collapses to
    z dF/dz = z^2 b1^2 b2^2 S(c+) S(c-) (T(c+) - T(c-)) / (c+^2 - c-^2),
    which stays finite on the b1 == b2 ridge.
    """
    cp, cm, _ = _cpair_arrays(b1, b2, z)
    return (z * b1 * b2) ** 2 * _S(cp) * _S(cm) * _dd_T_sq(cp, cm)


def dF_dz(p):
    """Partial derivative of F in its third argument at ``a = p.a``."""
    _require_interior(p)
    z = abs(p.a)
    if z == 0:
        return 0.0
    b1 = np.array([p.beta1])
    b2 = np.array([p.beta2])
    val = float(zdF_dz_arrays(b1, b2, np.float64(z))[0]) / z
    return math.copysign(val, p.a)
