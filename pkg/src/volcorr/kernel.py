"""Brownian-bridge covariance kernel, its spectrum and the quadratic forms X_ij.

The kernel M(s, t) = min(s, t) - s t has eigenfunctions sqrt(2) sin(pi n t)
with eigenvalues 1/(pi n)^2.  The two-process kernel built from M has, for
each n, the eigenvalue pair lambda_n * (eigenvalues of
[[-b1^2, a b1 b2], [a b1 b2, -b2^2]]), and the Fredholm determinant of that
operator reproduces the closed-form MGF.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigurationError, DomainError
from .specialfun import MgfPoint, cpair

__all__ = [
    "GridSpec",
    "EigenPair",
    "TkSpectrum",
    "FredholmProduct",
    "PathPair",
    "kernel_M",
    "apply_TM",
    "simpson_weights",
    "mercer_partial_sum",
    "tk_spectrum",
    "fredholm_det_truncated",
    "quadratic_form_X",
    "centered_cross_moment",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid s_k = k/m, k = 0..m, on [0, 1]."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ConfigurationError(f"grid needs an integer m >= 2, got {self.m!r}")

    @property
    def nodes(self):
        return np.arange(self.m + 1) / self.m

    @property
    def h(self):
        return 1.0 / self.m


@dataclass(frozen=True)
class EigenPair:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"eigen index must be a positive integer, got {self.n!r}")

    @property
    def lam(self):
        return 1.0 / (math.pi**2 * self.n**2)

    def psi(self, t):
        return math.sqrt(2.0) * np.sin(math.pi * self.n * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class TkSpectrum:
    """First N eigenvalue pairs; ``gammas[n-1] = (gamma_n^+, gamma_n^-)``."""

    point: MgfPoint
    gammas: np.ndarray


@dataclass(frozen=True)
class FredholmProduct:
    value: float
    log_value: float
    tail_estimate: float
    terms: int


@dataclass(frozen=True)
class PathPair:
    """Two paths sampled on the same grid, both starting at zero."""

    grid: GridSpec
    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self):
        n = self.grid.m + 1
        if len(self.w1) != n or len(self.w2) != n:
            raise ConfigurationError(
                f"paths must have {n} samples, got {len(self.w1)} and {len(self.w2)}"
            )

    def path(self, i):
        if i == 1:
            return np.asarray(self.w1, dtype=float)
        if i == 2:
            return np.asarray(self.w2, dtype=float)
        raise DomainError(f"path index must be 1 or 2, got {i!r}")


def kernel_M(s1, s2):
    """min(s1, s2) - s1 s2 on the unit square."""
    a = np.asarray(s1, dtype=float)
    b = np.asarray(s2, dtype=float)
    if np.any((a < 0) | (a > 1)) or np.any((b < 0) | (b > 1)) or not (
        np.all(np.isfinite(a)) and np.all(np.isfinite(b))
    ):
        raise DomainError("kernel arguments must lie in [0, 1]")
    out = np.minimum(a, b) - a * b
    return float(out) if out.ndim == 0 else out


def simpson_weights(grid):
    if grid.m % 2:
        raise ConfigurationError(f"composite Simpson needs an even m, got {grid.m}")
    w = np.ones(grid.m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * grid.h / 3.0


def apply_TM(g, grid, block=256):
    """Composite-Simpson approximation of (T_M g)(s) at every grid node.

    ``g`` holds samples at the nodes.  Rows are processed in blocks so the
    dense kernel never has to be materialised for large m.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.m + 1,):
        raise ConfigurationError(f"expected {grid.m + 1} samples, got shape {g.shape}")
    wg = simpson_weights(grid) * g
    s = grid.nodes
    out = np.empty_like(s)
    for start in range(0, len(s), block):
        rows = s[start:start + block, None]
        out[start:start + block] = (np.minimum(rows, s[None, :]) - rows * s[None, :]) @ wg
    return out


def mercer_partial_sum(s, t, N):
    """sum_{n <= N} lambda_n psi_n(s) psi_n(t), which tends to M(s, t)."""
    s = np.asarray(s, dtype=float)[..., None]
    t = np.asarray(t, dtype=float)[..., None]
    n = np.arange(1, N + 1)
    terms = 2.0 * np.sin(math.pi * n * s) * np.sin(math.pi * n * t) / (math.pi**2 * n**2)
    return terms[..., ::-1].sum(axis=-1)


def tk_spectrum(p, N):
    """Eigenvalue pairs gamma_n^+ >= gamma_n^- for n = 1..N.

    gamma_n^+ = -lambda_n (c-)^2 and gamma_n^- = -lambda_n (c+)^2, which equals
    lambda_n (-(b1^2 + b2^2) +- sqrt((b1^2 - b2^2)^2 + 4 a^2 b1^2 b2^2)) / 2
    without the cancellation in the + branch.
    """
    if int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N!r}")
    c = cpair(p)
    lam = 1.0 / (math.pi**2 * np.arange(1, N + 1) ** 2)
    gammas = np.column_stack([-lam * c.c_minus**2, -lam * c.c_plus**2])
    return TkSpectrum(p, gammas)


def fredholm_det_truncated(p, N):
    """prod_{n <= N} (1 - gamma_n^+)(1 - gamma_n^-), accumulated as a log-sum.

    ``tail_estimate`` is the omitted eigenvalue mass
    sum_{n > N} |gamma_n^+| + |gamma_n^-| ~ (b1^2 + b2^2) / (pi^2 N), which is
    also the leading-order relative truncation error of the product.
    """
    spec = tk_spectrum(p, N)
    logs = np.log1p(-spec.gammas).ravel()
    log_value = math.fsum(logs)
    s = p.beta1**2 + p.beta2**2
    tail = s / math.pi**2 * _zeta2_tail(N)
    return FredholmProduct(math.exp(log_value), log_value, tail, int(N))


def _zeta2_tail(N):
    # sum_{n > N} 1/n^2 = 1/N - 1/(2N^2) + 1/(6N^3) - ...
    return 1.0 / N - 0.5 / N**2 + 1.0 / (6.0 * N**3)


def quadratic_form_X(paths, i, j):
    """sum_{k,l} M(s_k, s_l) dW_i(k) dW_j(l) with left-node kernel values.

    O(m^2); the result is symmetrised so that X_ij and X_ji are the same bits.
    """
    a = np.diff(paths.path(i))
    b = np.diff(paths.path(j))
    s = paths.grid.nodes[:-1]
    mb = np.empty_like(a)
    ma = np.empty_like(a)
    block = 512
    for start in range(0, len(s), block):
        rows = s[start:start + block, None]
        kern = np.minimum(rows, s[None, :]) - rows * s[None, :]
        mb[start:start + block] = kern @ b
        ma[start:start + block] = kern @ a
    return 0.5 * (float(a @ mb) + float(b @ ma))


def centered_cross_moment(paths, i, j):
    """Y_ij = int W_i W_j - int W_i int W_j by the trapezoid rule on the grid."""
    wi = paths.path(i)
    wj = paths.path(j)
    h = paths.grid.h
    return float(np.trapezoid(wi * wj, dx=h) - np.trapezoid(wi, dx=h) * np.trapezoid(wj, dx=h))
