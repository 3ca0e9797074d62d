"""Monte Carlo estimates of the empirical correlation of integrated noise.

Each replication draws two independent paths from its own Philox stream.
Philox is counter based, so the stream for replication ``i`` is fixed by the
key (the user seed) and the high counter words (replication id, lane); no
state is shared between replications.  Any split of the replications over
worker processes therefore gives the same per-replication values, and the
moments are reduced with ``math.fsum`` in replication order.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
import logging
import math

import numpy as np

from .errors import ConfigurationError, DegenerateInputError
from .kernel import GridSpec, PathPair

__all__ = [
    "SimConfig",
    "MomentTable",
    "Histogram",
    "SimulationResult",
    "RNG_ALGORITHM",
    "gen_walk",
    "theta_n",
    "theta_prime_n",
    "simulate",
    "estimate_moments",
    "moments_from_samples",
    "histogram",
    "histogram_from_samples",
    "quantile_interval",
    "quadratic_forms",
    "empirical_mgf",
]

log = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy Philox4x64-10; key=seed, counter=[0, 0, lane, replication]"
STEP_DISTS = ("gaussian", "rademacher")
_MAX_RESAMPLE = 1000


@dataclass(frozen=True)
class SimConfig:
    n: int = 10_000
    paths: int = 10_000
    seed: int = 42
    workers: int = 1
    step_dist: str = "gaussian"
    max_moment: int = 10

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ConfigurationError(f"n must be an integer >= 2, got {self.n!r}")
        if int(self.paths) != self.paths or self.paths < 1:
            raise ConfigurationError(f"paths must be a positive integer, got {self.paths!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ConfigurationError(f"workers must be a positive integer, got {self.workers!r}")
        if self.step_dist not in STEP_DISTS:
            raise ConfigurationError(f"step_dist must be one of {STEP_DISTS}, got {self.step_dist!r}")
        if int(self.max_moment) != self.max_moment or self.max_moment < 2 or self.max_moment % 2:
            raise ConfigurationError(f"max_moment must be an even integer >= 2, got {self.max_moment!r}")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MomentTable:
    """Row k holds the estimate of E[theta^k] and its standard error."""

    orders: np.ndarray
    estimate: np.ndarray
    std_error: np.ndarray
    paths: int

    def rows(self):
        return [
            {"order": int(k), "estimate": float(e), "std_error": float(s)}
            for k, e, s in zip(self.orders, self.estimate, self.std_error)
        ]


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    total: int


@dataclass(frozen=True)
class SimulationResult:
    config: SimConfig
    theta: np.ndarray
    resampled: int


def _generator(seed, replication, lane):
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, lane, replication]))


def _steps(rng, n, step_dist):
    if step_dist == "gaussian":
        return rng.standard_normal(n) / math.sqrt(n)
    return (2.0 * rng.integers(0, 2, n) - 1.0) / math.sqrt(n)


def _walk(seed, replication, lane, n, step_dist):
    steps = _steps(_generator(seed, replication, lane), n, step_dist)
    w = np.empty(n + 1)
    w[0] = 0.0
    np.cumsum(steps, out=w[1:])
    return w


def gen_walk(cfg, stream_id, attempt=0):
    """Two independent walks with n steps on the grid k/n; both start at 0.

    Gaussian steps have variance 1/n, so the pair discretises two independent
    Wiener processes on [0, 1].  ``attempt > 0`` selects the reserved lanes
    used to replace a degenerate replication.
    """
    lane = 2 * attempt
    w1 = _walk(cfg.seed, stream_id, lane, cfg.n, cfg.step_dist)
    w2 = _walk(cfg.seed, stream_id, lane + 1, cfg.n, cfg.step_dist)
    return PathPair(GridSpec(cfg.n), w1, w2)


def _pearson(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ConfigurationError("need two 1-D sequences of equal length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInputError("a sequence has zero sample variance")
    return float(xc @ yc) / math.sqrt(sxx * syy)


def theta_n(paths, other=None):
    """Empirical correlation of two partial-sum sequences.

    With a :class:`PathPair` the samples after the initial zero are used,
    i.e. S_1..S_n; otherwise the two sequences are taken as given.
    """
    if isinstance(paths, PathPair):
        return _pearson(paths.w1[1:], paths.w2[1:])
    return _pearson(paths, other)


def theta_prime_n(steps1, steps2):
    """Correlation of the raw steps rather than their partial sums."""
    return _pearson(steps1, steps2)


def _replicate(cfg, i):
    for attempt in range(_MAX_RESAMPLE):
        pp = gen_walk(cfg, i, attempt)
        try:
            return theta_n(pp), attempt
        except DegenerateInputError:
            continue
    raise DegenerateInputError(f"replication {i} stayed degenerate after {_MAX_RESAMPLE} draws")


def _run_chunk(cfg, start, stop):
    theta = np.empty(stop - start)
    resampled = 0
    for j, i in enumerate(range(start, stop)):
        theta[j], extra = _replicate(cfg, i)
        resampled += extra > 0
    return theta, resampled


def _chunks(paths, workers):
    size = max(1, -(-paths // (4 * workers)))
    return [(s, min(s + size, paths)) for s in range(0, paths, size)]


@lru_cache(maxsize=4)
def simulate(cfg):
    """Run every replication; returns the ordered theta samples."""
    chunks = _chunks(cfg.paths, cfg.workers)
    if cfg.workers == 1:
        parts = [_run_chunk(cfg, a, b) for a, b in chunks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run_chunk, [cfg] * len(chunks), *zip(*chunks)))
    theta = np.concatenate([p[0] for p in parts])
    resampled = sum(p[1] for p in parts)
    if resampled:
        log.warning("%d of %d replications were degenerate and resampled", resampled, cfg.paths)
    bad = np.abs(theta) > 1
    assert not bad.any(), f"|theta| > 1 in replications {np.flatnonzero(bad)[:5]}"
    theta.setflags(write=False)
    return SimulationResult(cfg, theta, int(resampled))


def moments_from_samples(theta, max_moment=10):
    theta = np.asarray(theta, dtype=float)
    n = len(theta)
    orders = np.arange(max_moment + 1)
    est = np.empty(len(orders))
    se = np.empty(len(orders))
    for k in orders:
        x = theta**k
        mean = math.fsum(x) / n
        var = math.fsum((x - mean) ** 2) / (n - 1) if n > 1 else 0.0
        est[k] = mean
        se[k] = math.sqrt(var / n)
    est[0], se[0] = 1.0, 0.0
    return MomentTable(orders, est, se, n)


def estimate_moments(cfg):
    """Sample moments of theta of orders 0..max_moment with standard errors."""
    return moments_from_samples(simulate(cfg).theta, cfg.max_moment)


def histogram_from_samples(theta, bins=50):
    if bins < 10:
        raise ConfigurationError(f"need at least 10 bins, got {bins}")
    edges = np.linspace(-1.0, 1.0, bins + 1)
    counts, _ = np.histogram(theta, bins=edges)
    return Histogram(edges, counts, int(counts.sum()))


def histogram(cfg, bins=50):
    """Counts of theta over ``bins`` equal bins spanning [-1, 1]."""
    return histogram_from_samples(simulate(cfg).theta, bins)


def quantile_interval(samples, mass=0.95):
    """Equal-tail interval holding ``mass`` of the samples (linear interpolation)."""
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 100:
        raise ConfigurationError(f"need at least 100 samples, got {len(samples)}")
    if not 0 < mass < 1:
        raise ConfigurationError(f"mass must lie in (0, 1), got {mass}")
    lo, hi = np.quantile(samples, [(1 - mass) / 2, (1 + mass) / 2])
    return float(lo), float(hi)


def quadratic_forms(paths):
    """(X11, X12, X22) in O(m).

    Same value as the left-node double sum over the kernel: that sum
    telescopes to a right-endpoint Riemann sum of the centred products.
    """
    h = paths.grid.h
    w1 = paths.w1[1:]
    w2 = paths.w2[1:]
    m1 = h * w1.sum()
    m2 = h * w2.sum()
    x11 = h * (w1 @ w1) - m1 * m1
    x22 = h * (w2 @ w2) - m2 * m2
    x12 = h * (w1 @ w2) - m1 * m2
    return float(x11), float(x12), float(x22)


def empirical_mgf(cfg, beta1, beta2, a):
    """Sample mean and standard error of exp(a b1 b2 X12 - b1^2 X11 / 2 - b2^2 X22 / 2)."""
    vals = np.empty(cfg.paths)
    for i in range(cfg.paths):
        x11, x12, x22 = quadratic_forms(gen_walk(cfg, i))
        vals[i] = math.exp(a * beta1 * beta2 * x12 - 0.5 * beta1**2 * x11 - 0.5 * beta2**2 * x22)
    mean = math.fsum(vals) / cfg.paths
    se = math.sqrt(math.fsum((vals - mean) ** 2) / (cfg.paths - 1) / cfg.paths)
    return mean, se
