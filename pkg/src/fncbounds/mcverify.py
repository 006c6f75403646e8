"""Monte Carlo checks of the coverage guarantee and of the pivotal identity.

Randomness comes from numpy's counter-based Philox generator. Each coverage
trial gets its own stream keyed by ``(seed, trial_index)``, so results do not
depend on how trials are split across worker processes. Normal variates are
produced by inverting uniforms through ``norm_quantile_array``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import SampleSummary, mirror, upper_bound_below
from .errors import ConvergenceError, DomainError
from .special import norm_cdf, norm_quantile_array

_CHI2_SUM_MAX_DF = 64
_CHUNK = 200_000


class BoundKind(str, enum.Enum):
    """Which bound to score: ``<bound side>_<tail>``."""

    UPPER_LOWER_TAIL = "upper_lower_tail"
    LOWER_LOWER_TAIL = "lower_lower_tail"
    UPPER_UPPER_TAIL = "upper_upper_tail"
    LOWER_UPPER_TAIL = "lower_upper_tail"

    @property
    def is_upper_bound(self) -> bool:
        return self.value.startswith("upper_")

    @property
    def is_upper_tail(self) -> bool:
        return self.value.endswith("_upper_tail")


@dataclass(frozen=True)
class CoverageConfig:
    mu: float
    sigma: float
    n: int
    limit: float
    gamma: float
    trials: int
    seed: int

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"sigma must be > 0, got {self.sigma!r}")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n!r}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError(f"trials must be an integer >= 1, got {self.trials!r}")
        if not (0.0 < self.gamma < 1.0):
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma!r}")
        if not (math.isfinite(self.mu) and math.isfinite(self.limit)):
            raise DomainError("mu and limit must be finite")
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class CoverageResult:
    hits: int
    trials: int
    empirical_coverage: float
    standard_error: float
    failures: int = 0

    def within(self, target: float, half_width: float = 0.01) -> bool:
        return abs(self.empirical_coverage - target) <= half_width


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for ``seed`` and an optional stream index path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def standard_normals(rng: np.random.Generator, size) -> np.ndarray:
    u = rng.random(size)
    # rng.random is on [0, 1); 0 has probability 2^-53 per draw but is not invertible
    u[u == 0.0] = np.finfo(float).tiny
    return norm_quantile_array(u)


def chi_square(rng: np.random.Generator, df: int, size: int) -> np.ndarray:
    if df <= _CHI2_SUM_MAX_DF:
        z = standard_normals(rng, (size, df))
        return np.einsum("ij,ij->i", z, z)
    return 2.0 * rng.standard_gamma(0.5 * df, size)


def true_fraction(mu: float, sigma: float, limit: float, upper_tail: bool) -> float:
    if upper_tail:
        return norm_cdf((mu - limit) / sigma)
    return norm_cdf((limit - mu) / sigma)


def _bound(sample, limit, gamma, kind):
    if kind.is_upper_tail:
        sample, limit = mirror(sample), -limit
    level = gamma if kind.is_upper_bound else 1.0 - gamma
    return upper_bound_below(sample, limit, level)[0]


def _run_trials(args):
    config, kind, start, stop = args
    p_true = true_fraction(config.mu, config.sigma, config.limit, kind.is_upper_tail)
    hits = failures = 0
    for i in range(start, stop):
        rng = make_rng(config.seed, i)
        x = config.mu + config.sigma * standard_normals(rng, config.n)
        sample = SampleSummary(config.n, float(x.mean()), float(x.std(ddof=1)))
        try:
            b = _bound(sample, config.limit, config.gamma, kind)
        except ConvergenceError:
            failures += 1
            continue
        hits += (b >= p_true) if kind.is_upper_bound else (b <= p_true)
    return hits, failures


def simulate_coverage(config: CoverageConfig, bound_kind, jobs: int = 1) -> CoverageResult:
    """Estimate how often the chosen bound covers the true tail fraction.

    An upper bound covers when it is >= the true fraction, a lower bound when
    it is <=. Solver failures are counted apart and excluded from ``trials``.
    """
    kind = BoundKind(bound_kind)
    total = int(config.trials)
    if jobs <= 1 or total < 2:
        hits, failures = _run_trials((config, kind, 0, total))
    else:
        edges = np.linspace(0, total, min(total, 4 * jobs) + 1).astype(int)
        parts = [(config, kind, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trials, parts))
        hits = sum(h for h, _ in results)
        failures = sum(f for _, f in results)
    scored = total - failures
    cov = hits / scored if scored else float("nan")
    se = math.sqrt(cov * (1.0 - cov) / scored) if scored else float("nan")
    return CoverageResult(int(hits), scored, cov, se, failures)


def simulate_nct_statistic(nu: int, delta: float, draws: int, seed: int) -> np.ndarray:
    """``draws`` realizations of ``(Z + delta) / sqrt(V / nu)``."""
    if int(nu) != nu or nu < 1:
        raise DomainError(f"nu must be an integer >= 1, got {nu!r}")
    if int(draws) != draws or draws < 1:
        raise DomainError(f"draws must be a positive integer, got {draws!r}")
    if not math.isfinite(delta):
        raise DomainError(f"delta must be finite, got {delta!r}")
    nu, draws = int(nu), int(draws)
    rng = make_rng(seed)
    out = np.empty(draws)
    chunk = max(1, _CHUNK // max(1, min(nu, _CHI2_SUM_MAX_DF)))
    for lo in range(0, draws, chunk):
        m = min(chunk, draws - lo)
        z = standard_normals(rng, m)
        v = chi_square(rng, nu, m)
        out[lo:lo + m] = (z + delta) / np.sqrt(v / nu)
    return out


def simulate_pivot(mu: float, sigma: float, n: int, limit: float, draws: int,
                   seed: int) -> np.ndarray:
    """``sqrt(n) * (limit - xbar) / s`` over ``draws`` simulated normal samples."""
    if not (sigma > 0) or int(n) != n or n < 2:
        raise DomainError("need sigma > 0 and integer n >= 2")
    n, draws = int(n), int(draws)
    rng = make_rng(seed)
    out = np.empty(draws)
    chunk = max(1, _CHUNK // n)
    for lo in range(0, draws, chunk):
        m = min(chunk, draws - lo)
        x = mu + sigma * standard_normals(rng, (m, n))
        out[lo:lo + m] = math.sqrt(n) * (limit - x.mean(axis=1)) / x.std(axis=1, ddof=1)
    return out
