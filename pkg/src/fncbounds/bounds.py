"""Confidence bounds for the fraction of a normal population beyond a limit.

For a sample summary (n, mean, sd) and a lower limit L, the pivotal statistic
``t = sqrt(n) * (L - mean) / sd`` is noncentral t with n - 1 degrees of
freedom and noncentrality ``sqrt(n) * Phi^-1(p)``, where p is the true
fraction below L. Inverting the CDF in the noncentrality gives the bounds.
The upper-limit tail is handled by reflecting the sample about zero.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

from scipy import optimize

from .errors import ConvergenceError, DomainError
from .special import NctParams, nct_cdf, norm_cdf, norm_quantile

RESIDUAL_TOL = 1e-10
_MIRROR_TOL = 1e-12
_MAX_EXPANSIONS = 60

# Toggle for the reflection-vs-complement self-check in upper_tail_bounds.
CROSS_CHECK = True


@dataclass(frozen=True)
class SampleSummary:
    """Sufficient statistics of a sample of control measurements."""

    n: int
    mean: float
    sd: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise DomainError(f"sample size n must be an integer >= 2, got {self.n!r}")
        if not math.isfinite(self.mean):
            raise DomainError(f"mean must be finite, got {self.mean!r}")
        if not (math.isfinite(self.sd) and self.sd > 0):
            raise DomainError(f"sd must be finite and > 0, got {self.sd!r}")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class QualitySpec:
    """Assigned value and allowable error with the derived specification limits."""

    true_value: float
    e_max: float
    lsl: float
    usl: float

    def __post_init__(self):
        if not (self.lsl < self.usl):
            raise DomainError(f"lsl must be below usl, got {self.lsl!r} >= {self.usl!r}")


def make_quality_spec(true_value: float, e_max: float) -> QualitySpec:
    """Build limits ``c * (1 - e_max)`` and ``c * (1 + e_max)``."""
    if not (math.isfinite(true_value) and true_value > 0):
        raise DomainError(f"true_value must be finite and > 0, got {true_value!r}")
    if not (0.0 < e_max < 1.0):
        raise DomainError(f"e_max must lie in (0, 1), got {e_max!r}")
    return QualitySpec(
        true_value=true_value,
        e_max=e_max,
        lsl=true_value * (1.0 - e_max),
        usl=true_value * (1.0 + e_max),
    )


@dataclass(frozen=True)
class TailBounds:
    """Plug-in estimate and confidence bounds for one tail fraction.

    ``underflow`` names the cells (``"expected"``, ``"lower"``, ``"upper"``)
    whose value fell below the smallest normal double and was reported as 0.
    """

    expected: float
    lower: float
    upper: float
    delta_hat_upper: float
    delta_hat_lower: float
    underflow: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not (self.lower <= self.upper):
            raise ValueError(f"lower bound {self.lower!r} exceeds upper bound {self.upper!r}")


@dataclass(frozen=True)
class BoundsReport:
    sample: SampleSummary
    spec: QualitySpec
    gamma: float
    lower_tail: TailBounds
    upper_tail: TailBounds


def _check_gamma(gamma):
    if not (0.0 < gamma < 1.0):
        raise DomainError(f"confidence level gamma must lie in (0, 1), got {gamma!r}")


def expected_fraction_lower(sample: SampleSummary, limit: float) -> float:
    """Plug-in estimate of P(X <= limit) using the sample mean and sd."""
    if not math.isfinite(limit):
        raise DomainError(f"limit must be finite, got {limit!r}")
    return norm_cdf((limit - sample.mean) / sample.sd)


def solve_delta_hat(nu: int, t_stat: float, target: float) -> float:
    """Noncentrality ``d`` with ``nct_cdf((nu, d), t_stat) == target``.

    The CDF is strictly decreasing in ``d``, so a bracket is grown outward
    from a normal-approximation guess until it straddles the target and
    Brent's method finishes the job.

    Raises:
        DomainError: on invalid arguments.
        ConvergenceError: if no bracket is found or the final residual
            exceeds ``RESIDUAL_TOL``; carries the best bracket.
    """
    if isinstance(nu, bool) or int(nu) != nu or nu < 1:
        raise DomainError(f"nu must be an integer >= 1, got {nu!r}")
    if not math.isfinite(t_stat):
        raise DomainError(f"t_stat must be finite, got {t_stat!r}")
    if not (0.0 < target < 1.0):
        raise DomainError(f"target probability must lie in (0, 1), got {target!r}")
    nu = int(nu)

    def resid(d):
        return nct_cdf(NctParams(nu, d), t_stat) - target

    # F(t; d) ~ Phi((t - d) / sqrt(1 + t^2 / (2 nu)))
    scale = math.sqrt(1.0 + t_stat * t_stat / (2.0 * nu))
    guess = t_stat - norm_quantile(target) * scale
    step = 2.0 * max(1.0, abs(t_stat) / math.sqrt(nu))

    f0 = resid(guess)
    if f0 == 0.0:
        return guess
    # f decreasing in d: f0 > 0 means the root lies above the guess
    direction = 1.0 if f0 > 0 else -1.0
    a, fa = guess, f0
    b = fb = None
    for _ in range(_MAX_EXPANSIONS):
        cand = a + direction * step
        fc = resid(cand)
        if fc == 0.0:
            return cand
        if (fc > 0) != (fa > 0):
            b, fb = cand, fc
            break
        a, fa = cand, fc
        step *= 2.0
    if b is None:
        raise ConvergenceError(
            f"could not bracket the noncentrality for nu={nu}, t={t_stat!r}, "
            f"target={target!r}",
            bracket=(a, a),
            residual=fa,
        )
    lo, hi = (a, b) if a < b else (b, a)
    root, info = optimize.brentq(
        resid, lo, hi, xtol=1e-14 * max(1.0, abs(t_stat)), rtol=4 * sys.float_info.epsilon,
        maxiter=200, full_output=True, disp=False,
    )
    r = resid(root)
    if not info.converged or abs(r) > RESIDUAL_TOL:
        raise ConvergenceError(
            f"noncentrality solve missed tolerance for nu={nu}, t={t_stat!r}, "
            f"target={target!r}: residual {r!r}",
            bracket=(lo, hi),
            residual=r,
        )
    return root


def t_statistic(sample: SampleSummary, limit: float) -> float:
    """``sqrt(n) * (limit - mean) / sd``, noncentral t under normal sampling."""
    return math.sqrt(sample.n) * (limit - sample.mean) / sample.sd


def upper_bound_below(sample: SampleSummary, limit: float, gamma: float) -> tuple[float, float]:
    """Upper confidence bound at level ``gamma`` on P(X <= limit).

    Returns ``(bound, delta_hat)``. Calling it with ``1 - gamma`` gives the
    lower bound at level ``gamma``.
    """
    _check_gamma(gamma)
    if not math.isfinite(limit):
        raise DomainError(f"limit must be finite, got {limit!r}")
    n = sample.n
    d = solve_delta_hat(n - 1, t_statistic(sample, limit), 1.0 - gamma)
    return norm_cdf(d / math.sqrt(n)), d


def lower_tail_bounds(sample: SampleSummary, limit: float, gamma: float) -> TailBounds:
    """Bounds on the fraction of the population at or below ``limit``."""
    _check_gamma(gamma)
    expected = expected_fraction_lower(sample, limit)
    upper, d_up = upper_bound_below(sample, limit, gamma)
    lower, d_lo = upper_bound_below(sample, limit, 1.0 - gamma)
    return _assemble(expected, lower, upper, d_up, d_lo)


def _assemble(expected, lower, upper, d_up, d_lo):
    tiny = sys.float_info.min
    flags = []
    values = {"expected": expected, "lower": lower, "upper": upper}
    for name, v in values.items():
        if v < tiny:
            values[name] = 0.0
            flags.append(name)
    return TailBounds(
        expected=values["expected"],
        lower=values["lower"],
        upper=values["upper"],
        delta_hat_upper=d_up,
        delta_hat_lower=d_lo,
        underflow=tuple(flags),
    )


def mirror(sample: SampleSummary) -> SampleSummary:
    """Reflect the sample about zero; upper-limit tails become lower-limit tails."""
    return SampleSummary(sample.n, -sample.mean, sample.sd)


def _upper_tail_by_complement(sample, limit, gamma):
    """Bounds on P(X > limit) as complements of bounds on P(X <= limit)."""
    below = lower_tail_bounds(sample, limit, gamma)
    return (1.0 - below.expected, 1.0 - below.upper, 1.0 - below.lower)


def upper_tail_bounds(sample: SampleSummary, limit: float, gamma: float) -> TailBounds:
    """Bounds on the fraction of the population above ``limit``.

    Computed by reflection: the fraction above ``limit`` for mean ``m`` is the
    fraction below ``-limit`` for mean ``-m``. When assertions are enabled the
    result is cross-checked against the complement route.
    """
    _check_gamma(gamma)
    if not math.isfinite(limit):
        raise DomainError(f"limit must be finite, got {limit!r}")
    result = lower_tail_bounds(mirror(sample), -limit, gamma)
    if __debug__ and CROSS_CHECK:
        alt = _upper_tail_by_complement(sample, limit, gamma)
        got = (result.expected, result.lower, result.upper)
        assert all(abs(x - y) <= _MIRROR_TOL for x, y in zip(got, alt)), (
            f"reflection and complement routes disagree: {got} vs {alt}"
        )
    return result


def bounds_report(sample: SampleSummary, spec: QualitySpec, gamma: float) -> BoundsReport:
    _check_gamma(gamma)
    return BoundsReport(
        sample=sample,
        spec=spec,
        gamma=gamma,
        lower_tail=lower_tail_bounds(sample, spec.lsl, gamma),
        upper_tail=upper_tail_bounds(sample, spec.usl, gamma),
    )
