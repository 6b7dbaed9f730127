"""Wald and score confidence intervals around Hill's estimate.

These are the classical asymptotic-normality intervals used as yardsticks
for the adaptive procedure, together with the tail fractions they are
evaluated at and the standard normal quantile they share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .empirics import TailSample, hill_inverse_index, sample_fraction, stable_floor

__all__ = [
    "ConfidenceInterval",
    "normal_quantile",
    "undersmoothed_fraction",
    "wald_interval",
    "score_interval",
]


@dataclass(frozen=True)
class ConfidenceInterval:
    """Closed interval for the tail index or its reciprocal.

    ``lower``/``upper`` are the data; ``center`` and ``half_width`` are
    derived views (infinite for unbounded intervals).  ``degenerate``
    flags intervals produced from unusable estimates; ``unbounded`` flags
    an infinite upper endpoint.  Flagged intervals are excluded from
    coverage/size aggregation by the experiment harness.
    """

    target: str  # "tau" or "inverse_tau"
    lower: float
    upper: float
    method: str
    grid_index: int | None = None
    degenerate: bool = False
    unbounded: bool = False

    def __post_init__(self) -> None:
        if self.target not in ("tau", "inverse_tau"):
            raise ValueError(f"unknown target {self.target!r}")
        if self.upper < self.lower:
            raise ValueError("interval endpoints out of order")

    @classmethod
    def around(
        cls,
        target: str,
        center: float,
        half_width: float,
        method: str,
        grid_index: int | None = None,
        degenerate: bool = False,
    ) -> "ConfidenceInterval":
        if half_width < 0.0:
            raise ValueError("half_width must be nonnegative")
        return cls(
            target=target,
            lower=center - half_width,
            upper=center + half_width,
            method=method,
            grid_index=grid_index,
            degenerate=degenerate,
        )

    @property
    def center(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    @property
    def size(self) -> float:
        return self.upper - self.lower

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


# Wichura's PPND16 rational approximations (Applied Statistics 37, 1988),
# split at |p - 1/2| <= 0.425 and r = sqrt(-log(min(p, 1-p))) <= 5.
_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _ratpoly(num, den, r: float) -> float:
    p = 0.0
    q = 0.0
    for a, b in zip(reversed(num), reversed(den)):
        p = p * r + a
        q = q * r + b
    return p / q


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF, absolute error below 1e-9."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie strictly in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _ratpoly(_A, _B, r)
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        value = _ratpoly(_C, _D, r - 1.6)
    else:
        value = _ratpoly(_E, _F, r - 5.0)
    return -value if q < 0.0 else value


def undersmoothed_fraction(n: int, beta: float) -> int:
    """Tail fraction ``floor(sample_fraction(n, beta) / sqrt(log n))``.

    Deliberately smaller than the rate-optimal fraction so the Hill bias
    becomes negligible relative to the interval width.  Clamped to
    ``[1, n - 1]``.
    """
    k = sample_fraction(n, beta)
    shrunk = stable_floor(k / math.sqrt(math.log(n)))
    return max(1, min(shrunk, n - 1))


def wald_interval(sample: TailSample, k: int, alpha: float) -> ConfidenceInterval:
    """Symmetric normal interval for 1/tau around the Hill estimate at ``k``."""
    _check_level(alpha)
    inv = hill_inverse_index(sample, k)
    spread = normal_quantile(1.0 - alpha / 2.0) / math.sqrt(k)
    return ConfidenceInterval.around(
        target="inverse_tau",
        center=inv,
        half_width=spread * inv,
        method="wald",
        degenerate=(inv <= 0.0),
    )


def score_interval(sample: TailSample, k: int, alpha: float) -> ConfidenceInterval:
    """Score-form interval (1/(1+s), 1/(1-s)) scaling of the Hill estimate.

    When ``s = q/sqrt(k) >= 1`` the upper endpoint diverges; the interval
    is returned with an infinite upper endpoint and the unbounded flag.
    """
    _check_level(alpha)
    inv = hill_inverse_index(sample, k)
    s = normal_quantile(1.0 - alpha / 2.0) / math.sqrt(k)
    lower = inv / (1.0 + s)
    if s >= 1.0:
        return ConfidenceInterval(
            target="inverse_tau",
            lower=lower,
            upper=math.inf,
            method="score",
            degenerate=(inv <= 0.0),
            unbounded=True,
        )
    return ConfidenceInterval(
        target="inverse_tau",
        lower=lower,
        upper=inv / (1.0 - s),
        method="score",
        degenerate=(inv <= 0.0),
    )


def _check_level(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha}")
