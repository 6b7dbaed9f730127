"""Goodness-of-fit tests for second-order Pareto tails.

The central object is the defect supremum

    sup_x ( |x**tau * tail(x) - scale| - deviation * x**(-tau*beta0) )

over a range of x.  For empirical tails the supremum is computed exactly
by interval decomposition; for analytic tails a dense geometric grid is
used.  A tail model is rejected when the supremum exceeds half the
separation threshold for the sample size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .baselines import ConfidenceInterval, normal_quantile
from .empirics import (
    PlugInEstimates,
    TailSample,
    estimate_scale,
    hill_inverse_index,
    rate,
    sample_fraction,
)

__all__ = [
    "TestConfig",
    "TestOutcome",
    "sup_defect",
    "rejection_threshold",
    "test_known",
    "test_plugin",
    "test_windowed",
    "two_point_ci",
]


@dataclass(frozen=True)
class TestConfig:
    """Parameters shared by the model tests.

    ``beta0`` is the envelope exponent being tested against (``inf``
    drops the deviation allowance entirely), ``beta1`` the tighter
    reference exponent that sets the rates.  ``rho_mode`` picks the
    separation threshold: "theoretical" uses
    max(2*(entropy_coeff*log n + level_coeff*log(1/alpha)), 2*deviation)
    times the rate and holds the level conservatively; "practical" uses
    (log log n) times the rate and is calibrated for the grid procedure,
    not for standalone testing.  ``critical_constant`` overrides the
    default c1 = normal_quantile(1 - alpha/2) * tau_hat when set.
    """

    alpha: float = 0.05
    beta0: float = math.inf
    beta1: float = 1.0
    deviation: float = 1.0
    rho_mode: str = "theoretical"
    entropy_coeff: float = 1.0
    level_coeff: float = 1.0
    critical_constant: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly in (0, 1)")
        if not 0.0 < self.beta1 < self.beta0:
            raise ValueError("need 0 < beta1 < beta0 (beta0 may be inf)")
        if self.deviation <= 0.0:
            raise ValueError("deviation must be positive")
        if self.rho_mode not in ("theoretical", "practical"):
            raise ValueError(f"unknown rho_mode {self.rho_mode!r}")
        if self.critical_constant is not None and self.critical_constant < 0.0:
            raise ValueError("critical_constant must be nonnegative")

    def c1(self, tau_hat: float) -> float:
        if self.critical_constant is not None:
            return self.critical_constant
        return normal_quantile(1.0 - self.alpha / 2.0) * tau_hat


@dataclass(frozen=True)
class TestOutcome:
    """Decision record: reject holds exactly when statistic >= threshold/2."""

    statistic: float
    threshold: float
    reject: bool
    argmax_x: float
    estimates: PlugInEstimates | None = None
    degenerate: bool = False

    def __post_init__(self) -> None:
        if self.reject != (self.statistic >= 0.5 * self.threshold):
            raise ValueError("reject flag inconsistent with statistic/threshold")


def _degenerate_outcome(
    threshold: float, estimates: PlugInEstimates | None
) -> TestOutcome:
    # -inf keeps the reject/statistic invariant while marking the value unusable
    return TestOutcome(
        statistic=-math.inf,
        threshold=threshold,
        reject=False,
        argmax_x=math.nan,
        estimates=estimates,
        degenerate=True,
    )


def sup_defect(
    tail_fn: Callable[[np.ndarray], np.ndarray],
    tau: float,
    scale: float,
    deviation: float,
    beta0: float,
    x_max: float,
    jumps: Sequence[float] | np.ndarray | None = None,
    *,
    x_min: float = 1.0,
    grid_points: int = 10_000,
    anchors: Sequence[float] | None = None,
) -> tuple[float, float]:
    """Supremum of the penalized envelope defect over [x_min, x_max].

    With ``jumps`` given (the discontinuity locations of a right-continuous
    step tail) the supremum is exact: on each maximal interval of constant
    tail value c the candidates are the left endpoint, the right endpoint
    approached from the left, and the interior stationary point
    ``x* = (deviation*beta0/c)**(1/(tau*(1+beta0)))`` of
    scale - c*x**tau - deviation*x**(-tau*beta0), kept when it lies inside
    the interval and c*x***tau < scale.  Without jumps a geometric grid of
    ``grid_points`` plus optional ``anchors`` is evaluated.

    Returns (supremum, location); ties resolve to the smallest location.
    ``beta0 = inf`` or ``deviation = 0`` drops the penalty term.
    """
    if x_max <= 1.0:
        raise ValueError(f"x_max must exceed 1, got {x_max}")
    if x_min >= x_max:
        raise ValueError(f"need x_min < x_max, got [{x_min}, {x_max}]")
    if tau <= 0.0 or scale < 0.0 or deviation < 0.0:
        raise ValueError("tau must be positive, scale/deviation nonnegative")
    penalized = deviation > 0.0 and math.isfinite(beta0)

    def defect(xs: np.ndarray, tails: np.ndarray) -> np.ndarray:
        vals = np.abs(tails * xs**tau - scale)
        if penalized:
            vals = vals - deviation * xs ** (-tau * beta0)
        return vals

    if jumps is not None and len(jumps) > 0:
        pts = np.asarray(jumps, dtype=np.float64)
        inner = np.unique(pts[(pts > x_min) & (pts < x_max)])
        edges = np.concatenate(([x_min], inner, [x_max]))
        left, right = edges[:-1], edges[1:]
        level = np.asarray(tail_fn(left), dtype=np.float64)
        xs_parts = [left, right, np.array([x_max])]
        tails_parts = [level, level, np.atleast_1d(tail_fn(np.float64(x_max)))]
        if penalized:
            # zero-level pieces give station = inf and 0*inf = nan; both
            # comparisons are then false, which is the intended drop
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                station = (deviation * beta0 / level) ** (
                    1.0 / (tau * (1.0 + beta0))
                )
                keep = (
                    (left < station)
                    & (station < right)
                    & (level * station**tau < scale)
                )
            xs_parts.append(station[keep])
            tails_parts.append(level[keep])
        xs = np.concatenate(xs_parts)
        tails = np.concatenate(tails_parts)
    else:
        xs = np.geomspace(x_min, x_max, grid_points)
        if anchors is not None:
            extra = np.asarray(anchors, dtype=np.float64)
            extra = extra[(extra >= x_min) & (extra <= x_max)]
            xs = np.unique(np.concatenate([xs, extra]))
        tails = np.asarray(tail_fn(xs), dtype=np.float64)

    vals = defect(xs, tails)
    best = float(np.max(vals))
    where = float(np.min(xs[vals == best]))
    return best, where


def rejection_threshold(n: int, beta: float, config: TestConfig) -> float:
    """Separation threshold rho_n at reference exponent ``beta``."""
    if config.rho_mode == "practical":
        if n < 16:
            raise ValueError("practical threshold needs n >= 16 (log log n > 0)")
        return math.log(math.log(n)) * rate(n, beta)
    bulk = 2.0 * (
        config.entropy_coeff * math.log(n)
        + config.level_coeff * math.log(1.0 / config.alpha)
    )
    return max(bulk, 2.0 * config.deviation) * rate(n, beta)


def test_known(
    sample: TailSample, tau: float, scale: float, config: TestConfig
) -> TestOutcome:
    """Envelope test with known tail index and scale.

    The supremum runs over [1, n**(1/(tau*(2*beta1+1)))]; rejection
    compares it against half the separation threshold.
    """
    if tau <= 0.0 or scale <= 0.0:
        raise ValueError("tau and scale must be positive")
    n = sample.n
    x_max = float(n) ** (1.0 / (tau * (2.0 * config.beta1 + 1.0)))
    threshold = rejection_threshold(n, config.beta1, config)
    statistic, argmax = sup_defect(
        sample.tail,
        tau,
        scale,
        config.deviation,
        config.beta0,
        x_max,
        jumps=sample.distinct(),
    )
    return TestOutcome(
        statistic=statistic,
        threshold=threshold,
        reject=statistic >= 0.5 * threshold,
        argmax_x=argmax,
    )


def test_plugin(sample: TailSample, config: TestConfig) -> TestOutcome:
    """Envelope test with estimated index, scale, and supremum bound.

    The index comes from Hill's estimate at the rate-optimal fraction for
    ``beta1``; the scale and supremum bound come from the plug-in
    construction.  Degenerate estimates yield a flagged non-rejection.
    """
    n = sample.n
    threshold = rejection_threshold(n, config.beta1, config)
    k = sample_fraction(n, config.beta1)
    inv = hill_inverse_index(sample, k)
    if inv <= 0.0:
        return _degenerate_outcome(threshold, None)
    tau_hat = 1.0 / inv
    estimates = estimate_scale(
        sample, tau_hat, config.beta1, config.c1(tau_hat), k_used=k
    )
    if estimates.degenerate:
        return _degenerate_outcome(threshold, estimates)
    statistic, argmax = sup_defect(
        sample.tail,
        tau_hat,
        estimates.scale_hat,
        config.deviation,
        config.beta0,
        estimates.sup_bound,
        jumps=sample.distinct(),
    )
    return TestOutcome(
        statistic=statistic,
        threshold=threshold,
        reject=statistic >= 0.5 * threshold,
        argmax_x=argmax,
        estimates=estimates,
    )


def test_windowed(
    sample: TailSample, tau: float, scale: float, config: TestConfig
) -> TestOutcome:
    """Known-parameter test restricted to the window where both reference
    exponents are active: [n**(1/(tau*(2*beta0+1))), n**(1/(tau*(2*beta1+1)))].

    Requires finite beta0 > beta1; a collapsed window is a domain error.
    """
    if not math.isfinite(config.beta0):
        raise ValueError("windowed test needs finite beta0")
    if tau <= 0.0 or scale <= 0.0:
        raise ValueError("tau and scale must be positive")
    n = sample.n
    lo = float(n) ** (1.0 / (tau * (2.0 * config.beta0 + 1.0)))
    hi = float(n) ** (1.0 / (tau * (2.0 * config.beta1 + 1.0)))
    if lo >= hi:
        raise ValueError(f"window [{lo}, {hi}] is empty; need beta0 > beta1")
    threshold = rejection_threshold(n, config.beta1, config)
    statistic, argmax = sup_defect(
        sample.tail,
        tau,
        scale,
        config.deviation,
        config.beta0,
        hi,
        jumps=sample.distinct(),
        x_min=lo,
    )
    return TestOutcome(
        statistic=statistic,
        threshold=threshold,
        reject=statistic >= 0.5 * threshold,
        argmax_x=argmax,
    )


def two_point_ci(sample: TailSample, config: TestConfig) -> ConfidenceInterval:
    """Two-width adaptive interval for tau.

    Runs the plug-in test; on rejection the interval uses the tighter
    reference exponent's rate and re-estimates tau at that exponent's
    fraction, otherwise the wider exponent's.  Width is
    c1 * n**(-beta/(2*beta+1)) around the re-estimated tau.
    """
    outcome = test_plugin(sample, config)
    beta_sel = config.beta1 if outcome.reject else config.beta0
    n = sample.n
    inv = hill_inverse_index(sample, sample_fraction(n, beta_sel))
    if inv <= 0.0:
        return ConfidenceInterval.around(
            target="tau",
            center=math.nan,
            half_width=0.0,
            method="two_point",
            degenerate=True,
        )
    tau_sel = 1.0 / inv
    half = config.c1(tau_sel) * rate(n, beta_sel)
    return ConfidenceInterval.around(
        target="tau", center=tau_sel, half_width=half, method="two_point"
    )
