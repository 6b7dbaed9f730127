"""Adaptive confidence intervals over a grid of envelope exponents.

The procedure tests progressively tighter second-order envelopes along a
decreasing grid of exponents, estimates the largest exponent still
compatible with the data, and sizes the final interval by that exponent's
convergence rate.  Thresholds here are always the practical
(log log n) * rate form; the theoretical thresholds in
:mod:`tailadapt.soptest` are too conservative to ever reject at
experiment scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baselines import ConfidenceInterval, normal_quantile
from .empirics import (
    TailSample,
    estimate_scale,
    hill_inverse_index,
    rate,
    sample_fraction,
    stable_floor,
)
from .soptest import TestOutcome, sup_defect

__all__ = [
    "GridSpec",
    "BetaEstimate",
    "build_grid",
    "calibrate_deviation",
    "successive_tests",
    "estimate_beta",
    "adaptive_ci",
]

# additive floor keeping the calibrated deviation budget away from zero
_DEVIATION_FLOOR = 0.2


@dataclass(frozen=True)
class GridSpec:
    """Equally spaced decreasing exponents from ``top`` down to ``bottom``.

    ``betas[i] = top - i*(top - bottom)/size`` for i = 0..size; ``size``
    is floor(log(n)/xi).  The successive tests run at indices 2..size
    because each test's penalty exponent looks two grid steps up.
    """

    bottom: float
    top: float
    xi: float
    n: int
    size: int
    betas: tuple[float, ...]

    def __post_init__(self) -> None:
        if not 0.0 < self.bottom < self.top:
            raise ValueError("need 0 < bottom < top")
        if self.size < 3:
            raise ValueError("grid needs at least 3 steps")


def build_grid(bottom: float, top: float, xi: float, n: int) -> GridSpec:
    """Build the exponent grid for sample size ``n`` with spacing rule ``xi``."""
    if not 0.0 < bottom < top:
        raise ValueError(f"need 0 < bottom < top, got [{bottom}, {top}]")
    if xi <= 0.0:
        raise ValueError("xi must be positive")
    if n < 2:
        raise ValueError("need n >= 2")
    size = stable_floor(math.log(n) / xi)
    if size < 3:
        minimal = math.ceil(math.exp(3.0 * xi))
        raise ValueError(
            f"grid has {size} steps; floor(log(n)/xi) >= 3 requires n >= {minimal} "
            f"for xi={xi:g}"
        )
    betas = tuple(float(v) for v in np.linspace(top, bottom, size + 1))
    return GridSpec(bottom=bottom, top=top, xi=xi, n=n, size=size, betas=betas)


def calibrate_deviation(sample, estimates, alpha: float, beta: float) -> float:
    """Data-driven deviation budget for one grid level.

    Takes the exact supremum of the unpenalized defect over the level's
    range, inflates it by 1 + sqrt(log(1/alpha)) * rate, and adds a 0.2
    floor so the budget never vanishes.  Degenerate estimates get the
    bare floor.
    """
    if estimates.degenerate:
        return _DEVIATION_FLOOR
    inner, _ = sup_defect(
        sample.tail,
        estimates.tau_hat,
        estimates.scale_hat,
        0.0,
        math.inf,
        estimates.sup_bound,
        jumps=sample.distinct(),
    )
    slack = math.sqrt(math.log(1.0 / alpha)) * rate(sample.n, beta)
    return inner * (1.0 + slack) + _DEVIATION_FLOOR


def successive_tests(
    sample: TailSample,
    grid: GridSpec,
    alpha: float,
    deviation: float | None = None,
) -> list[TestOutcome]:
    """Envelope tests at grid indices 2..size, in index order.

    At each level i the index is re-estimated at that level's fraction,
    the supremum bound is inflated by (log log n) times the rate, and the
    penalty uses the exponent two steps up (``betas[i-2]``).  ``deviation``
    None means the per-level calibrated budget; a float fixes one budget
    globally.  Levels with unusable estimates are flagged and never
    reject; a vanished Hill estimate falls back to the widest level's.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly in (0, 1)")
    if deviation is not None and deviation <= 0.0:
        raise ValueError("fixed deviation must be positive")
    n = sample.n
    if n < 16:
        raise ValueError("grid procedure needs n >= 16 (log log n > 0)")
    loglog = math.log(math.log(n))
    quant = normal_quantile(1.0 - alpha / 2.0)
    jumps = sample.distinct()
    fallback_inv = hill_inverse_index(sample, sample_fraction(n, grid.bottom))

    outcomes: list[TestOutcome] = []
    for i in range(2, grid.size + 1):
        beta_i = grid.betas[i]
        threshold = loglog * rate(n, beta_i)
        k_i = sample_fraction(n, beta_i)
        inv_i = hill_inverse_index(sample, k_i)
        if inv_i <= 0.0:
            inv_i = fallback_inv
        if inv_i <= 0.0:
            outcomes.append(_flagged(threshold))
            continue
        tau_i = 1.0 / inv_i
        estimates = estimate_scale(
            sample, tau_i, beta_i, loglog * quant * tau_i, k_used=k_i
        )
        if estimates.degenerate:
            outcomes.append(_flagged(threshold, estimates))
            continue
        budget = (
            deviation
            if deviation is not None
            else calibrate_deviation(sample, estimates, alpha, beta_i)
        )
        statistic, argmax = sup_defect(
            sample.tail,
            tau_i,
            estimates.scale_hat,
            budget,
            grid.betas[i - 2],
            estimates.sup_bound,
            jumps=jumps,
        )
        outcomes.append(
            TestOutcome(
                statistic=statistic,
                threshold=threshold,
                reject=statistic >= 0.5 * threshold,
                argmax_x=argmax,
                estimates=estimates,
            )
        )
    return outcomes


def _flagged(threshold: float, estimates=None) -> TestOutcome:
    return TestOutcome(
        statistic=-math.inf,
        threshold=threshold,
        reject=False,
        argmax_x=math.nan,
        estimates=estimates,
        degenerate=True,
    )


@dataclass(frozen=True)
class BetaEstimate:
    """Selected exponent from the rejection pattern.

    Each outcome at list position m exercises the envelope with exponent
    ``betas[m]`` (the penalty two grid steps above its own level m+2), so
    a rejection at position m certifies the data outside that envelope and
    the selected grid index is m+2.  ``index`` is the largest such m+2,
    or 0 (grid top) when nothing rejects.
    """

    index: int
    beta: float
    per_index: tuple[TestOutcome, ...]


def estimate_beta(outcomes: list[TestOutcome], grid: GridSpec) -> BetaEstimate:
    """Exponent estimate from the rejection pattern of successive_tests."""
    if len(outcomes) != grid.size - 1:
        raise ValueError(
            f"expected {grid.size - 1} outcomes for this grid, got {len(outcomes)}"
        )
    rejecting = [i for i, out in enumerate(outcomes, start=2) if out.reject]
    index = max(rejecting) if rejecting else 0
    return BetaEstimate(
        index=index, beta=grid.betas[index], per_index=tuple(outcomes)
    )


def adaptive_ci(
    sample: TailSample,
    grid: GridSpec,
    alpha: float,
    deviation: float | None = None,
    target: str = "inverse_tau",
    convention: str = "one_past",
) -> ConfidenceInterval:
    """Adaptive interval for the tail index or its reciprocal.

    Runs the successive tests, selects a working level, and sizes the
    interval by that level's rate: half-width
    c1 * (log log n) * n**(-beta_j/(2*beta_j+1)) with c1 the normal
    quantile times the level's index estimate (reciprocal for
    target="inverse_tau").

    ``convention`` picks the working level: "one_past" (default) works one
    grid step past the selected exponent index, min(index+1, size) — the
    width-conservative choice that carries the coverage guarantee;
    "last_reject" sizes the interval at the selected index itself, i.e.
    the last level whose test fired in an ascending scan.  Both fall back
    to level 1 when nothing rejects.
    """
    outcomes = successive_tests(sample, grid, alpha, deviation)
    selected = estimate_beta(outcomes, grid)
    return interval_from_tests(
        sample, grid, alpha, selected, target=target, convention=convention
    )


def interval_from_tests(
    sample: TailSample,
    grid: GridSpec,
    alpha: float,
    selected: BetaEstimate,
    target: str = "inverse_tau",
    convention: str = "one_past",
) -> ConfidenceInterval:
    """Interval construction given already-computed successive tests."""
    if target not in ("tau", "inverse_tau"):
        raise ValueError(f"unknown target {target!r}")
    if convention not in ("one_past", "last_reject"):
        raise ValueError(f"unknown convention {convention!r}")
    outcomes = selected.per_index
    if convention == "one_past":
        level = min(selected.index + 1, grid.size)
    else:
        level = selected.index if selected.index >= 2 else 1
    n = sample.n

    inv_level = None
    if level >= 2 and outcomes[level - 2].estimates is not None:
        inv_level = 1.0 / outcomes[level - 2].estimates.tau_hat
    else:
        inv_level = hill_inverse_index(
            sample, sample_fraction(n, grid.betas[level])
        )
        if inv_level <= 0.0:
            inv_level = hill_inverse_index(
                sample, sample_fraction(n, grid.bottom)
            )

    if inv_level is None or inv_level <= 0.0:
        # nothing estimable anywhere: widest interval, flagged
        return ConfidenceInterval.around(
            target=target,
            center=math.nan,
            half_width=0.0,
            method="adaptive",
            grid_index=grid.size,
            degenerate=True,
        )

    beta_level = grid.betas[level]
    loglog = math.log(math.log(n))
    quant = normal_quantile(1.0 - alpha / 2.0)
    if target == "tau":
        center = 1.0 / inv_level
        c1 = quant * center
    else:
        center = inv_level
        c1 = quant * inv_level
    half = c1 * loglog * rate(n, beta_level)
    return ConfidenceInterval.around(
        target=target,
        center=center,
        half_width=half,
        method="adaptive",
        grid_index=level,
    )
