"""Order-statistic primitives shared by every estimator in the package.

Everything downstream works on a :class:`TailSample`: an ascending-sorted
array of positive observations with cached log order statistics, so that
Hill estimates at many tail fractions cost O(1) each after an O(n) setup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "TailSample",
    "PlugInEstimates",
    "hill_inverse_index",
    "sample_fraction",
    "rate",
    "estimate_scale",
    "stable_floor",
]

# Relative forgiveness when flooring a float power.  n**(2/3) for a perfect
# cube lands a few ulp under the true integer; a bare floor would lose it.
_FLOOR_SLACK = 1e-12


def stable_floor(value: float) -> int:
    """Floor of ``value`` tolerating a relative float error of ~1e-12."""
    if not math.isfinite(value):
        raise ValueError(f"cannot floor non-finite value {value!r}")
    return int(math.floor(value * (1.0 + _FLOOR_SLACK)))


@dataclass(frozen=True)
class TailSample:
    """Sorted positive sample with cached logs.

    Parameters
    ----------
    values:
        Observations, any order, strictly positive and finite.  Stored
        ascending-sorted as float64; the input is copied, never aliased.

    Notes
    -----
    ``top_logsum[k]`` caches the sum of the logs of the ``k`` largest
    observations, which makes Hill estimation O(1) per tail fraction.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("sample must be a nonempty one-dimensional array")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise ValueError("sample values must be positive and finite")
        arr = np.sort(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        logs = np.log(arr)
        logs.flags.writeable = False
        # cumulative log-sums from the top: top_logsum[k] = sum of k largest
        top = np.concatenate(([0.0], np.cumsum(logs[::-1])))
        top.flags.writeable = False
        object.__setattr__(self, "_logs", logs)
        object.__setattr__(self, "_top_logsum", top)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def maximum(self) -> float:
        return float(self.values[-1])

    def tail(self, x):
        """Empirical tail probability P_n(X > x), vectorized over ``x``."""
        idx = np.searchsorted(self.values, x, side="right")
        return (self.values.size - idx) / self.values.size

    def distinct(self) -> np.ndarray:
        """Distinct observed values, ascending (the jump set of the tail)."""
        return np.unique(self.values)


def hill_inverse_index(sample: TailSample, k: int) -> float:
    """Hill estimate of the inverse tail index from the ``k`` upper order stats.

    Returns the mean excess of log spacings over the anchor ``X_(n-k)``.
    Requires ``1 <= k <= n - 1``.  The estimate is zero when the top
    ``k + 1`` observations coincide.
    """
    n = sample.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    anchor = sample._logs[n - 1 - k]
    mean_top = sample._top_logsum[k] / k
    value = float(mean_top - anchor)
    # the true value is nonnegative; summation noise on (near-)tied top
    # blocks must come out as an exact zero, not +-1e-16
    noise = (k + 2) * np.finfo(np.float64).eps * max(abs(mean_top), abs(anchor))
    if abs(value) <= noise:
        return 0.0
    return value


def sample_fraction(n: int, beta: float) -> int:
    """Rate-optimal tail fraction ``floor(n**(2*beta/(2*beta+1)))``.

    ``beta`` may be ``inf`` (exponent 1).  Result is clamped to
    ``[1, n - 1]`` so a Hill estimate always exists.
    """
    if n < 2:
        raise ValueError("need n >= 2 observations")
    if not beta > 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    exponent = 2.0 / (2.0 + 1.0 / beta)  # == 2b/(2b+1), finite for beta=inf
    k = stable_floor(float(n) ** exponent)
    return max(1, min(k, n - 1))


def rate(n: int, beta: float) -> float:
    """Convergence rate ``n**(-beta/(2*beta+1))``; ``beta=inf`` gives n**-0.5."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not beta > 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    return float(n) ** (-1.0 / (2.0 + 1.0 / beta))


@dataclass(frozen=True)
class PlugInEstimates:
    """Plug-in quantities for the model test at one reference index.

    Attributes
    ----------
    tau_hat:
        Tail index estimate (reciprocal Hill).
    scale_hat:
        Plug-in scale ``n**(1/(2*beta+1)) * P_n(X > x_n)`` at the pivot
        ``x_n = n**(1/(tau_hat*(2*beta+1)))``.
    sup_bound:
        Data-driven upper end ``n**(1/theta)`` of the supremum range.
    theta:
        Inflated rate exponent used for ``sup_bound``.
    k_used:
        Tail fraction behind ``tau_hat``.
    beta_ref:
        Reference second-order index the rates were tuned to.
    degenerate:
        True when the scale estimate is zero (pivot beyond the sample
        maximum) or the Hill estimate vanished; consumers must not
        reject the model off a degenerate set of estimates.
    """

    tau_hat: float
    scale_hat: float
    sup_bound: float
    theta: float
    k_used: int
    beta_ref: float
    degenerate: bool = False


def estimate_scale(
    sample: TailSample,
    tau_hat: float,
    beta: float,
    c1: float,
    tail_fn: Callable[[float], float] | None = None,
    k_used: int = 0,
) -> PlugInEstimates:
    """Plug-in scale and supremum bound at reference index ``beta``.

    ``c1`` is the critical constant inflating the rate inside ``theta``;
    pass zero to evaluate the uninflated population identity.  ``tail_fn``
    overrides the empirical tail (used by population-level diagnostics);
    degeneracy is judged on the output: zero scale, or a supremum bound
    that collapses to the range's left edge (huge tau_hat estimates do
    this on nearly constant samples).
    """
    if not math.isfinite(beta) or beta <= 0.0:
        raise ValueError(f"beta must be positive and finite, got {beta}")
    if not math.isfinite(tau_hat) or tau_hat <= 0.0:
        raise ValueError(f"tau_hat must be positive and finite, got {tau_hat}")
    if c1 < 0.0:
        raise ValueError("c1 must be nonnegative")
    n = sample.n
    tail = sample.tail if tail_fn is None else tail_fn
    pivot = float(n) ** (1.0 / (tau_hat * (2.0 * beta + 1.0)))
    scale = float(n) ** (1.0 / (2.0 * beta + 1.0)) * float(tail(pivot))
    theta = (tau_hat + rate(n, beta) * c1) * (2.0 * beta + 1.0)
    sup_bound = float(n) ** (1.0 / theta)
    return PlugInEstimates(
        tau_hat=tau_hat,
        scale_hat=scale,
        sup_bound=sup_bound,
        theta=theta,
        k_used=k_used,
        beta_ref=beta,
        degenerate=(scale <= 0.0 or sup_bound <= 1.0),
    )
