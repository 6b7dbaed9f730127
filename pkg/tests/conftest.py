"""Shared fixtures: a brute-force supremum oracle and hypothesis settings."""

from __future__ import annotations

import math

import numpy as np
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def dense_sup_oracle(
    tail_fn,
    tau: float,
    scale: float,
    deviation: float,
    beta0: float,
    x_max: float,
    jumps=None,
    x_min: float = 1.0,
    points: int = 1_000_000,
) -> float:
    """Supremum of |x**tau * tail(x) - scale| - deviation*x**(-tau*beta0)
    over [x_min, x_max] by dense-grid maximization.

    Deliberately independent of the interval-decomposition engine: a
    geometric grid of ``points`` plus the jump locations and the floats
    immediately below them, then two local zoom passes around the best
    grid point so smooth interior maxima are resolved past 1e-9.
    """
    penalized = deviation > 0.0 and math.isfinite(beta0)

    def defect(xs: np.ndarray) -> np.ndarray:
        tails = np.asarray(tail_fn(xs), dtype=np.float64)
        vals = np.abs(tails * xs**tau - scale)
        if penalized:
            vals = vals - deviation * xs ** (-tau * beta0)
        return vals

    xs = np.geomspace(x_min, x_max, points)
    if jumps is not None and len(jumps) > 0:
        pts = np.asarray(jumps, dtype=np.float64)
        pts = pts[(pts > x_min) & (pts <= x_max)]
        below = np.nextafter(pts, 0.0)
        xs = np.unique(np.concatenate([xs, pts, below[below >= x_min]]))
    vals = defect(xs)
    best_i = int(np.argmax(vals))
    best = float(vals[best_i])
    lo = float(xs[max(best_i - 1, 0)])
    hi = float(xs[min(best_i + 1, xs.size - 1)])
    for _ in range(2):
        if not hi > lo:
            break
        fine = np.geomspace(lo, hi, 4001)
        fvals = defect(fine)
        j = int(np.argmax(fvals))
        best = max(best, float(fvals[j]))
        lo = float(fine[max(j - 1, 0)])
        hi = float(fine[min(j + 1, fine.size - 1)])
    return best
