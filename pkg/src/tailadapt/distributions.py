"""Reference heavy-tailed distributions with seeded inverse-transform samplers.

Each family exposes exact tail/cdf/quantile evaluations and a deterministic
sampler built on a counter-based generator, so identical (spec, n, seed)
triples produce bit-identical samples on any platform or thread count.
Families also carry certified membership parameters for the second-order
Pareto envelope |1 - F(x) - scale*x**-tau| <= deviation * x**(-tau*(1+beta)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .empirics import TailSample

__all__ = [
    "SecondOrderParams",
    "Pareto",
    "Frechet",
    "AbsStudent",
    "DiscretizedPareto",
    "PerturbedPareto",
    "abs_cauchy",
    "solve_rejoin",
    "membership_defect",
    "make_distribution",
]

# Uniform draws live on the grid (k + 1/2) * 2**-52, k < 2**52: strictly
# inside (0, 1) and exactly representable, so no transform ever sees 0 or 1.
_U_BITS = 52


def _tail_uniforms(n: int, seed: int) -> np.ndarray:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1))
    gen = np.random.Generator(np.random.Philox(ss))
    ints = gen.integers(0, 1 << _U_BITS, size=n, dtype=np.uint64)
    return (ints.astype(np.float64) + 0.5) * 2.0**-_U_BITS


@dataclass(frozen=True)
class SecondOrderParams:
    """Parameters of one second-order Pareto envelope.

    ``beta`` may be ``inf`` for an exactly Pareto tail, in which case the
    deviation budget is irrelevant and conventionally zero.
    """

    tau: float
    beta: float
    scale: float
    deviation: float

    def __post_init__(self) -> None:
        if self.tau <= 0.0 or self.scale <= 0.0:
            raise ValueError("tau and scale must be positive")
        if not self.beta > 0.0:
            raise ValueError("beta must be positive (inf allowed)")
        if self.deviation < 0.0:
            raise ValueError("deviation must be nonnegative")


class TailDistribution:
    """Common behavior for the reference families.

    Subclasses implement ``tail`` (exact survival function) and
    ``_invert_tail`` (its generalized inverse, vectorized).
    """

    tau: float
    label: str

    def tail(self, x):
        raise NotImplementedError

    def _invert_tail(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, x):
        return 1.0 - self.tail(x)

    def quantile(self, u):
        """Generalized inverse inf{x : cdf(x) >= u} for u in (0, 1)."""
        arr = np.asarray(u, dtype=np.float64)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise ValueError("quantile argument must lie strictly in (0, 1)")
        flat = self._invert_tail(np.atleast_1d(1.0 - arr).ravel())
        if arr.ndim == 0:
            return float(flat[0])
        return flat.reshape(arr.shape)

    def sample(self, n: int, seed: int) -> TailSample:
        """Draw ``n`` i.i.d. values by inverting the tail at uniform levels."""
        if n < 1:
            raise ValueError("sample size must be at least 1")
        return TailSample(self._invert_tail(_tail_uniforms(n, seed)))

    def second_order(self) -> SecondOrderParams:
        raise NotImplementedError


@dataclass(frozen=True)
class Pareto(TailDistribution):
    """Exact Pareto tail x**-tau on [1, inf)."""

    tau: float

    def __post_init__(self) -> None:
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")

    @property
    def label(self) -> str:
        return f"pareto tau={self.tau:g}"

    def tail(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x < 1.0, 1.0, x ** -self.tau)

    def _invert_tail(self, p):
        return p ** (-1.0 / self.tau)

    def second_order(self) -> SecondOrderParams:
        return SecondOrderParams(self.tau, math.inf, 1.0, 0.0)


@dataclass(frozen=True)
class Frechet(TailDistribution):
    """Frechet law exp(-x**-tau) on (0, inf)."""

    tau: float

    def __post_init__(self) -> None:
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")

    @property
    def label(self) -> str:
        return f"frechet tau={self.tau:g}"

    def tail(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", over="ignore"):
            y = np.where(x > 0.0, x, np.nan) ** -self.tau
        return np.where(x > 0.0, -np.expm1(-y), 1.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", over="ignore"):
            y = np.where(x > 0.0, x, np.nan) ** -self.tau
        return np.where(x > 0.0, np.exp(-y), 0.0)

    def _invert_tail(self, p):
        # tail = -expm1(-x**-tau)  =>  x = (-log1p(-p))**(-1/tau)
        return (-np.log1p(-p)) ** (-1.0 / self.tau)

    def second_order(self) -> SecondOrderParams:
        # |exp(-y) - 1 + y| <= y**2 / 2 for y >= 0, with y = x**-tau
        return SecondOrderParams(self.tau, 1.0, 1.0, 0.5)


@dataclass(frozen=True)
class AbsStudent(TailDistribution):
    """Absolute value of a Student t variable with 1 or 2 degrees of freedom.

    Only these two orders admit elementary quantiles; df=1 is the absolute
    Cauchy law.  Heavier machinery for general df is deliberately out of
    scope.
    """

    df: int

    def __post_init__(self) -> None:
        if self.df not in (1, 2):
            raise ValueError("df must be 1 or 2")

    @property
    def tau(self) -> float:
        return float(self.df)

    @property
    def label(self) -> str:
        return "cauchy" if self.df == 1 else f"student nu={self.df}"

    def tail(self, x):
        x = np.asarray(x, dtype=np.float64)
        pos = np.maximum(x, 0.0)
        if self.df == 1:
            with np.errstate(divide="ignore"):
                t = (2.0 / math.pi) * np.arctan2(1.0, pos)
            return np.where(x > 0.0, t, 1.0)
        r = np.sqrt(pos * pos + 2.0)
        return np.where(x > 0.0, 2.0 / (r * (r + pos)), 1.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        pos = np.maximum(x, 0.0)
        if self.df == 1:
            c = (2.0 / math.pi) * np.arctan(pos)
        else:
            c = pos / np.sqrt(pos * pos + 2.0)
        return np.where(x > 0.0, c, 0.0)

    def _invert_tail(self, p):
        if self.df == 1:
            return 1.0 / np.tan(0.5 * math.pi * p)
        u = 1.0 - p
        return u * np.sqrt(2.0 / (p * (2.0 - p)))

    def second_order(self) -> SecondOrderParams:
        if self.df == 1:
            # arctan series: |arctan(1/x) - 1/x| <= x**-3 / 3 for x >= 1,
            # and the cubic penalty dominates the defect below 1.
            return SecondOrderParams(1.0, 2.0, 2.0 / math.pi, 2.0 / (3.0 * math.pi))
        # (1+2u)**-0.5 expansion: tail = x**-2 - 1.5x**-4 + O(x**-6)
        return SecondOrderParams(2.0, 1.0, 1.0, 1.5)


def abs_cauchy() -> AbsStudent:
    """The absolute Cauchy distribution (Student t with df=1)."""
    return AbsStudent(df=1)


@dataclass(frozen=True)
class DiscretizedPareto(TailDistribution):
    """Integer-valued law with cdf 1 - floor(x)**-tau, support {2, 3, ...}."""

    tau: float

    def __post_init__(self) -> None:
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")

    @property
    def label(self) -> str:
        return f"disc_pareto tau={self.tau:g}"

    def tail(self, x):
        x = np.asarray(x, dtype=np.float64)
        # clamp before flooring so x < 1 never raises 0**-tau
        return np.where(x < 1.0, 1.0, np.floor(np.maximum(x, 1.0)) ** -self.tau)

    def _invert_tail(self, p):
        # smallest integer m with m**-tau <= p
        return np.maximum(np.ceil(p ** (-1.0 / self.tau)), 2.0)

    def second_order(self) -> SecondOrderParams:
        # floor(x)**-t - x**-t <= t*(x-1)**-t-1 <= t*2**(t+1) * x**-(t+1)
        # on x >= 2; certified numerically on grids by the test suite.
        t = self.tau
        return SecondOrderParams(t, 1.0 / t, 1.0, t * 2.0 ** (t + 1.0))


def solve_rejoin(
    tau: float,
    beta1: float,
    deviation: float,
    flatten_from: float,
    tilt: float,
) -> float:
    """Radius where a tilted Pareto branch meets the shifted envelope.

    Solves ``(1 + u/flatten_from)**tilt - 1 = deviation*(flatten_from+u)**(-tau*beta1)``
    for u > 0 by bisection and returns ``flatten_from + u``.  The root is
    bracketed by ``u in (0, flatten_from*(exp(deviation/strength) - 1)]``
    where ``strength = tilt * flatten_from**(tau*beta1)``; the residual at
    the returned radius is below 1e-10.
    """
    if flatten_from <= 1.0:
        raise ValueError("flatten radius must exceed 1")
    if not 0.0 < tilt <= tau / 4.0:
        raise ValueError(f"tilt must lie in (0, tau/4], got {tilt}")
    if deviation <= 0.0:
        raise ValueError("deviation must be positive")
    strength = tilt * flatten_from ** (tau * beta1)

    def gap(u: float) -> float:
        lhs = math.expm1(tilt * math.log1p(u / flatten_from))
        return lhs - deviation * (flatten_from + u) ** (-tau * beta1)

    # the analytic bracket cap exp(deviation/strength) can overflow for
    # tiny tilts; 700 keeps it finite and still past the root
    lo, hi = 0.0, flatten_from * math.expm1(min(deviation / strength, 700.0))
    if not gap(hi) >= 0.0:
        raise ArithmeticError(
            f"rejoin bracket failed: gap({hi}) = {gap(hi)} < 0 "
            f"(tau={tau}, beta1={beta1}, deviation={deviation}, tilt={tilt})"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    root = flatten_from + hi
    if abs(gap(hi)) > 1e-10:
        raise ArithmeticError(f"rejoin residual {gap(hi)} exceeds 1e-10")
    return root


@dataclass(frozen=True)
class PerturbedPareto(TailDistribution):
    """Pareto tail flattened on a window so it escapes a tighter envelope.

    The tail equals x**-tau up to ``flatten_from``, follows the tilted
    branch ``flatten_from**-tilt * x**(tilt-tau)`` until it meets
    ``x**-tau + deviation*x**(-tau*(1+beta1))`` at ``rejoin_at``, and runs
    along that shifted envelope afterwards.  ``anchor_n`` fixes
    ``flatten_from = anchor_n**(1/(tau*(2*beta1+1)))``; the tilt is
    ``strength`` times the rate ``anchor_n**(-beta1/(2*beta1+1))``.
    ``strength=0`` collapses the construction to the exact Pareto law.
    """

    tau: float
    beta1: float
    deviation: float
    anchor_n: int
    strength: float = 1.0
    flatten_from: float = field(init=False)
    tilt: float = field(init=False)
    rejoin_at: float = field(init=False)

    def __post_init__(self) -> None:
        if self.tau <= 0.0 or self.beta1 <= 0.0:
            raise ValueError("tau and beta1 must be positive")
        if self.anchor_n < 2:
            raise ValueError("anchor sample size must be at least 2")
        if self.strength < 0.0:
            raise ValueError("strength must be nonnegative")
        two_b = 2.0 * self.beta1 + 1.0
        dev_cap = math.sqrt(two_b) / ((self.beta1 + 1.0) * math.sqrt(3.0) * self.tau)
        if not 0.0 < self.deviation <= dev_cap:
            raise ValueError(
                f"deviation must lie in (0, {dev_cap:.6g}] for tau={self.tau}, "
                f"beta1={self.beta1}"
            )
        base = float(self.anchor_n) ** (1.0 / (self.tau * two_b))
        tilt = self.strength * base ** (-self.tau * self.beta1)
        tilt_cap = min(
            math.sqrt(3.0) * self.strength * self.tau / (2.0 * math.sqrt(two_b)),
            self.tau / 4.0,
        )
        if self.strength > 0.0 and tilt > tilt_cap:
            raise ValueError(
                f"tilt {tilt:.6g} exceeds its admissible cap {tilt_cap:.6g}; "
                f"reduce strength or enlarge anchor_n"
            )
        object.__setattr__(self, "flatten_from", base)
        object.__setattr__(self, "tilt", tilt)
        if self.strength == 0.0:
            object.__setattr__(self, "rejoin_at", math.inf)
        else:
            object.__setattr__(
                self,
                "rejoin_at",
                solve_rejoin(self.tau, self.beta1, self.deviation, base, tilt),
            )

    @property
    def label(self) -> str:
        return (
            f"perturbed_pareto tau={self.tau:g} beta1={self.beta1:g} "
            f"deviation={self.deviation:g} anchor_n={self.anchor_n} "
            f"strength={self.strength:g}"
        )

    def tail(self, x):
        x = np.asarray(x, dtype=np.float64)
        xs = np.maximum(x, 1.0)
        base = xs ** -self.tau
        out = np.where(
            xs <= self.flatten_from,
            base,
            self.flatten_from ** -self.tilt * xs ** (self.tilt - self.tau),
        )
        if math.isfinite(self.rejoin_at):
            shifted = base + self.deviation * xs ** (-self.tau * (1.0 + self.beta1))
            out = np.where(xs >= self.rejoin_at, shifted, out)
        return np.where(x < 1.0, 1.0, out)

    def _invert_tail(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=np.float64))
        out = p ** (-1.0 / self.tau)
        knee = self.flatten_from ** -self.tau
        mid = p < knee
        if np.any(mid):
            out[mid] = (self.flatten_from ** -self.tilt / p[mid]) ** (
                1.0 / (self.tau - self.tilt)
            )
        if math.isfinite(self.rejoin_at):
            far = p < float(self.tail(self.rejoin_at))
            if np.any(far):
                out[far] = self._invert_far_tail(p[far])
        return out

    def _invert_far_tail(self, p: np.ndarray) -> np.ndarray:
        # beyond the rejoin radius the tail has no elementary inverse;
        # bisect in log-x between rejoin_at and a guaranteed overshoot
        lo = np.full_like(p, math.log(self.rejoin_at))
        hi = (np.log1p(self.deviation) - np.log(p)) / self.tau
        for _ in range(90):
            mid = 0.5 * (lo + hi)
            too_far = self.tail(np.exp(mid)) < p
            hi = np.where(too_far, mid, hi)
            lo = np.where(too_far, lo, mid)
        return np.exp(0.5 * (lo + hi))

    def second_order(self) -> SecondOrderParams:
        return SecondOrderParams(self.tau, self.beta1, 1.0, self.deviation)

    def separation_value(self) -> float:
        """Envelope defect at the rejoin radius, deviation*rejoin**(-tau*beta1).

        This is the distance by which the law escapes the tighter envelope
        with the same tau and scale but zero deviation budget; infinite
        ``rejoin_at`` (strength 0) gives 0.
        """
        if not math.isfinite(self.rejoin_at):
            return 0.0
        return self.deviation * self.rejoin_at ** (-self.tau * self.beta1)


def membership_defect(
    dist: TailDistribution,
    params: SecondOrderParams,
    x_grid,
) -> float:
    """Largest envelope violation of ``dist`` over a certification grid.

    Returns ``max |tail(x) - scale*x**-tau| - deviation*x**(-tau*(1+beta))``
    over the grid; a nonpositive value certifies membership there.  Grid
    points must satisfy cdf(x) > 0.
    """
    x = np.asarray(x_grid, dtype=np.float64)
    if x.size == 0:
        raise ValueError("certification grid must be nonempty")
    if np.any(np.asarray(dist.cdf(x), dtype=np.float64) <= 0.0):
        raise ValueError("grid points must have cdf in (0, 1]")
    tails = np.asarray(dist.tail(x), dtype=np.float64)
    defect = np.abs(tails - params.scale * x ** -params.tau)
    if math.isfinite(params.beta) and params.deviation > 0.0:
        defect = defect - params.deviation * x ** (-params.tau * (1.0 + params.beta))
    return float(np.max(defect))


_FAMILIES = {
    "pareto": Pareto,
    "frechet": Frechet,
    "student": AbsStudent,
    "cauchy": lambda: AbsStudent(df=1),
    "disc_pareto": DiscretizedPareto,
    "perturbed_pareto": PerturbedPareto,
}


def make_distribution(family: str, **params) -> TailDistribution:
    """Instantiate a family by registry name; raises on unknown names."""
    key = family.strip().lower()
    try:
        ctor = _FAMILIES[key]
    except KeyError:
        known = ", ".join(sorted(_FAMILIES))
        raise ValueError(f"unknown distribution {family!r}; known: {known}") from None
    return ctor(**params)
