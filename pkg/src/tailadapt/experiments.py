"""Deterministic Monte Carlo studies of interval coverage and size.

Replications are seeded individually from a master seed, so results are a
pure function of the configuration: reruns, reorderings, and different
worker counts all produce bit-identical aggregates.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from io import StringIO

import numpy as np

from .adaptive import (
    build_grid,
    estimate_beta,
    interval_from_tests,
    successive_tests,
)
from .baselines import (
    ConfidenceInterval,
    score_interval,
    undersmoothed_fraction,
    wald_interval,
)
from .distributions import PerturbedPareto, TailDistribution
from .empirics import sample_fraction
from .soptest import TestConfig, test_known, test_plugin

__all__ = [
    "METHODS",
    "ExperimentConfig",
    "MethodSummary",
    "ExperimentResult",
    "replication_seed",
    "run_experiment",
    "PowerStudyConfig",
    "PowerCell",
    "run_power_study",
    "emit_table",
    "power_table",
]

METHODS = ("adaptive", "wald_kstar", "wald_ktilde", "score_kstar", "score_ktilde")

_MAX_FAILURE_SHARE = 0.10


@dataclass(frozen=True)
class ExperimentConfig:
    """One cell of the simulation study.

    ``grid_xi`` None applies the default spacing log(n)/95.  ``deviation``
    None means the per-level calibrated budget.  ``beta_oracle`` bypasses
    the data-driven exponent for the baseline fractions; ``inf`` is mapped
    to the grid top.  ``convention`` picks the adaptive interval's level:
    ``last_reject`` reads the smoothness level off the last rejecting
    test, ``one_past`` steps one level further into the envelope.
    """

    distribution: TailDistribution
    n: int
    replications: int = 100
    alpha: float = 0.05
    methods: tuple[str, ...] = METHODS
    grid_bottom: float = 0.5
    grid_top: float = 10.0
    grid_xi: float | None = None
    deviation: float | None = None
    master_seed: int = 0
    beta_oracle: float | None = None
    convention: str = "last_reject"

    def __post_init__(self) -> None:
        if self.n < 16:
            raise ValueError("experiments need n >= 16")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly in (0, 1)")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; known: {list(METHODS)}")
        if self.beta_oracle is not None and not self.beta_oracle > 0.0:
            raise ValueError("beta_oracle must be positive (inf allowed)")
        if self.convention not in ("one_past", "last_reject"):
            raise ValueError(f"unknown convention {self.convention!r}")

    @property
    def xi(self) -> float:
        return self.grid_xi if self.grid_xi is not None else math.log(self.n) / 95.0


@dataclass(frozen=True)
class MethodSummary:
    method: str
    coverage: float
    mean_size: float
    mean_estimate: float
    mse: float
    used: int
    failures: int


@dataclass(frozen=True)
class ExperimentResult:
    distribution: str
    tau: float
    n: int
    alpha: float
    master_seed: int
    summaries: tuple[MethodSummary, ...]
    replication_seeds: tuple[int, ...]
    wall_time: float


def replication_seed(master_seed: int, index: int) -> int:
    """Independent 64-bit stream seed for one replication."""
    ss = np.random.SeedSequence((int(master_seed) & (2**64 - 1), int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _one_replication(config: ExperimentConfig, grid, seed: int):
    """Intervals of every requested method on one fresh sample.

    Returns method -> ConfidenceInterval or raised-error string; flagged
    intervals count as failures during aggregation, not here.
    """
    sample = config.distribution.sample(config.n, seed)
    out: dict[str, ConfidenceInterval | None] = {}

    baselines_requested = any(m != "adaptive" for m in config.methods)
    needs_grid = "adaptive" in config.methods or (
        baselines_requested and config.beta_oracle is None
    )
    selected = None
    if needs_grid:
        outcomes = successive_tests(sample, grid, config.alpha, config.deviation)
        selected = estimate_beta(outcomes, grid)

    if "adaptive" in config.methods:
        out["adaptive"] = interval_from_tests(
            sample,
            grid,
            config.alpha,
            selected,
            target="inverse_tau",
            convention=config.convention,
        )

    if baselines_requested:
        if config.beta_oracle is None:
            beta_used = selected.beta
        elif math.isinf(config.beta_oracle):
            beta_used = config.grid_top
        else:
            beta_used = config.beta_oracle
        k_star = sample_fraction(config.n, beta_used)
        k_under = undersmoothed_fraction(config.n, beta_used)
        makers = {
            "wald_kstar": lambda: wald_interval(sample, k_star, config.alpha),
            "wald_ktilde": lambda: wald_interval(sample, k_under, config.alpha),
            "score_kstar": lambda: score_interval(sample, k_star, config.alpha),
            "score_ktilde": lambda: score_interval(sample, k_under, config.alpha),
        }
        for name in config.methods:
            if name != "adaptive":
                out[name] = makers[name]()
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Coverage/size/mean/MSE of each method over seeded replications.

    ``workers`` only sets the executor width; results are identical for
    any value.  Replications whose interval is flagged degenerate or
    unbounded are excluded from the aggregates and counted as failures;
    more than 10% failures for any method aborts the experiment.
    """
    started = time.perf_counter()
    grid = build_grid(config.grid_bottom, config.grid_top, config.xi, config.n)
    seeds = tuple(
        replication_seed(config.master_seed, r) for r in range(config.replications)
    )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(
                pool.map(lambda s: _one_replication(config, grid, s), seeds)
            )
    else:
        rows = [_one_replication(config, grid, s) for s in seeds]

    truth = 1.0 / config.distribution.tau
    summaries = []
    for method in config.methods:
        covered = 0
        sizes: list[float] = []
        centers: list[float] = []
        failures = 0
        for row in rows:
            ci = row[method]
            if ci.degenerate or ci.unbounded:
                failures += 1
                continue
            covered += 1 if ci.covers(truth) else 0
            sizes.append(ci.size)
            centers.append(ci.center)
        if failures > _MAX_FAILURE_SHARE * config.replications:
            raise RuntimeError(
                f"method {method!r}: {failures}/{config.replications} replications "
                f"failed (degenerate or unbounded intervals)"
            )
        used = len(sizes)
        c = np.asarray(centers)
        summaries.append(
            MethodSummary(
                method=method,
                coverage=covered / used,
                mean_size=float(np.mean(sizes)),
                mean_estimate=float(np.mean(c)),
                mse=float(np.mean((c - truth) ** 2)),
                used=used,
                failures=failures,
            )
        )

    return ExperimentResult(
        distribution=config.distribution.label,
        tau=config.distribution.tau,
        n=config.n,
        alpha=config.alpha,
        master_seed=config.master_seed,
        summaries=tuple(summaries),
        replication_seeds=seeds,
        wall_time=time.perf_counter() - started,
    )


@dataclass(frozen=True)
class PowerStudyConfig:
    """Sweep layout for rejection-frequency studies."""

    sample_sizes: tuple[int, ...]
    strengths: tuple[float, ...]
    replications: int = 100
    alpha: float = 0.05
    beta0: float = 2.0
    beta1: float = 0.5
    deviation: float = 0.5
    rho_mode: str = "theoretical"
    master_seed: int = 0

    def __post_init__(self) -> None:
        if not self.sample_sizes or not self.strengths:
            raise ValueError("sample_sizes and strengths must be nonempty")
        if self.replications < 1:
            raise ValueError("need at least one replication")


@dataclass(frozen=True)
class PowerCell:
    n: int
    strength: float
    test: str  # "known" or "plugin"
    null_rejection: float
    alt_rejection: float


def run_power_study(
    null_dist: TailDistribution,
    alt_template: PerturbedPareto,
    study: PowerStudyConfig,
) -> list[PowerCell]:
    """Rejection frequencies under the null law and perturbed alternatives.

    The alternative at each cell is the template re-anchored at the cell's
    sample size with the cell's perturbation strength; null and alternative
    replications share seeds, so power differences are driven by the laws
    alone, not by sampling noise.
    """
    cfg = TestConfig(
        alpha=study.alpha,
        beta0=study.beta0,
        beta1=study.beta1,
        deviation=study.deviation,
        rho_mode=study.rho_mode,
    )
    tau = null_dist.tau
    cells: list[PowerCell] = []
    for n in study.sample_sizes:
        seeds = [replication_seed(study.master_seed, r) for r in range(study.replications)]
        null_samples = [null_dist.sample(n, s) for s in seeds]
        null_known = _rejection_rate(test_known, null_samples, cfg, tau)
        null_plugin = _rejection_rate(test_plugin, null_samples, cfg, None)
        for strength in study.strengths:
            alt = dataclasses.replace(alt_template, anchor_n=n, strength=strength)
            alt_samples = [alt.sample(n, s) for s in seeds]
            cells.append(
                PowerCell(
                    n=n,
                    strength=strength,
                    test="known",
                    null_rejection=null_known,
                    alt_rejection=_rejection_rate(test_known, alt_samples, cfg, tau),
                )
            )
            cells.append(
                PowerCell(
                    n=n,
                    strength=strength,
                    test="plugin",
                    null_rejection=null_plugin,
                    alt_rejection=_rejection_rate(test_plugin, alt_samples, cfg, None),
                )
            )
    return cells


def _rejection_rate(test, samples, cfg: TestConfig, tau: float | None) -> float:
    rejections = 0
    for sample in samples:
        if tau is None:
            outcome = test(sample, cfg)
        else:
            outcome = test(sample, tau, 1.0, cfg)
        rejections += 1 if outcome.reject else 0
    return rejections / len(samples)


_CSV_HEADER = "distribution,tau,n,method,coverage,mean_size,mean,mse,seed"


def emit_table(results: list[ExperimentResult], format: str = "csv") -> str:
    """Render results as csv, json, or an aligned text table.

    All results must share one method schema.  CSV columns are
    distribution, tau, n, method, coverage, mean_size, mean, mse, seed;
    floats use shortest round-trip formatting, so parsing the document
    back recovers the exact values.
    """
    if format not in ("csv", "json", "aligned-text"):
        raise ValueError(f"unknown format {format!r}")
    schemas = {tuple(s.method for s in r.summaries) for r in results}
    if len(schemas) > 1:
        raise ValueError(f"mixed method schemas: {sorted(schemas)}")

    if format == "csv":
        lines = [_CSV_HEADER]
        for r in results:
            for s in r.summaries:
                lines.append(
                    f"{r.distribution},{r.tau!r},{r.n},{s.method},{s.coverage!r},"
                    f"{s.mean_size!r},{s.mean_estimate!r},{s.mse!r},{r.master_seed}"
                )
        return "\n".join(lines) + "\n"

    if format == "json":
        payload = []
        for r in results:
            payload.append(
                {
                    "distribution": r.distribution,
                    "tau": r.tau,
                    "n": r.n,
                    "alpha": r.alpha,
                    "master_seed": r.master_seed,
                    "methods": [dataclasses.asdict(s) for s in r.summaries],
                    "replication_seeds": list(r.replication_seeds),
                    "wall_time": r.wall_time,
                }
            )
        return json.dumps(payload, indent=2) + "\n"

    return _aligned_text(results)


def _aligned_text(results: list[ExperimentResult]) -> str:
    if not results:
        return ""
    buf = StringIO()
    by_dist: dict[str, list[ExperimentResult]] = {}
    for r in results:
        by_dist.setdefault(r.distribution, []).append(r)
    for dist, group in by_dist.items():
        group = sorted(group, key=lambda r: r.n)
        methods = [s.method for s in group[0].summaries]
        label_w = max(len(m) for m in methods) + 2
        col_w = 10
        buf.write(f"{dist}  (alpha={group[0].alpha:g})\n")
        header = " " * (label_w + 9) + "".join(
            f"{'n=' + str(r.n):>{col_w}}" for r in group
        )
        buf.write(header + "\n")
        for idx, method in enumerate(methods):
            cover = "".join(
                f"{g.summaries[idx].coverage:>{col_w}.2f}" for g in group
            )
            size = "".join(
                f"{g.summaries[idx].mean_size:>{col_w}.2f}" for g in group
            )
            buf.write(f"{method:<{label_w}}coverage {cover}\n")
            buf.write(f"{'':<{label_w}}size     {size}\n")
        buf.write("\n")
    return buf.getvalue()


def power_table(cells: list[PowerCell]) -> str:
    """Aligned text table of rejection frequencies per (n, strength) cell."""
    lines = [f"{'n':>8} {'strength':>9} {'test':>7} {'null':>7} {'alt':>7}"]
    for c in cells:
        lines.append(
            f"{c.n:>8} {c.strength:>9g} {c.test:>7} "
            f"{c.null_rejection:>7.3f} {c.alt_rejection:>7.3f}"
        )
    return "\n".join(lines) + "\n"
