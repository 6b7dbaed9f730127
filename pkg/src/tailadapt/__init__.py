"""Adaptive confidence intervals for heavy tail indices.

The package tests how closely a sample's upper tail follows a Pareto law
x**-tau inside a second-order envelope, estimates the largest envelope
exponent compatible with the data, and converts that exponent into a
rate-adaptive confidence interval for tau (or 1/tau).  Classical Wald and
score intervals around Hill's estimate are included as baselines, plus a
deterministic Monte Carlo harness and a command-line front end.
"""

from .adaptive import (
    BetaEstimate,
    GridSpec,
    adaptive_ci,
    build_grid,
    calibrate_deviation,
    estimate_beta,
    successive_tests,
)
from .baselines import (
    ConfidenceInterval,
    normal_quantile,
    score_interval,
    undersmoothed_fraction,
    wald_interval,
)
from .distributions import (
    AbsStudent,
    DiscretizedPareto,
    Frechet,
    Pareto,
    PerturbedPareto,
    SecondOrderParams,
    abs_cauchy,
    make_distribution,
    membership_defect,
    solve_rejoin,
)
from .empirics import (
    PlugInEstimates,
    TailSample,
    estimate_scale,
    hill_inverse_index,
    rate,
    sample_fraction,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    PowerStudyConfig,
    emit_table,
    run_experiment,
    run_power_study,
)
from .soptest import (
    TestConfig,
    TestOutcome,
    rejection_threshold,
    sup_defect,
    test_known,
    test_plugin,
    test_windowed,
    two_point_ci,
)

__version__ = "0.1.0"
