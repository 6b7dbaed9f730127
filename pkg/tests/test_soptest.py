"""Envelope defect suprema, separation thresholds, and the model tests."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_sup_oracle
from tailadapt.baselines import normal_quantile
from tailadapt.distributions import DiscretizedPareto, Pareto
from tailadapt.empirics import (
    TailSample,
    estimate_scale,
    hill_inverse_index,
    rate,
    sample_fraction,
)
from tailadapt.experiments import replication_seed
# aliased so pytest does not collect the product's test_* callables
from tailadapt.soptest import TestConfig as Config
from tailadapt.soptest import TestOutcome as Outcome
from tailadapt.soptest import (
    rejection_threshold,
    sup_defect,
    two_point_ci,
)
from tailadapt.soptest import test_known as known_test
from tailadapt.soptest import test_plugin as plugin_test
from tailadapt.soptest import test_windowed as windowed_test


class TestSupDefect:
    def test_two_piece_step_by_hand(self):
        # tail: 1 on [1,2), 0.5 on [2,4), 0 from 4 on; tau=1, scale=1,
        # no penalty.  sup = 1, approached at x -> 2- and attained again
        # at x = 4; ties resolve to the smaller location.
        ts = TailSample(np.array([2.0, 4.0]))
        sup, arg = sup_defect(ts.tail, 1.0, 1.0, 0.0, math.inf, 10.0, ts.distinct())
        assert sup == 1.0
        assert arg == 2.0

    def test_population_pareto_closed_form(self):
        tau, dev, beta0, x_max = 1.3, 0.7, 2.0, 50.0
        sup, arg = sup_defect(Pareto(tau).tail, tau, 1.0, dev, beta0, x_max)
        assert sup == pytest.approx(-dev * x_max ** (-tau * beta0), abs=1e-15)
        assert arg == pytest.approx(x_max, rel=1e-12)

    def test_penalty_dropped_when_beta0_infinite(self):
        sup, arg = sup_defect(Pareto(1.0).tail, 1.0, 1.0, 5.0, math.inf, 100.0)
        unpenalized = sup_defect(Pareto(1.0).tail, 1.0, 1.0, 0.0, 2.0, 100.0)
        assert (sup, arg) == unpenalized
        assert abs(sup) <= 1e-12

    def test_zero_deviation_equals_infinite_beta0(self):
        ts = TailSample(np.geomspace(1.0, 20.0, 30))
        a = sup_defect(ts.tail, 1.0, 1.0, 0.0, 2.0, 15.0, ts.distinct())
        b = sup_defect(ts.tail, 1.0, 1.0, 0.7, math.inf, 15.0, ts.distinct())
        assert a == b

    def test_nonincreasing_in_deviation(self):
        ts = TailSample(np.geomspace(1.0, 30.0, 40))
        sups = [
            sup_defect(ts.tail, 1.2, 0.9, dev, 1.5, 25.0, ts.distinct())[0]
            for dev in (0.0, 0.3, 0.6, 1.2)
        ]
        assert all(a >= b for a, b in zip(sups, sups[1:]))

    def test_nondecreasing_in_x_max(self):
        ts = TailSample(np.geomspace(1.0, 30.0, 40))
        sups = [
            sup_defect(ts.tail, 1.2, 0.9, 0.4, 1.5, xm, ts.distinct())[0]
            for xm in (5.0, 10.0, 20.0, 40.0)
        ]
        assert all(a <= b for a, b in zip(sups, sups[1:]))

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(x_max=1.0),
            dict(x_max=0.5),
            dict(x_max=5.0, x_min=5.0),
            dict(x_max=5.0, tau=0.0),
            dict(x_max=5.0, scale=-1.0),
            dict(x_max=5.0, deviation=-0.1),
        ],
    )
    def test_domain_errors(self, kwargs):
        args = dict(tau=1.0, scale=1.0, deviation=0.5, beta0=2.0)
        args.update(kwargs)
        with pytest.raises(ValueError):
            sup_defect(Pareto(1.0).tail, **args)

    @settings(max_examples=30)
    @given(
        values=st.lists(
            st.floats(min_value=0.5, max_value=30.0, allow_nan=False),
            min_size=3,
            max_size=25,
        ),
        tau=st.floats(min_value=0.3, max_value=3.0),
        scale=st.floats(min_value=0.3, max_value=2.0),
        deviation=st.floats(min_value=0.0, max_value=1.0),
        beta0=st.one_of(
            st.just(math.inf), st.floats(min_value=0.4, max_value=4.0)
        ),
        x_max=st.floats(min_value=1.5, max_value=60.0),
    )
    def test_matches_dense_oracle(self, values, tau, scale, deviation, beta0, x_max):
        ts = TailSample(np.array(values))
        sup, _ = sup_defect(
            ts.tail, tau, scale, deviation, beta0, x_max, ts.distinct()
        )
        oracle = dense_sup_oracle(
            ts.tail, tau, scale, deviation, beta0, x_max, ts.distinct(),
            points=400_000,
        )
        # the oracle only ever undershoots the true supremum: every jump
        # candidate is on its grid exactly, interior maxima are zoomed
        assert sup >= oracle - 1e-9
        assert sup <= oracle + 1e-6


class TestThreshold:
    def test_practical_value(self):
        cfg = Config(rho_mode="practical")
        assert rejection_threshold(10_000, 1.0, cfg) == pytest.approx(
            0.10305844111408119, abs=1e-15
        )

    def test_practical_needs_loglog(self):
        cfg = Config(rho_mode="practical")
        assert rejection_threshold(16, 1.0, cfg) > 0.0
        with pytest.raises(ValueError):
            rejection_threshold(15, 1.0, cfg)

    def test_theoretical_spot_value(self):
        cfg = Config(alpha=0.05, deviation=1.0)
        want = 2.0 * (math.log(100) + math.log(20.0)) * rate(100, 1.0)
        assert rejection_threshold(100, 1.0, cfg) == pytest.approx(want, abs=1e-15)

    def test_theoretical_dominates_deviation_floor(self):
        for dev in (0.5, 5.0, 50.0):
            cfg = Config(deviation=dev)
            thr = rejection_threshold(1000, 1.0, cfg)
            assert thr >= 2.0 * dev * rate(1000, 1.0) - 1e-15

    def test_scales_with_coefficients(self):
        base = Config(entropy_coeff=1.0, level_coeff=1.0)
        doubled = Config(entropy_coeff=2.0, level_coeff=2.0)
        assert rejection_threshold(10_000, 1.0, doubled) == pytest.approx(
            2.0 * rejection_threshold(10_000, 1.0, base), rel=1e-12
        )


class TestConfigValidation:
    def test_default_critical_constant(self):
        cfg = Config(alpha=0.05)
        assert cfg.c1(2.0) == pytest.approx(
            2.0 * normal_quantile(0.975), abs=1e-15
        )

    def test_override_ignores_tau(self):
        cfg = Config(critical_constant=1.7)
        assert cfg.c1(0.3) == 1.7
        assert cfg.c1(9.0) == 1.7

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(alpha=0.0),
            dict(alpha=1.0),
            dict(beta0=1.0, beta1=1.0),
            dict(beta0=0.5, beta1=1.0),
            dict(beta1=0.0),
            dict(deviation=0.0),
            dict(rho_mode="bogus"),
            dict(critical_constant=-1.0),
        ],
    )
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ValueError):
            Config(**kwargs)

    def test_outcome_flag_must_match_rule(self):
        with pytest.raises(ValueError):
            Outcome(statistic=1.0, threshold=1.0, reject=False, argmax_x=2.0)
        with pytest.raises(ValueError):
            Outcome(statistic=0.1, threshold=1.0, reject=True, argmax_x=2.0)


class TestKnown:
    def test_plumbing_identity(self):
        sample = Pareto(1.0).sample(500, seed=8)
        cfg = Config(beta0=2.0, beta1=0.5, deviation=0.8)
        out = known_test(sample, 1.0, 1.0, cfg)
        x_max = 500.0 ** (1.0 / (1.0 * 2.0))
        sup, arg = sup_defect(
            sample.tail, 1.0, 1.0, 0.8, 2.0, x_max, sample.distinct()
        )
        thr = rejection_threshold(500, 0.5, cfg)
        assert out.statistic == sup
        assert out.argmax_x == arg
        assert out.threshold == thr
        assert out.reject == (sup >= 0.5 * thr)

    def test_domain_errors(self):
        sample = Pareto(1.0).sample(100, seed=1)
        with pytest.raises(ValueError):
            known_test(sample, 0.0, 1.0, Config())
        with pytest.raises(ValueError):
            known_test(sample, 1.0, 0.0, Config())

    def test_deterministic(self):
        sample = Pareto(1.0).sample(400, seed=2)
        cfg = Config(beta0=2.0, beta1=0.5)
        assert known_test(sample, 1.0, 1.0, cfg) == known_test(
            sample, 1.0, 1.0, cfg
        )


class TestPlugin:
    def test_estimates_plumbing(self):
        sample = Pareto(1.0).sample(2000, seed=4)
        cfg = Config()
        out = plugin_test(sample, cfg)
        k = sample_fraction(2000, cfg.beta1)
        assert out.estimates is not None
        assert out.estimates.k_used == k
        inv = hill_inverse_index(sample, k)
        assert out.estimates.tau_hat == pytest.approx(1.0 / inv, abs=1e-15)

    def test_sup_bound_matches_known_domain(self):
        # with zero budget the plug-in bound is the known-test bound at tau_hat
        sample = Pareto(1.0).sample(2000, seed=4)
        cfg = Config()
        out = plugin_test(sample, cfg)
        tau_hat = out.estimates.tau_hat
        zero = estimate_scale(sample, tau_hat, cfg.beta1, 0.0)
        want = 2000.0 ** (1.0 / (tau_hat * (2.0 * cfg.beta1 + 1.0)))
        assert zero.sup_bound == pytest.approx(want, rel=1e-12)

    def test_all_equal_sample_degenerates(self):
        out = plugin_test(TailSample(np.full(100, 2.0)), Config())
        assert out.degenerate
        assert out.statistic == -math.inf
        assert not out.reject

    def test_level_on_pareto(self):
        # a true Pareto tail sits inside every envelope: no rejections
        # across 200 deterministic replications
        cfg = Config()
        rejections = 0
        for r in range(200):
            sample = Pareto(2.0).sample(10_000, replication_seed(7, r))
            rejections += plugin_test(sample, cfg).reject
        assert rejections == 0

    def test_deterministic(self):
        sample = Pareto(2.0).sample(1500, seed=9)
        assert plugin_test(sample, Config()) == plugin_test(
            sample, Config()
        )


class TestWindowed:
    def test_plumbing_identity(self):
        sample = Pareto(1.0).sample(800, seed=3)
        cfg = Config(beta0=2.0, beta1=0.5, deviation=0.8)
        out = windowed_test(sample, 1.0, 1.0, cfg)
        lo = 800.0 ** (1.0 / 5.0)
        hi = 800.0 ** (1.0 / 2.0)
        sup, arg = sup_defect(
            sample.tail, 1.0, 1.0, 0.8, 2.0, hi, sample.distinct(), x_min=lo
        )
        assert out.statistic == sup
        assert out.argmax_x == arg

    def test_never_exceeds_full_range_test(self):
        cfg = Config(beta0=2.0, beta1=0.5, deviation=0.8)
        for seed in (1, 2, 3):
            sample = Pareto(1.0).sample(600, seed=seed)
            full = known_test(sample, 1.0, 1.0, cfg)
            windowed = windowed_test(sample, 1.0, 1.0, cfg)
            assert windowed.statistic <= full.statistic + 1e-15

    def test_needs_finite_beta0(self):
        sample = Pareto(1.0).sample(100, seed=1)
        with pytest.raises(ValueError):
            windowed_test(sample, 1.0, 1.0, Config(beta0=math.inf))


class TestTwoPoint:
    def test_coverage_on_pareto(self):
        cfg = Config()
        covered = 0
        for r in range(100):
            sample = Pareto(1.0).sample(10_000, replication_seed(3, r))
            ci = two_point_ci(sample, cfg)
            covered += ci.covers(1.0)
        assert covered >= 90

    def test_branch_formula(self):
        cfg = Config(beta0=2.0, beta1=0.5, deviation=0.8)
        for dist, seed in [(Pareto(1.0), 21), (DiscretizedPareto(2.0), 22)]:
            sample = dist.sample(5000, seed=seed)
            outcome = plugin_test(sample, cfg)
            ci = two_point_ci(sample, cfg)
            beta_sel = cfg.beta1 if outcome.reject else cfg.beta0
            inv = hill_inverse_index(sample, sample_fraction(5000, beta_sel))
            center = 1.0 / inv
            assert ci.center == pytest.approx(center, abs=1e-15)
            assert ci.half_width == pytest.approx(
                cfg.c1(center) * rate(5000, beta_sel), abs=1e-15
            )
            assert ci.target == "tau"

    def test_symmetric(self):
        sample = Pareto(1.0).sample(3000, seed=12)
        ci = two_point_ci(sample, Config())
        assert ci.upper - ci.center == pytest.approx(
            ci.center - ci.lower, abs=1e-12
        )

    def test_degenerate_sample(self):
        ci = two_point_ci(TailSample(np.full(100, 3.0)), Config())
        assert ci.degenerate
        assert math.isnan(ci.center)
