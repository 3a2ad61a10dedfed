"""ACF estimators, empirical distributions, power-law fitting."""

import numpy as np
import pytest

from lmfsim import (
    DiscretePareto,
    EmpiricalDistribution,
    Exponential,
    Population,
    Tabulated,
    TraderSpec,
    acf_estimate,
    aggregate_metaorder_distribution,
    aggregated_weights,
    average_curves,
    exact_acf_trader,
    fit_acf_powerlaw,
    fit_distribution_tail,
    fit_powerlaw,
    log_bin_curve,
    log_bin_density,
    simulate,
)
from lmfsim.stats import acf_direct
from lmfsim.errors import (
    DomainError,
    EmptyLog,
    InsufficientPoints,
    SeriesTooShort,
)


def tab(d):
    items = sorted(d.items())
    return Tabulated(support=[k for k, _ in items], probs=[v for _, v in items])


class TestAcfEstimate:
    def test_constant_series(self):
        curve = acf_estimate(np.ones(5000, dtype=np.int8), max_lag=20)
        assert np.allclose(curve.values, 1.0, atol=1e-12)

    def test_alternating_series(self):
        signs = np.tile([1, -1], 2500).astype(np.int8)
        curve = acf_estimate(signs, max_lag=10)
        want = np.where(curve.lags % 2 == 0, 1.0, -1.0)
        assert np.allclose(curve.values, want, atol=1e-10)

    def test_iid_series_is_flat(self):
        rng = np.random.default_rng(42)
        signs = rng.choice([-1, 1], size=1_000_000).astype(np.int8)
        curve = acf_estimate(signs, max_lag=100)
        assert np.max(np.abs(curve.values)) < 4e-3  # 4 / sqrt(T)

    def test_matches_direct_sum(self):
        rng = np.random.default_rng(7)
        signs = rng.choice([-1, 1], size=4000).astype(np.int8)
        curve = acf_estimate(signs, max_lag=50)
        direct = acf_direct(signs, curve.lags)
        assert np.max(np.abs(curve.values - direct)) < 1e-10

    def test_stderr_and_meta(self):
        curve = acf_estimate(np.ones(2000, dtype=np.int8), max_lag=10)
        assert curve.stderr is not None
        assert curve.stderr[0] == pytest.approx(1 / np.sqrt(1999))
        assert curve.meta["steps"] == 2000
        assert curve.meta["replicas"] == 1

    def test_include_zero(self):
        curve = acf_estimate(np.ones(500, dtype=np.int8), max_lag=5,
                             include_zero=True)
        assert curve.lags[0] == 0
        assert curve.values[0] == 1.0

    def test_series_too_short(self):
        with pytest.raises(SeriesTooShort):
            acf_estimate(np.ones(100, dtype=np.int8), max_lag=10)
        with pytest.raises(DomainError):
            acf_estimate(np.ones(100, dtype=np.int8), max_lag=0)

    def test_accepts_simulation_output(self):
        pop = Population([TraderSpec(1.0, tab({1: 0.5, 2: 0.5}))])
        out = simulate(pop, 5000, seed=5)
        wrapped = acf_estimate(out, max_lag=10)
        raw = acf_estimate(out.signs, max_lag=10)
        assert np.array_equal(wrapped.values, raw.values)
        silent = simulate(pop, 5000, seed=5, keep_signs=False)
        with pytest.raises(DomainError):
            acf_estimate(silent, max_lag=10)


class TestAverageCurves:
    def test_hand_average(self):
        a = acf_estimate(np.ones(1000, dtype=np.int8), max_lag=5)
        b = acf_estimate(np.tile([1, -1], 500).astype(np.int8), max_lag=5)
        avg = average_curves([a, b])
        assert np.allclose(avg.values, (a.values + b.values) / 2, atol=1e-14)
        assert avg.meta["replicas"] == 2
        assert avg.meta["steps"] == 2000
        # averaging k replicas shrinks the stderr by sqrt(k)
        assert np.allclose(avg.stderr, a.stderr / np.sqrt(2), rtol=1e-12)

    def test_grid_mismatch(self):
        a = acf_estimate(np.ones(1000, dtype=np.int8), max_lag=5)
        b = acf_estimate(np.ones(1000, dtype=np.int8), max_lag=6)
        with pytest.raises(DomainError):
            average_curves([a, b])
        with pytest.raises(DomainError):
            average_curves([])


class TestEmpiricalDistribution:
    def test_from_samples_counts(self):
        dist = EmpiricalDistribution.from_samples([3, 1, 3, 3, 7, 1])
        assert dist.support.tolist() == [1, 3, 7]
        assert dist.counts.tolist() == [2, 3, 1]
        assert dist.total == 6
        assert np.allclose(dist.pdf(), [2 / 6, 3 / 6, 1 / 6])
        assert np.allclose(dist.ccdf(), [1.0, 4 / 6, 1 / 6])

    def test_ccdf_at_between_support_points(self):
        dist = EmpiricalDistribution.from_samples([1, 1, 5, 9])
        assert dist.ccdf_at(1) == 1.0
        assert dist.ccdf_at(2) == 0.5
        assert dist.ccdf_at(5) == 0.5
        assert dist.ccdf_at(6) == 0.25
        assert dist.ccdf_at(10) == 0.0

    def test_merge_equals_concatenation(self):
        rng = np.random.default_rng(3)
        xs = rng.integers(1, 40, size=300)
        ys = rng.integers(1, 40, size=200)
        merged = EmpiricalDistribution.merge([
            EmpiricalDistribution.from_samples(xs),
            EmpiricalDistribution.from_samples(ys),
        ])
        direct = EmpiricalDistribution.from_samples(np.concatenate([xs, ys]))
        assert np.array_equal(merged.support, direct.support)
        assert np.array_equal(merged.counts, direct.counts)

    def test_validation(self):
        with pytest.raises(DomainError):
            EmpiricalDistribution(support=np.array([2, 1]), counts=np.array([1, 1]))
        with pytest.raises(DomainError):
            EmpiricalDistribution(support=np.array([1, 2]), counts=np.array([0, 0]))
        with pytest.raises(EmptyLog):
            EmpiricalDistribution.from_samples([])
        with pytest.raises(EmptyLog):
            EmpiricalDistribution.merge([])


class TestAggregation:
    def test_weights_rate_formula(self):
        # rates lam_i / mean_i: (0.5/2, 0.5/4) -> (2/3, 1/3)
        pop = Population([
            TraderSpec(0.5, tab({2: 1.0})),
            TraderSpec(0.5, tab({4: 1.0})),
        ])
        assert np.allclose(aggregated_weights(pop), [2 / 3, 1 / 3])

    def test_weights_subset_and_errors(self):
        pop = Population([
            TraderSpec(0.2, tab({2: 1.0})),
            TraderSpec(0.3, tab({3: 1.0})),
            TraderSpec(0.5, tab({5: 1.0})),
        ])
        sub = aggregated_weights(pop, traders=[0, 2])
        assert sub.sum() == pytest.approx(1.0)
        assert sub[0] == pytest.approx((0.2 / 2) / (0.2 / 2 + 0.5 / 5))
        with pytest.raises(DomainError):
            aggregated_weights(pop, traders=[])

    def test_pooled_distribution_matches_weights(self):
        pop = Population([
            TraderSpec(0.5, tab({2: 1.0})),
            TraderSpec(0.5, tab({4: 1.0})),
        ])
        out = simulate(pop, 200_000, seed=99)
        dist = aggregate_metaorder_distribution(out)
        # each trader may log one censored first completion, nothing else odd
        stray = dist.counts[~np.isin(dist.support, [2, 4])].sum()
        assert stray <= 2
        # pooled mixture of point masses at the rate weights
        p2 = dist.counts[dist.support == 2].sum() / dist.total
        assert p2 == pytest.approx(2 / 3, abs=0.01)

    def test_subset_selects_one_trader(self):
        pop = Population([
            TraderSpec(0.5, tab({2: 1.0})),
            TraderSpec(0.5, tab({4: 1.0})),
        ])
        out = simulate(pop, 50_000, seed=100)
        only = aggregate_metaorder_distribution(out, traders=[1])
        # everything except the censored first completion has length 4
        assert only.counts[only.support != 4].sum() <= 1
        assert only.counts[only.support == 4].sum() >= only.total - 1

    def test_empty_log_raises(self):
        pop = Population([TraderSpec(1.0, tab({2: 1.0}))])
        out = simulate(pop, 2000, seed=1, collect_lengths=False)
        with pytest.raises(EmptyLog):
            aggregate_metaorder_distribution(out)


class TestFitPowerlaw:
    def test_exact_recovery(self):
        x = np.geomspace(1, 1e4, 60)
        y = 3.7 * x**-1.25
        fit = fit_powerlaw(x, y)
        assert fit.exponent == pytest.approx(1.25, abs=1e-9)
        assert fit.prefactor == pytest.approx(3.7, rel=1e-9)
        assert fit.residual_rms < 1e-12
        assert fit.n_points == 60 and fit.n_excluded == 0

    def test_window_restricts_points(self):
        x = np.geomspace(1, 1e4, 60)
        y = 2.0 * x**-0.5
        y[:10] = 5.0  # contaminate below the window
        fit = fit_powerlaw(x, y, window=(100.0, 1e4))
        assert fit.exponent == pytest.approx(0.5, abs=1e-9)
        assert fit.window == (100.0, 1e4)

    def test_nonpositive_excluded(self):
        x = np.geomspace(1, 100, 20)
        y = x**-1.0
        y[3] = 0.0
        y[7] = -1e-3
        fit = fit_powerlaw(x, y)
        assert fit.n_excluded == 2
        assert fit.exponent == pytest.approx(1.0, abs=1e-6)

    def test_insufficient_points(self):
        with pytest.raises(InsufficientPoints):
            fit_powerlaw([1, 2, 3], [1, 1, 1])
        with pytest.raises(InsufficientPoints):
            fit_powerlaw(np.geomspace(1, 100, 20), np.ones(20), window=(1e4, 1e5))


class TestLogBinning:
    def test_bins_preserve_powerlaw(self):
        x = np.arange(1, 10_001, dtype=np.float64)
        y = x**-0.5
        bx, by, bn = log_bin_curve(x, y, bins_per_decade=8)
        assert bn.sum() == x.size
        fit = fit_powerlaw(bx, by)
        assert fit.exponent == pytest.approx(0.5, abs=0.01)

    def test_window_applies_before_binning(self):
        x = np.arange(1, 1001, dtype=np.float64)
        bx, _, bn = log_bin_curve(x, x, window=(10.0, 100.0))
        assert bx.min() >= 10.0 and bx.max() <= 100.0
        assert bn.sum() == 91

    def test_density_matches_pmf(self):
        # geometric samples: density bins reproduce the per-integer mass
        rng = np.random.default_rng(11)
        samples = rng.geometric(0.02, size=400_000)
        dist = EmpiricalDistribution.from_samples(samples)
        xs, dens = log_bin_density(dist, bins_per_decade=4, window=(1, 50))
        want = 0.02 * (1 - 0.02) ** (xs - 1.0)
        assert np.allclose(dens, want, rtol=0.05)

    def test_empty_window(self):
        with pytest.raises(InsufficientPoints):
            log_bin_curve(np.arange(1.0, 10.0), np.ones(9), window=(100.0, 200.0))
        dist = EmpiricalDistribution.from_samples([1, 2, 3])
        with pytest.raises(InsufficientPoints):
            log_bin_density(dist, window=(100.0, 200.0))


class TestFitsOnModelCurves:
    def test_acf_fit_recovers_tail_slope(self):
        trader = TraderSpec(0.1, DiscretePareto(tail_exponent=1.5))
        lags = np.unique(np.geomspace(1, 10_000, 400).astype(np.int64))
        curve = exact_acf_trader(trader, lags)
        fit = fit_acf_powerlaw(curve, window=(100.0, 10_000.0))
        assert fit.exponent == pytest.approx(0.5, abs=0.05)

    def test_exponential_acf_rejects_powerlaw(self):
        # an exponential-law market is not scale free: huge residual scatter
        trader = TraderSpec(0.1, Exponential(decay_length=10.0))
        lags = np.unique(np.geomspace(1, 3000, 300).astype(np.int64))
        curve = exact_acf_trader(trader, lags)
        fit = fit_acf_powerlaw(curve, window=(10.0, 3000.0))
        assert fit.residual_rms > 1.0

    def test_distribution_tail_fit(self):
        law = DiscretePareto(tail_exponent=1.5)
        rng = np.random.default_rng(21)
        dist = EmpiricalDistribution.from_samples(law.sample_length(rng, size=500_000))
        fit = fit_distribution_tail(dist, window=(10.0, 1000.0))
        # PMF decays one power faster than the CCDF
        assert fit.exponent == pytest.approx(2.5, abs=0.2)
