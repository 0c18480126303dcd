import numpy as np
import pytest
import scipy.stats

from noisygates.linalg import DECAY, I2, PAULI_X
from noisygates.stochastic import (
    GaussianIntegralSampler,
    ItoIntegralSpec,
    RngStream,
    ito_covariance,
    product_formula_error,
    sample_ito_integral,
    sample_ito_substeps,
    wiener_increments,
)


class TestRngStream:
    def test_determinism(self):
        a = RngStream(7, 3).generator.normal(size=10)
        b = RngStream(7, 3).generator.normal(size=10)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(7, 3).generator.normal(size=10)
        b = RngStream(7, 4).generator.normal(size=10)
        assert not np.array_equal(a, b)

    def test_children_independent_of_parent_draws(self):
        parent = RngStream(1)
        child_before = parent.child(2).generator.normal(size=4)
        parent.generator.normal(size=100)  # consuming the parent changes nothing
        child_after = parent.child(2).generator.normal(size=4)
        assert np.array_equal(child_before, child_after)


class TestWienerIncrements:
    def test_moments(self):
        draws = wiener_increments(RngStream(11), 1_000_000, 1.0)
        assert abs(draws.mean()) < 0.004  # 3 sigma CLT bound at 1e6 draws
        draws = wiener_increments(RngStream(12), 1_000_000, 0.25)
        assert abs(draws.var() - 0.25) < 0.002

    def test_reproducible(self):
        a = wiener_increments(RngStream(5), 16, 0.5)
        b = wiener_increments(RngStream(5), 16, 0.5)
        assert np.array_equal(a, b)

    def test_validation(self):
        with pytest.raises(ValueError):
            wiener_increments(RngStream(0), 0, 1.0)
        with pytest.raises(ValueError):
            wiener_increments(RngStream(0), 1, 0.0)


class TestItoCovariance:
    def test_constant_x(self):
        spec = ItoIntegralSpec(lambda s: PAULI_X)
        cov = ito_covariance(spec)
        # Re-entry (0,1) is stacked at index 1; all Im rows/cols vanish
        assert abs(cov[1, 1] - 1.0) < 1e-12
        assert np.abs(cov[4:, :]).max() < 1e-14

    def test_exponential_decay(self):
        spec = ItoIntegralSpec(lambda s: np.exp(-s / 2) * DECAY)
        cov = ito_covariance(spec)
        assert abs(cov[1, 1] - (1 - np.exp(-1))) < 1e-12

    def test_cosine(self):
        spec = ItoIntegralSpec(lambda s: np.cos(np.pi * s) * PAULI_X)
        assert abs(ito_covariance(spec)[1, 1] - 0.5) < 1e-12

    def test_too_few_nodes_rejected(self):
        with pytest.raises(ValueError):
            ito_covariance(ItoIntegralSpec(lambda s: PAULI_X, quadrature_nodes=8))

    def test_non_finite_integrand_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            ito_covariance(ItoIntegralSpec(lambda s: np.full((2, 2), np.nan)))


class TestSampleItoIntegral:
    def test_constant_identity_variance(self):
        spec = ItoIntegralSpec(lambda s: I2)
        sampler = GaussianIntegralSampler(spec)
        draws = sampler.sample(RngStream(21).generator, 100_000)
        var = np.real(draws[:, 0, 0]).var()
        assert abs(var - 1.0) < 0.02
        # constant identity integrand: both diagonal entries share one W
        assert np.allclose(draws[:, 0, 0], draws[:, 1, 1])
        assert np.abs(draws[:, 0, 1]).max() < 1e-12

    def test_zero_integrand(self):
        spec = ItoIntegralSpec(lambda s: np.zeros((2, 2)))
        for _ in range(3):
            assert np.array_equal(sample_ito_integral(spec, RngStream(1)), np.zeros((2, 2)))

    def test_isometry_against_empirical_covariance(self):
        spec = ItoIntegralSpec(lambda s: np.exp(-s / 2) * DECAY + np.cos(np.pi * s) * 1j * PAULI_X)
        cov = ito_covariance(spec)
        draws = GaussianIntegralSampler(spec).sample(RngStream(22).generator, 100_000)
        flat = np.concatenate([draws.reshape(-1, 4).real, draws.reshape(-1, 4).imag], axis=1)
        emp = np.cov(flat.T)
        se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / flat.shape[0])
        assert np.all(np.abs(emp - cov) <= 5 * se + 1e-12)

    def test_matches_substep_distribution(self):
        spec = ItoIntegralSpec(lambda s: np.exp(-s / 2) * DECAY)
        exact = GaussianIntegralSampler(spec).sample(RngStream(23).generator, 10_000)
        gen = RngStream(24).generator
        sub = np.stack([sample_ito_substeps(spec, 512, gen) for _ in range(10_000)])
        # same entry, two samplers: KS and moment agreement
        x = np.real(exact[:, 0, 1])
        y = np.real(sub[:, 0, 1])
        assert scipy.stats.ks_2samp(x, y).pvalue > 0.01
        pooled_se = np.sqrt(x.var() / x.size + y.var() / y.size)
        assert abs(x.mean() - y.mean()) < 3 * pooled_se
        var_se = np.sqrt(2 / x.size) * max(x.var(), y.var())
        assert abs(x.var() - y.var()) < 3 * np.sqrt(2) * var_se


class TestProductFormula:
    def test_zero_generators(self):
        zeros = [np.zeros((2, 2))] * 4
        assert product_formula_error(zeros, zeros, 0.1) == 0.0

    def test_single_factor_third_order(self):
        rng = np.random.default_rng(8)
        a = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))]
        b = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))]
        e1 = product_formula_error(a, b, 0.1)
        e2 = product_formula_error(a, b, 0.05)
        assert 6.0 < e1 / e2 < 10.0  # halving eps divides the defect by ~8

    def test_slope_on_random_instances(self):
        gen = np.random.default_rng(9)
        eps_grid = (0.2, 0.1, 0.05, 0.02)
        for _ in range(20):
            r = np.sqrt(gen.uniform(size=(8, 2, 2)))
            a_list = list(r * np.exp(2j * np.pi * gen.uniform(size=(8, 2, 2))))
            r = np.sqrt(gen.uniform(size=(8, 2, 2)))
            b_list = list(r * np.exp(2j * np.pi * gen.uniform(size=(8, 2, 2))))
            errs = [product_formula_error(a_list, b_list, e) for e in eps_grid]
            slope = np.polyfit(np.log(eps_grid), np.log(errs), 1)[0]
            assert slope >= 2.7

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            product_formula_error([np.eye(2)], [], 0.1)
