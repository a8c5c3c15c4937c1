import math

import numpy as np
import pytest
import scipy.sparse as sp

from oracles import coth_ratio, d3_kappa, d3_log_partition, mp_ratio
from vmfkit.approx import Level
from vmfkit.exceptions import DimensionMismatch, DomainError, EmptyData, NotUnitNorm
from vmfkit.kappa import KappaMethod
from vmfkit.ode import psi_zero, query
from vmfkit.specfun import log_partition
from vmfkit.vmf import (
    PsiSource,
    VmfDistribution,
    bregman_divergence,
    bregman_from_origin,
    log_density_mean,
    log_density_natural,
    mle_mean,
    psi_pair,
    sample,
)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def e(i, D):
    out = np.zeros(D)
    out[i] = 1.0
    return out


def random_unit(rng, n, D):
    g = rng.standard_normal((n, D))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


class TestConstruction:
    def test_from_natural(self):
        dist = VmfDistribution.from_natural([0.0, 2.0, 0.0])
        assert dist.kappa == 2.0
        assert dist.r == pytest.approx(coth_ratio(2.0), rel=1e-14)
        assert np.allclose(dist.direction, [0, 1, 0])
        with pytest.raises(ValueError):
            dist.mu[0] = 1.0

    def test_from_mean(self):
        dist = VmfDistribution.from_mean([0.0, 0.0, 0.5])
        assert dist.kappa == pytest.approx(d3_kappa(0.5), rel=1e-10)
        assert np.allclose(dist.eta, [0, 0, dist.kappa])

    def test_uniform(self):
        for dist in (VmfDistribution.from_mean(np.zeros(4)), VmfDistribution.from_natural(np.zeros(4))):
            assert dist.kappa == 0.0 and dist.r == 0.0
            assert np.array_equal(dist.eta, np.zeros(4))

    @pytest.mark.parametrize("D", [2, 3, 10, 100, 1000])
    def test_round_trip(self, D):
        rng = np.random.default_rng(D)
        for r in [0.01, 0.3, 0.7, 0.95, 0.99]:
            mu = unit(rng.standard_normal(D)) * r
            there = VmfDistribution.from_mean(mu)
            back = VmfDistribution.from_natural(there.eta)
            assert np.max(np.abs(back.mu - mu)) <= 1e-8

    def test_eta_parallel_to_mu(self):
        rng = np.random.default_rng(4)
        mu = unit(rng.standard_normal(6)) * 0.6
        dist = VmfDistribution.from_mean(mu, KappaMethod.closed_form(Level.TILDE2))
        assert np.allclose(dist.eta, dist.kappa / dist.r * mu, rtol=1e-14)

    def test_validation(self):
        with pytest.raises(DomainError):
            VmfDistribution.from_mean([0.8, 0.8])
        with pytest.raises(DomainError):
            VmfDistribution.from_mean([0.5])
        with pytest.raises(DomainError):
            VmfDistribution.from_natural([np.inf, 0.0])


class TestDensities:
    def test_uniform_is_constant(self):
        dist = VmfDistribution.from_natural(np.zeros(5))
        X = random_unit(np.random.default_rng(0), 4, 5)
        assert np.allclose(log_density_natural(dist, X), -log_partition(5, 0.0))
        mdist = VmfDistribution.from_mean(np.zeros(5))
        assert np.allclose(log_density_mean(mdist, X), -log_partition(5, 0.0), atol=1e-12)

    def test_d3_contrast(self):
        dist = VmfDistribution.from_natural([1.0, 0.0, 0.0])
        diff = log_density_natural(dist, [1.0, 0.0, 0.0]) - log_density_natural(dist, [-1.0, 0.0, 0.0])
        assert diff == pytest.approx(2.0, abs=1e-15)

    def test_d3_closed_form(self):
        dist = VmfDistribution.from_natural([0.0, 0.0, 2.5])
        x = unit([1.0, 2.0, 3.0])
        ref = 2.5 * x[2] - d3_log_partition(2.5)
        assert log_density_natural(dist, x) == pytest.approx(ref, rel=1e-12)

    @pytest.mark.parametrize("kappa", [0.0, 0.7, 5.0, 60.0])
    def test_d2_normalization(self, kappa):
        dist = VmfDistribution.from_natural([kappa, 0.0])
        theta = np.linspace(0.0, 2 * np.pi, 20001)[:-1]
        X = np.column_stack([np.cos(theta), np.sin(theta)])
        dens = np.exp(log_density_natural(dist, X))
        # nu = arc length / (2 pi)^2; uniform trapezoid on a periodic grid
        total = dens.sum() * (2 * np.pi / theta.size) / (2 * np.pi) ** 2
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_d3_mean_vs_natural(self, profile_factory):
        profile_factory(3)
        rng = np.random.default_rng(5)
        X = random_unit(rng, 20, 3)
        for r in [0.1, 0.5, 0.9, 0.98]:
            mu = r * unit(rng.standard_normal(3))
            dist = VmfDistribution.from_mean(mu)
            assert np.max(np.abs(log_density_mean(dist, X) - log_density_natural(dist, X))) <= 1e-6
            kap = d3_kappa(r)
            ref = kap / r * (X @ mu) - d3_log_partition(kap)
            assert np.max(np.abs(log_density_mean(dist, X) - ref)) <= 1e-6

    def test_mean_density_is_maximal_along_mu(self):
        rng = np.random.default_rng(6)
        mu = 0.6 * unit(rng.standard_normal(8))
        dist = VmfDistribution.from_mean(mu)
        top = log_density_mean(dist, dist.direction)
        X = random_unit(rng, 200, 8)
        assert np.all(log_density_mean(dist, X) < top)

    @pytest.mark.parametrize("source", [PsiSource.TILDE, PsiSource.BANERJEE])
    def test_closed_form_error_envelope(self, source):
        D = 100
        rng = np.random.default_rng(7)
        X = random_unit(rng, 50, D)
        for r in [0.2, 0.6, 0.9]:
            dist = VmfDistribution.from_mean(r * e(0, D))
            ode_psi, ode_psi1 = psi_pair(D, r)
            psi, psi1 = psi_pair(D, r, source)
            bound = abs(psi - ode_psi) + abs(psi1 - ode_psi1) / r * (1 + r) * r
            gap = np.abs(log_density_mean(dist, X, source) - log_density_mean(dist, X))
            assert np.max(gap) <= bound + 1e-9

    def test_sparse_and_dense_agree(self):
        rng = np.random.default_rng(8)
        X = random_unit(rng, 10, 6)
        X[np.abs(X) < 0.3] = 0.0
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        dist = VmfDistribution.from_mean(0.4 * unit(rng.standard_normal(6)))
        assert np.allclose(log_density_mean(dist, sp.csr_matrix(X)), log_density_mean(dist, X), rtol=1e-14)
        assert np.allclose(log_density_natural(dist, sp.csr_matrix(X)), log_density_natural(dist, X), rtol=1e-14)

    def test_input_checks(self):
        dist = VmfDistribution.from_natural([1.0, 0.0, 0.0])
        with pytest.raises(NotUnitNorm):
            log_density_natural(dist, [1.0, 1.0, 0.0])
        with pytest.raises(NotUnitNorm):
            log_density_mean(dist, [0.5, 0.0, 0.0])
        with pytest.raises(DimensionMismatch):
            log_density_natural(dist, [1.0, 0.0])
        log_density_natural(dist, [1.0 + 5e-10, 0.0, 0.0])


class TestBregman:
    def test_minimized_along_mu(self):
        rng = np.random.default_rng(9)
        dist = VmfDistribution.from_mean(0.5 * unit(rng.standard_normal(5)))
        X = random_unit(rng, 300, 5)
        assert np.all(bregman_divergence(X, dist) > bregman_divergence(dist.direction, dist))

    def test_argmin_equals_argmax_density(self):
        rng = np.random.default_rng(10)
        comps = [VmfDistribution.from_mean(r * unit(rng.standard_normal(7))) for r in (0.3, 0.8)]
        X = random_unit(rng, 200, 7)
        div = np.column_stack([bregman_divergence(X, c, PsiSource.TILDE) for c in comps])
        dens = np.column_stack([log_density_mean(c, X, PsiSource.TILDE) for c in comps])
        assert np.array_equal(np.argmin(div, axis=1), np.argmax(dens, axis=1))

    @pytest.mark.parametrize("D", [3, 100])
    def test_from_origin(self, D, profile_factory):
        prof = profile_factory(D)
        for r in [0.2, 0.7, 0.95]:
            psi, psi1, _ = query(prof, r)
            assert bregman_from_origin(D, r) == pytest.approx(r * psi1 - psi + psi_zero(D), rel=1e-12)
        assert bregman_from_origin(D, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_from_origin_d3_oracle(self):
        r = 0.6
        k = d3_kappa(r)
        # r psi' - psi = Phi(kappa) by Legendre duality
        ref = d3_log_partition(k) + psi_zero(3)
        assert bregman_from_origin(3, r) == pytest.approx(ref, abs=1e-6)


class TestMle:
    def test_examples(self):
        assert np.array_equal(mle_mean([[1.0, 0.0], [-1.0, 0.0]]), [0.0, 0.0])
        assert np.array_equal(mle_mean([[1.0, 0.0, 0.0]]), [1.0, 0.0, 0.0])
        assert mle_mean([[1.0, 0.0], [0.0, 1.0]], [3.0, 1.0]) == pytest.approx([0.75, 0.25])

    def test_sparse(self):
        X = np.array([[0.6, 0.8, 0.0], [0.0, 0.0, 1.0]])
        assert np.allclose(mle_mean(sp.csr_matrix(X), [1.0, 2.0]), mle_mean(X, [1.0, 2.0]))

    def test_errors(self):
        with pytest.raises(EmptyData):
            mle_mean(np.zeros((0, 3)))
        with pytest.raises(EmptyData):
            mle_mean([[1.0, 0.0]], [0.0])
        with pytest.raises(DomainError):
            mle_mean([[1.0, 0.0]], [-1.0])

    def test_recovers_truth(self):
        N = 10_000
        mu = VmfDistribution.from_natural(3.0 * unit([1, -1, 2, 0, 1])).mu
        X = sample(VmfDistribution.from_mean(mu), N, 12)
        assert np.linalg.norm(mle_mean(X) - mu) <= 4 / math.sqrt(N)

    def test_likelihood_is_maximal(self):
        rng = np.random.default_rng(13)
        D = 6
        X = sample(VmfDistribution.from_natural(4.0 * e(1, D)), 500, 14)
        best = VmfDistribution.from_mean(mle_mean(X))
        ll_best = np.sum(log_density_mean(best, X))
        assert np.sum(log_density_natural(best, X)) == pytest.approx(ll_best, rel=1e-8)
        for _ in range(100):
            alt = unit(rng.standard_normal(D)) * rng.uniform(0.01, 0.98)
            assert np.sum(log_density_mean(VmfDistribution.from_mean(alt), X)) <= ll_best


class TestSampler:
    def test_shape_and_determinism(self):
        dist = VmfDistribution.from_natural([0.0, 4.0, 0.0, 0.0])
        a = sample(dist, 50, 3)
        assert a.shape == (50, 4)
        assert np.allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-12)
        assert np.array_equal(a, sample(dist, 50, 3))
        assert not np.array_equal(a, sample(dist, 50, 4))
        assert sample(dist, 0, 1).shape == (0, 4)

    def test_uniform(self):
        n, D = 40_000, 5
        X = sample(VmfDistribution.from_natural(np.zeros(D)), n, 15)
        # each coordinate has standard error 1/sqrt(n D)
        assert np.linalg.norm(X.mean(axis=0)) <= math.sqrt(D) * 4 / math.sqrt(n * D)

    @pytest.mark.parametrize("D,kappa", [(2, 1.0), (3, 0.5), (5, 3.0), (50, 30.0), (20, 400.0)])
    def test_moments(self, D, kappa):
        n = 100_000
        rng = np.random.default_rng(D)
        direction = unit(rng.standard_normal(D))
        X = sample(VmfDistribution.from_natural(kappa * direction), n, rng)
        A = mp_ratio(D / 2, kappa)
        var_w = 1 - A * A - (D - 1) * A / kappa
        se = math.sqrt(var_w / n)
        mean = X.mean(axis=0)
        assert abs(np.linalg.norm(mean) - A) <= 4 * se
        assert mean @ direction / np.linalg.norm(mean) > 0.99
        cov_tr = np.trace(np.cov(X.T, bias=True))
        assert abs(cov_tr - (1 - A * A)) <= 4 * 2 * A * se + 1e-12

    def test_negative_n(self):
        with pytest.raises(DomainError):
            sample(VmfDistribution.from_natural([1.0, 0.0]), -1, 0)
