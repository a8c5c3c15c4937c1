import numpy as np
import pytest

from oracles import dense_radial_hessian
from vmfkit.exceptions import DomainError
from vmfkit.ode import query
from vmfkit.radial import (
    RadialDerivatives,
    RadialMatrix,
    radial_gradient,
    radial_hessian,
    radial_hessian_eigs,
    trace_bound_check,
    variance_function,
)
from vmfkit.vmf import VmfDistribution, sample


def _random_mu(rng, D):
    mu = rng.standard_normal(D)
    return mu / np.linalg.norm(mu) * rng.uniform(0.05, 0.95)


class TestGradient:
    def test_examples(self):
        assert np.array_equal(radial_gradient(np.zeros(4), 3.0), np.zeros(4))
        assert radial_gradient([0.5, 0.0], 2.0) == pytest.approx([2.0, 0.0])

    def test_parallel(self):
        rng = np.random.default_rng(0)
        mu = _random_mu(rng, 6)
        g = radial_gradient(mu, 1.7)
        assert np.linalg.norm(g) == pytest.approx(1.7)
        assert g @ mu == pytest.approx(np.linalg.norm(g) * np.linalg.norm(mu))


class TestHessian:
    def test_eig_examples(self):
        assert radial_hessian_eigs(0.5, 1.0, 4.0, 3) == (4.0, 2.0, 2)
        lam_r, lam_t, _ = radial_hessian_eigs(0.3, 0.3, 1.0, 5)
        assert lam_r == pytest.approx(1.0) and lam_t == pytest.approx(1.0)
        assert radial_hessian_eigs(0.0, 0.0, 7.0, 4) == (7.0, 7.0, 3)

    @pytest.mark.parametrize("D", [2, 3, 5])
    def test_dense_oracle(self, D):
        rng = np.random.default_rng(D)
        for _ in range(5):
            mu = _random_mu(rng, D)
            g1, g2 = rng.uniform(0.1, 5), rng.uniform(0.1, 5)
            H = radial_hessian(mu, g1, g2)
            ref = dense_radial_hessian(mu, g1, g2)
            assert np.allclose(H.dense(), ref, atol=1e-12)
            assert H.det() == pytest.approx(np.linalg.det(ref), rel=1e-10)
            assert H.logdet() == pytest.approx(np.linalg.slogdet(ref)[1], rel=1e-10, abs=1e-12)
            assert np.allclose(H.inverse().dense(), np.linalg.inv(ref), atol=1e-10)
            assert H.trace() == pytest.approx(np.trace(ref))

    def test_eigenvectors(self):
        rng = np.random.default_rng(1)
        D = 7
        mu = _random_mu(rng, D)
        g1, g2 = 2.0, 9.0
        H = radial_hessian(mu, g1, g2)
        r = np.linalg.norm(mu)
        assert H.matvec(mu) == pytest.approx(g2 * mu)
        y = rng.standard_normal(D)
        y -= (y @ mu) / (mu @ mu) * mu
        assert H.matvec(y) == pytest.approx(g1 / r * y)

    def test_dense_limit(self):
        H = RadialMatrix(1.0, 0.5, np.eye(1, 100).ravel())
        with pytest.raises(DomainError):
            H.dense()
        assert H.logdet() == pytest.approx(np.log(1.5))
        assert np.asarray(RadialMatrix(1.0, 0.5, np.array([1.0, 0.0]))).shape == (2, 2)


class TestVarianceFunction:
    def test_inverse_of_hessian(self):
        rng = np.random.default_rng(2)
        for D in [2, 4, 9]:
            mu = _random_mu(rng, D)
            g1, g2 = rng.uniform(0.1, 5), rng.uniform(0.1, 5)
            V = variance_function(mu, g1, g2).dense()
            H = radial_hessian(mu, g1, g2).dense()
            assert np.allclose(V @ H, np.eye(D), atol=1e-10)

    def test_trace_formula(self):
        mu = np.array([0.3, 0.4, 0.0, 0.0])
        V = variance_function(mu, 2.0, 5.0)
        assert V.trace() == pytest.approx(1 / 5.0 + 3 * 0.5 / 2.0)

    def test_isotropic_at_origin(self):
        V = variance_function(np.zeros(3), 0.0, 3.0)
        assert np.allclose(V.dense(), np.eye(3) / 3.0)

    @pytest.mark.parametrize("D", [3, 10, 100])
    def test_trace_identity_on_ode_profile(self, D, profile_factory):
        prof = profile_factory(D)
        for r in [0.1, 0.5, 0.9, 0.98]:
            _, g1, g2 = query(prof, r)
            mu = np.zeros(D)
            mu[0] = r
            assert variance_function(mu, g1, g2).trace() == pytest.approx(1 - r * r, abs=1e-8)

    def test_derivatives_validation(self):
        RadialDerivatives(0.5, 1.0, 2.0)
        with pytest.raises(DomainError):
            RadialDerivatives(1.0, 1.0, 2.0)
        with pytest.raises(DomainError):
            RadialDerivatives(0.5, 1.0, 0.0)


class TestTraceBound:
    def test_point_mass_and_uniform(self):
        assert trace_bound_check(np.eye(1, 4).ravel(), np.zeros((4, 4))) == 0.0
        assert trace_bound_check(np.zeros(5), np.eye(5) / 5) == pytest.approx(0.0, abs=1e-15)

    def test_inside_ball_has_positive_slack(self):
        assert trace_bound_check(np.zeros(3), np.eye(3) * 0.1) == pytest.approx(0.7)

    def test_vmf_samples(self):
        dist = VmfDistribution.from_natural(3.0 * np.eye(1, 5).ravel())
        X = sample(dist, 100_000, 11)
        mean = X.mean(axis=0)
        cov = np.cov(X.T, bias=True)
        slack = trace_bound_check(mean, cov)
        # on-sphere samples give zero slack up to rounding
        assert abs(slack) <= 1e-12
