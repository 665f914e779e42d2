"""Tests for the covariate-block updates (mu, Omega, phi, psi)."""

import numpy as np
import pytest

from bgcwm.core.exceptions import FactorizationError
from bgcwm.models.schemas import Hyperparams
from bgcwm.models.state import ComponentParams, ComponentSuffStats, Dataset, phi_matrix
from bgcwm.services import glasso_gaussian
from bgcwm.services.rngdist import RngStream


def _component(p: int) -> ComponentParams:
    return ComponentParams.neutral(p, np.zeros(p), 1.0, 1.0, 1.0, 0.01)


def _stats_from(X: np.ndarray) -> ComponentSuffStats:
    data = Dataset(y=np.zeros(X.shape[0]), X=X)
    return ComponentSuffStats.from_allocation(data, np.zeros(X.shape[0], dtype=int), 0)


class TestConditionals:
    def test_scatter_includes_prior_term(self):
        X = np.array([[1.0, 2.0], [3.0, 0.0]])
        mu, m0 = np.array([1.0, 1.0]), np.array([0.0, 2.0])
        expected = np.outer([0.0, 1.0], [0.0, 1.0]) + np.outer([2.0, -1.0], [2.0, -1.0]) + np.outer([1.0, -1.0], [1.0, -1.0])
        np.testing.assert_allclose(glasso_gaussian.compute_scatter(_stats_from(X), mu, m0), expected)

    def test_mu_conditional_empty_is_prior(self):
        comp = _component(2)
        comp.omega = np.array([[2.0, 0.5], [0.5, 1.0]])
        m0 = np.array([0.3, -0.2])
        mean, cov = glasso_gaussian.mu_conditional(ComponentSuffStats.empty(2), comp, m0)
        np.testing.assert_allclose(mean, m0)
        np.testing.assert_allclose(cov, np.linalg.inv(comp.omega))

    def test_mu_conditional_with_data(self):
        X = np.array([[1.0, 1.0], [3.0, -1.0], [2.0, 0.0]])
        mean, cov = glasso_gaussian.mu_conditional(_stats_from(X), _component(2), np.zeros(2))
        np.testing.assert_allclose(mean, X.sum(axis=0) / 4.0)
        np.testing.assert_allclose(cov, np.eye(2) / 4.0)

    def test_partition_view(self):
        omega = np.arange(9.0).reshape(3, 3)
        view = glasso_gaussian.PartitionView.of(omega, omega, omega, 1)
        np.testing.assert_array_equal(view.index, [0, 2])
        np.testing.assert_array_equal(view.omega_col, [1.0, 7.0])
        assert view.omega_jj == 4.0

    def test_phi_parameters_floor_zero_entries(self):
        comp = _component(3)
        comp.omega = np.array([[2.0, 0.0, 0.5], [0.0, 2.0, -0.25], [0.5, -0.25, 2.0]])
        comp.psi = 2.0
        means, shape, saturated = glasso_gaussian.phi_parameters(comp)
        assert saturated == 1
        np.testing.assert_allclose(means[1:], [2.0 / 0.5, 2.0 / 0.25])
        assert shape == 4.0
        assert glasso_gaussian.phi_conditional(comp, 0, 2) == pytest.approx((4.0, 4.0))

    def test_psi_conditional(self):
        comp = _component(2)
        comp.omega = np.array([[2.0, -0.5], [-0.5, 1.0]])
        shape, rate = glasso_gaussian.psi_conditional(comp, 2, 1.0, 0.01)
        assert shape == pytest.approx(4.0)
        assert rate == pytest.approx(0.01 + 0.5 * 4.0)

    def test_check_precision_rejects_indefinite(self):
        comp = _component(2)
        comp.omega = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(FactorizationError):
            glasso_gaussian.check_precision(comp)


class TestOmegaUpdate:
    """Row-wise Omega updates keep a symmetric positive definite matrix."""

    def test_single_covariate_draws_positive_scalar(self):
        comp = _component(1)
        rng = RngStream(3)
        for _ in range(20):
            glasso_gaussian.omega_block_update(comp, np.array([[1.5]]), 10, 0, rng)
            assert comp.omega[0, 0] > 0

    def test_row_update_keeps_positive_definite(self):
        comp = _component(3)
        rng = RngStream(4)
        scatter = np.array([[5.0, 1.0, 0.5], [1.0, 4.0, 0.2], [0.5, 0.2, 3.0]])
        for sweep in range(30):
            for j in range(3):
                glasso_gaussian.omega_block_update(comp, scatter, 5, j, rng, phi_matrix(comp.phi, 3))
            np.testing.assert_allclose(comp.omega, comp.omega.T, atol=1e-12)
            assert np.linalg.eigvalsh(comp.omega)[0] > 0

    def test_empty_component_block_stays_positive_definite(self):
        comp = _component(3)
        rng = RngStream(8)
        hyper = Hyperparams()
        for _ in range(50):
            glasso_gaussian.update_covariate_block(
                comp, ComponentSuffStats.empty(3), hyper, np.zeros(3), rng, check_pd=True
            )
            assert comp.psi > 0
            assert np.all(comp.phi > 0)

    def test_recovers_precision_matrix(self):
        gen = np.random.default_rng(2)
        covariance = np.array([[1.0, 0.6], [0.6, 2.0]])
        X = gen.multivariate_normal([1.0, -1.0], covariance, size=2000)
        stats = _stats_from(X)
        comp = _component(2)
        rng = RngStream(10)
        omegas, mus = [], []
        for sweep in range(200):
            glasso_gaussian.update_covariate_block(comp, stats, Hyperparams(), np.zeros(2), rng)
            if sweep >= 50:
                omegas.append(comp.omega.copy())
                mus.append(comp.mu.copy())
        np.testing.assert_allclose(np.mean(omegas, axis=0), np.linalg.inv(covariance), rtol=0.15, atol=0.05)
        np.testing.assert_allclose(np.mean(mus, axis=0), [1.0, -1.0], atol=0.1)
