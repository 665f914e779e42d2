"""Gibbs updates for the covariate block of one component: mu, Omega, phi, psi."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from bgcwm.core.exceptions import FactorizationError
from bgcwm.models.schemas import Hyperparams
from bgcwm.models.state import ComponentParams, ComponentSuffStats, phi_matrix, upper_pairs
from bgcwm.services import rngdist
from bgcwm.services.rngdist import RngStream

logger = logging.getLogger(__name__)

OMEGA_FLOOR = 1e-12


@dataclass(frozen=True)
class PartitionView:
    """Row/column j of Omega, S and Phi split from the remaining (p-1) x (p-1) block."""

    index: np.ndarray
    omega_minor: np.ndarray
    omega_col: np.ndarray
    omega_jj: float
    s_minor: np.ndarray
    s_col: np.ndarray
    s_jj: float
    phi_col: np.ndarray

    @classmethod
    def of(cls, omega: np.ndarray, scatter: np.ndarray, phi_full: np.ndarray, j: int) -> "PartitionView":
        index = np.delete(np.arange(omega.shape[0]), j)
        return cls(
            index=index,
            omega_minor=omega[np.ix_(index, index)],
            omega_col=omega[index, j],
            omega_jj=float(omega[j, j]),
            s_minor=scatter[np.ix_(index, index)],
            s_col=scatter[index, j],
            s_jj=float(scatter[j, j]),
            phi_col=phi_full[index, j],
        )


def mu_conditional(
    stats: ComponentSuffStats, comp: ComponentParams, m0: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    weight = 1.0 / (stats.n_k + 1)
    mean = weight * (m0 + stats.X.sum(axis=0))
    return mean, weight * comp.covariance()


def compute_scatter(stats: ComponentSuffStats, mu: np.ndarray, m0: np.ndarray) -> np.ndarray:
    """S_k = sum_i z_ik (x_i - mu)(x_i - mu)' + (mu - m0)(mu - m0)'."""
    centered = stats.X - mu
    prior = mu - m0
    return centered.T @ centered + np.outer(prior, prior)


def _invert_pd(matrix: np.ndarray, what: str) -> np.ndarray:
    try:
        factor = linalg.cho_factor(matrix, lower=True)
    except linalg.LinAlgError:
        raise FactorizationError(f"{what} is not positive definite", rngdist.min_eigenvalue(matrix)) from None
    return linalg.cho_solve(factor, np.eye(matrix.shape[0]))


def omega_block_update(
    comp: ComponentParams,
    scatter: np.ndarray,
    n_k: int,
    j: int,
    rng: RngStream,
    phi_full: np.ndarray | None = None,
) -> None:
    """Redraw row/column j of Omega in place through the (eta1, eta2) reparameterization."""
    p = comp.p
    gamma_rate = 0.5 * (float(scatter[j, j]) + comp.psi)
    eta1 = float(rngdist.sample_gamma(0.5 * (n_k + 1), gamma_rate, rng))
    if p == 1:
        comp.omega[0, 0] = eta1
        return

    if phi_full is None:
        phi_full = phi_matrix(comp.phi, p)
    view = PartitionView.of(comp.omega, scatter, phi_full, j)
    minor_inv = _invert_pd(view.omega_minor, f"Omega minor of row {j}")
    c_inverse = (view.s_jj + comp.psi) * minor_inv + np.diag(1.0 / view.phi_col)
    eta2 = rngdist.sample_mvnormal_precision(-view.s_col, c_inverse, rng)

    comp.omega[view.index, j] = eta2
    comp.omega[j, view.index] = eta2
    comp.omega[j, j] = eta1 + float(eta2 @ minor_inv @ eta2)


def phi_parameters(comp: ComponentParams) -> tuple[np.ndarray, float, int]:
    """Inverse-Gaussian means (upper-triangle order) and shape for u = 1/phi, plus floored count."""
    rows, cols = upper_pairs(comp.p)
    magnitude = np.abs(comp.omega[rows, cols])
    saturated = magnitude < OMEGA_FLOOR
    magnitude = np.where(saturated, OMEGA_FLOOR, magnitude)
    return comp.psi / magnitude, comp.psi**2, int(np.count_nonzero(saturated))


def phi_conditional(comp: ComponentParams, j: int, l: int) -> tuple[float, float]:
    magnitude = max(abs(float(comp.omega[j, l])), OMEGA_FLOOR)
    return comp.psi / magnitude, comp.psi**2


def psi_conditional(comp: ComponentParams, p: int, r: float, s: float) -> tuple[float, float]:
    return r + 0.5 * p * (p + 1), s + 0.5 * float(np.sum(np.abs(comp.omega)))


def check_precision(comp: ComponentParams) -> None:
    """Raise unless Omega is symmetric with a strictly positive smallest eigenvalue."""
    asymmetry = float(np.max(np.abs(comp.omega - comp.omega.T)))
    smallest = rngdist.min_eigenvalue(comp.omega)
    if asymmetry >= 1e-10 or not smallest > 0:
        raise FactorizationError(f"Omega lost symmetry or definiteness (asymmetry {asymmetry:.3e})", smallest)


def update_covariate_block(
    comp: ComponentParams,
    stats: ComponentSuffStats,
    hyper: Hyperparams,
    m0: np.ndarray,
    rng: RngStream,
    check_pd: bool = False,
) -> int:
    """mu, S, every Omega row/column, phi and psi, in place.

    Returns:
        Number of |omega_jl| values floored while forming the phi conditional.
    """
    p = comp.p
    weight = 1.0 / (stats.n_k + 1)
    mean = weight * (m0 + stats.X.sum(axis=0))
    comp.mu = rngdist.sample_mvnormal_precision((stats.n_k + 1) * (comp.omega @ mean), (stats.n_k + 1) * comp.omega, rng)

    scatter = compute_scatter(stats, comp.mu, m0)
    phi_full = phi_matrix(comp.phi, p)
    for j in range(p):
        omega_block_update(comp, scatter, stats.n_k, j, rng, phi_full)
    comp.omega = 0.5 * (comp.omega + comp.omega.T)
    if check_pd:
        check_precision(comp)

    saturated = 0
    if p > 1:
        ig_mean, ig_shape, saturated = phi_parameters(comp)
        comp.phi = 1.0 / np.atleast_1d(rngdist.sample_inverse_gaussian(ig_mean, ig_shape, rng))

    shape, rate = psi_conditional(comp, p, hyper.r, hyper.s)
    comp.psi = float(rngdist.sample_gamma(shape, rate, rng))

    if saturated:
        logger.debug(f"Floored {saturated} near-zero omega entries in the phi update")
    return saturated
