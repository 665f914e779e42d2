"""Gibbs updates for the regression block of one component.

Every conditional is written in a form that stays defined at n_k = 0, where it
reduces to the corresponding (augmented) prior, so empty components go through
the same code path as occupied ones.
"""

import logging
import math

import numpy as np

from bgcwm.core.exceptions import SingularMatrixError
from bgcwm.models.schemas import Hyperparams
from bgcwm.models.state import ComponentParams, ComponentSuffStats
from bgcwm.services import rngdist
from bgcwm.services.rngdist import RngStream

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12
BETA_FLOOR = 1e-12


def alpha_conditional(
    stats: ComponentSuffStats, comp: ComponentParams, sigma_alpha2: float
) -> tuple[float, float]:
    """Mean and variance of alpha_k given everything else.

    The mean shrinks the average partial residual towards zero by w_k and the
    variance is w_k sigma2 / n_k.
    """
    if stats.n_k == 0:
        return 0.0, sigma_alpha2
    weight = stats.shrinkage_weight(sigma_alpha2, comp.sigma2)
    resid_mean = float(np.mean(stats.y - stats.X @ comp.beta))
    return weight * resid_mean, weight * comp.sigma2 / stats.n_k


def checked_precision(stats: ComponentSuffStats, tau2: np.ndarray) -> np.ndarray:
    """A_k, rejected when its Jacobi-scaled condition number exceeds MAX_CONDITION."""
    precision = stats.precision_matrix(tau2)
    scale = 1.0 / np.sqrt(np.diag(precision))
    condition = float(np.linalg.cond(precision * np.outer(scale, scale)))
    if not condition <= MAX_CONDITION:
        raise SingularMatrixError("A_k is numerically singular", condition)
    return precision


def beta_conditional(
    stats: ComponentSuffStats, comp: ComponentParams, alpha: float
) -> tuple[np.ndarray, np.ndarray]:
    """Mean A^-1 X'Z(y - alpha) and covariance sigma2 A^-1."""
    precision = checked_precision(stats, comp.tau2)
    rhs = stats.X.T @ (stats.y - alpha)
    factor = rngdist.cholesky_lower(precision, "A_k")
    identity = np.eye(precision.shape[0])
    inverse = np.linalg.solve(factor.T, np.linalg.solve(factor, identity))
    return inverse @ rhs, comp.sigma2 * inverse


def sigma2_conditional(
    stats: ComponentSuffStats,
    comp: ComponentParams,
    alpha: float,
    beta: np.ndarray,
    a: float,
    b: float,
) -> tuple[float, float]:
    resid = stats.residuals(alpha, beta)
    shape = a + 0.5 * (stats.n_k + beta.shape[0])
    rate = b + 0.5 * (float(resid @ resid) + float(np.sum(beta * beta / comp.tau2)))
    return shape, rate


def _floored_abs(values: np.ndarray) -> tuple[np.ndarray, int]:
    magnitude = np.abs(values)
    saturated = magnitude < BETA_FLOOR
    return np.where(saturated, BETA_FLOOR, magnitude), int(np.count_nonzero(saturated))


def tau2_parameters(comp: ComponentParams) -> tuple[np.ndarray, float, int]:
    """Inverse-Gaussian mean vector and shape for 1/tau2, plus the number of floored |beta_j|."""
    magnitude, saturated = _floored_abs(comp.beta)
    return math.sqrt(comp.sigma2) * comp.lam / magnitude, comp.lam**2, saturated


def tau2_conditional(comp: ComponentParams, j: int) -> tuple[float, float]:
    means, shape, _ = tau2_parameters(comp)
    return float(means[j]), shape


def lambda2_conditional(comp: ComponentParams, p: int) -> tuple[float, float]:
    return p + 0.5, 0.5 * (float(np.sum(comp.tau2)) + comp.delta)


def delta_conditional(comp: ComponentParams) -> tuple[float, float]:
    return 1.0, 0.5 * (comp.lam**2 + 1.0)


def update_regression_block(
    comp: ComponentParams,
    stats: ComponentSuffStats,
    hyper: Hyperparams,
    rng: RngStream,
) -> int:
    """One pass over alpha, beta, sigma2, tau2, lambda, delta (in that order), in place.

    Returns:
        Number of |beta_j| values floored while forming the tau2 conditional.
    """
    mean, var = alpha_conditional(stats, comp, hyper.sigma_alpha2)
    comp.alpha = float(rngdist.sample_normal(mean, math.sqrt(var), rng))

    precision = checked_precision(stats, comp.tau2)
    rhs = stats.X.T @ (stats.y - comp.alpha)
    comp.beta = rngdist.sample_mvnormal_precision(rhs, precision, rng, scale=comp.sigma2)

    shape, rate = sigma2_conditional(stats, comp, comp.alpha, comp.beta, hyper.a, hyper.b)
    comp.sigma2 = float(rngdist.sample_inverse_gamma(shape, rate, rng))

    ig_mean, ig_shape, saturated = tau2_parameters(comp)
    comp.tau2 = 1.0 / np.atleast_1d(rngdist.sample_inverse_gaussian(ig_mean, ig_shape, rng))

    shape, rate = lambda2_conditional(comp, comp.p)
    comp.lam = math.sqrt(float(rngdist.sample_gamma(shape, rate, rng)))

    shape, rate = delta_conditional(comp)
    comp.delta = float(rngdist.sample_gamma(shape, rate, rng))

    if saturated:
        logger.debug(f"Floored {saturated} near-zero beta values in the tau2 update")
    return saturated
