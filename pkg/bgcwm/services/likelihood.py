"""Mixture likelihoods and the unnormalized log-posterior."""

import logging
import math

import numpy as np
from scipy import special

from bgcwm.models.schemas import Hyperparams, InferenceMode
from bgcwm.models.state import ComponentParams, Dataset, MixtureState, upper_pairs
from bgcwm.services import rngdist

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)

# Recorded in run metadata: the PD-truncation constant of the glasso prior is dropped.
GLASSO_CONSTANT_DROPPED = "glasso_prior_normalizing_constant_dropped"


def component_log_density(y: np.ndarray, X: np.ndarray, comp: ComponentParams) -> np.ndarray:
    """log f(y_i | alpha + x_i'beta, sigma2) + log f(x_i | mu, Omega^-1) for every row."""
    resid = y - comp.alpha - X @ comp.beta
    regression = -0.5 * (LOG_2PI + math.log(comp.sigma2)) - 0.5 * resid * resid / comp.sigma2
    factor = rngdist.cholesky_lower(comp.omega, "omega")
    whitened = (X - comp.mu) @ factor
    half_log_det = float(np.sum(np.log(np.diag(factor))))
    covariate = -0.5 * X.shape[1] * LOG_2PI + half_log_det - 0.5 * np.einsum("ij,ij->i", whitened, whitened)
    return regression + covariate


def log_lik_point(y_i: float, x_i: np.ndarray, comp: ComponentParams) -> float:
    value = component_log_density(np.array([y_i], dtype=float), np.atleast_2d(np.asarray(x_i, dtype=float)), comp)
    return float(value[0])


def log_density_matrix(data: Dataset, components: list[ComponentParams]) -> np.ndarray:
    """n x K matrix of per-point, per-component log densities."""
    return np.column_stack([component_log_density(data.y, data.X, comp) for comp in components])


def weighted_log_density(data: Dataset, state: MixtureState) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_pi = np.log(state.pi)
    return log_density_matrix(data, state.components) + log_pi


def observed_log_lik(data: Dataset, state: MixtureState, weighted: np.ndarray | None = None) -> float:
    """Sum over points of log sum_k pi_k f_k(y_i, x_i).

    Each row is sorted before the log-sum-exp and rows are summed with fsum,
    so the value does not depend on the order of the component labels.
    """
    if weighted is None:
        weighted = weighted_log_density(data, state)
    rows = special.logsumexp(np.sort(weighted, axis=1), axis=1)
    return math.fsum(rows)


def complete_log_lik(data: Dataset, state: MixtureState, weighted: np.ndarray | None = None) -> float:
    if weighted is None:
        weighted = weighted_log_density(data, state)
    return math.fsum(weighted[np.arange(data.n), state.z])


def dirichlet_concentration(mode: InferenceMode, hyper: Hyperparams, K: int, gamma: float | None) -> np.ndarray:
    """Per-component Dirichlet concentration gamma_k for the given inference mode."""
    if mode == InferenceMode.FIXED_K:
        return np.full(K, hyper.fixed_concentration)
    if mode == InferenceMode.OVERFITTING:
        return np.full(K, hyper.overfit_concentration)
    if gamma is None:
        raise ValueError("telescoping mode requires gamma")
    return np.full(K, gamma / K)


def glasso_log_prior(omega: np.ndarray, psi: float) -> float:
    """Exponential(psi/2) diagonal and Laplace(1/psi) off-diagonal terms, without the PD constant."""
    rows, cols = upper_pairs(omega.shape[0])
    diagonal = rngdist.log_exponential_pdf(np.diag(omega), 0.5 * psi)
    off_diagonal = rngdist.log_double_exponential_pdf(omega[rows, cols], 1.0 / psi) if rows.size else 0.0
    return diagonal + off_diagonal


def component_log_prior(comp: ComponentParams, hyper: Hyperparams, m0: np.ndarray) -> float:
    """Log prior density of one component's parameters.

    beta enters through its marginal Laplace density given lambda and sigma2, so the
    latent tau2 and the half-Cauchy auxiliary delta contribute nothing. Their
    conditionals exist only to make the Gibbs updates conjugate.
    """
    sigma = math.sqrt(comp.sigma2)
    terms = [
        rngdist.log_normal_pdf(comp.alpha, 0.0, hyper.sigma_alpha2),
        rngdist.log_double_exponential_pdf(comp.beta, sigma / comp.lam),
        rngdist.log_inverse_gamma_pdf(comp.sigma2, hyper.a, hyper.b),
        rngdist.log_half_cauchy_pdf(comp.lam),
        rngdist.log_mvnormal_precision_pdf(comp.mu, m0, comp.omega),
        glasso_log_prior(comp.omega, comp.psi),
        rngdist.log_gamma_pdf(comp.psi, hyper.r, hyper.s),
    ]
    return math.fsum(terms)


def log_posterior_unnorm(
    data: Dataset,
    state: MixtureState,
    hyper: Hyperparams,
    mode: InferenceMode,
    weighted: np.ndarray | None = None,
) -> float:
    """Complete log-likelihood plus every log prior term, up to an additive constant."""
    if (state.gamma is not None) != (mode == InferenceMode.TELESCOPING):
        raise ValueError("gamma must be present exactly when the mode is telescoping")
    m0 = hyper.m0_vector(data.p)
    priors = [component_log_prior(comp, hyper, m0) for comp in state.components]
    concentration = dirichlet_concentration(mode, hyper, state.K, state.gamma)
    terms = [
        complete_log_lik(data, state, weighted),
        math.fsum(priors),
        rngdist.log_dirichlet_pdf(state.pi, concentration),
    ]
    if mode == InferenceMode.TELESCOPING:
        terms.append(rngdist.bnb_log_pmf(state.K, hyper.bnb))
        terms.append(rngdist.snedecor_f_log_pdf(state.gamma, hyper.nu_l, hyper.nu_r))
    return math.fsum(terms)
