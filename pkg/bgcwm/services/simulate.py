"""Synthetic cluster-weighted regression datasets with known ground truth."""

import logging
from dataclasses import dataclass

import numpy as np

from bgcwm.core.exceptions import FactorizationError
from bgcwm.models.schemas import SimSpec
from bgcwm.models.state import Dataset
from bgcwm.services import rngdist
from bgcwm.services.rngdist import RngStream

logger = logging.getLogger(__name__)

WISHART_DF = 20
WISHART_ATTEMPTS = 10
FACTOR_RANK = 2


@dataclass
class RegressionTruth:
    alpha: np.ndarray  # K
    beta: np.ndarray  # K x p
    sigma2: np.ndarray  # K


@dataclass
class CovariateTruth:
    labels: np.ndarray  # 0-based
    X: np.ndarray
    mu: np.ndarray  # K x p
    covariance: np.ndarray  # K x p x p
    rho: list[int] | None = None  # 1-based template index per cluster, scenarios 3 and 4


@dataclass
class GroundTruth:
    spec: SimSpec
    regression: RegressionTruth
    covariates: CovariateTruth

    @property
    def labels(self) -> np.ndarray:
        """1-based cluster labels."""
        return self.covariates.labels + 1

    @property
    def xi(self) -> np.ndarray:
        return np.any(self.regression.beta != 0, axis=0).astype(int)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.model_dump(),
            "K": self.spec.K,
            "weights": self.spec.weights.tolist(),
            "alpha": self.regression.alpha.tolist(),
            "beta": self.regression.beta.tolist(),
            "sigma2": self.regression.sigma2.tolist(),
            "mu": self.covariates.mu.tolist(),
            "covariance": self.covariates.covariance.tolist(),
            "rho": self.covariates.rho,
            "labels": self.labels.tolist(),
            "xi": self.xi.tolist(),
        }


def gen_regression_params(spec: SimSpec, rng: RngStream) -> RegressionTruth:
    """alpha ~ N(0, 10^2), beta zero with probability p0 else N(0, 3^2), sigma2 ~ Exp(1)."""
    K, p = spec.K, spec.p
    alpha = rng.generator.normal(0.0, 10.0, size=K)
    nonzero = rng.generator.uniform(size=(K, p)) >= spec.p0
    beta = np.where(nonzero, rng.generator.normal(0.0, 3.0, size=(K, p)), 0.0)
    sigma2 = rngdist.sample_exponential(1.0, rng, size=K)
    return RegressionTruth(alpha=alpha, beta=beta, sigma2=sigma2)


def mean_template(k: int, p: int) -> np.ndarray:
    """Mean vector of template k (1-based) over j = 1..p."""
    phase = (np.arange(p) * k * np.pi) / p
    if k == 1:
        return np.zeros(p)
    if k == 2:
        return 2.0 * np.sin(phase)
    if k == 3:
        return 2.0 * np.cos(phase)
    if k == 4:
        return 4.0 * np.sin(phase) ** 2 - 4.0 * np.cos(phase) ** 2
    raise ValueError(f"No mean template for k={k}")


def toeplitz_scale(p: int) -> np.ndarray:
    index = np.arange(p)
    return (p - np.abs(index[:, None] - index[None, :])) / p


def _shared_wishart(p: int, rng: RngStream) -> np.ndarray:
    scale = toeplitz_scale(p)
    for attempt in range(1, WISHART_ATTEMPTS + 1):
        sigma = rngdist.sample_wishart(scale, WISHART_DF, rng)
        if rngdist.min_eigenvalue(sigma) > rngdist.PD_TOLERANCE:
            return sigma
        logger.warning(f"Wishart draw {attempt} was not positive definite; redrawing")
    raise FactorizationError("Wishart covariance not positive definite after 10 attempts", rngdist.min_eigenvalue(sigma))


def gen_covariates(spec: SimSpec, rng: RngStream) -> CovariateTruth:
    K, p, n = spec.K, spec.p, spec.n
    labels = rngdist.sample_multinomial_index(np.tile(spec.weights, (n, 1)), rng)
    rho = None
    mu = np.zeros((K, p))
    if spec.scenario in (1, 3):
        covariance = np.repeat(np.eye(p)[None], K, axis=0)
    elif spec.scenario == 2:
        covariance = np.repeat(_shared_wishart(p, rng)[None], K, axis=0)
    else:
        covariance = np.empty((K, p, p))
        for k in range(K):
            loadings = rng.generator.normal(size=(p, FACTOR_RANK))
            uniqueness = rng.generator.uniform(0.2, 1.0, size=p)
            covariance[k] = loadings @ loadings.T + np.diag(uniqueness)
    if spec.scenario in (3, 4):
        rho = (rng.generator.permutation(K) + 1).tolist()
        mu = np.vstack([mean_template(template, p) for template in rho])

    X = np.empty((n, p))
    for k in range(K):
        rows = np.flatnonzero(labels == k)
        if rows.size:
            X[rows] = rng.generator.multivariate_normal(mu[k], covariance[k], size=rows.size, method="cholesky")
    return CovariateTruth(labels=labels, X=X, mu=mu, covariance=covariance, rho=rho)


def gen_dataset(spec: SimSpec) -> tuple[Dataset, GroundTruth]:
    """Regression parameters, covariates, then y_i ~ N(alpha_k + x_i'beta_k, sigma2_k)."""
    root = RngStream(spec.seed)
    regression = gen_regression_params(spec, root.substream(0))
    covariates = gen_covariates(spec, root.substream(1))
    labels = covariates.labels
    mean = regression.alpha[labels] + np.einsum("ij,ij->i", covariates.X, regression.beta[labels])
    noise = root.substream(2).generator.standard_normal(spec.n)
    y = mean + np.sqrt(regression.sigma2[labels]) * noise
    truth = GroundTruth(spec=spec, regression=regression, covariates=covariates)
    logger.info(f"Simulated scenario {spec.scenario}: n={spec.n}, p={spec.p}, K={spec.K}, seed={spec.seed}")
    return Dataset(y=y, X=covariates.X, labels=truth.labels), truth
