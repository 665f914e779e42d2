"""Seeded random-variate generation and log densities used by the sampler and simulator."""

import logging
import math

import numpy as np
from scipy import linalg, special, stats

from bgcwm.core.exceptions import DomainError, FactorizationError
from bgcwm.models.schemas import BnbParams

logger = logging.getLogger(__name__)

PD_TOLERANCE = 1e-10
SIMPLEX_FLOOR = 1e-300


class RngStream:
    """A PCG64 generator keyed by (seed, stream-id).

    Sub-streams are derived from the same key through the SeedSequence spawn key,
    so a chain and all of its module streams are reproducible from two integers.
    """

    def __init__(self, seed: int, stream_id: int = 0, spawn_key: tuple[int, ...] = ()) -> None:
        if seed < 0 or stream_id < 0:
            raise DomainError(f"seed and stream_id must be unsigned, got ({seed}, {stream_id})")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.spawn_key = tuple(spawn_key)
        sequence = np.random.SeedSequence(entropy=[self.seed, self.stream_id], spawn_key=self.spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def substream(self, key: int) -> "RngStream":
        """Independent stream derived deterministically from this one."""
        return RngStream(self.seed, self.stream_id, self.spawn_key + (int(key),))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, spawn_key={self.spawn_key})"


def _require_positive(name: str, value) -> None:
    arr = np.asarray(value, dtype=float)
    if arr.size == 0 or not np.all(arr > 0) or not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite and strictly positive, got {value!r}")


def min_eigenvalue(matrix: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (matrix + matrix.T))[0])


def cholesky_lower(matrix: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor, raising FactorizationError with the min eigenvalue on failure."""
    try:
        factor = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise FactorizationError(f"{what} is not positive definite", min_eigenvalue(matrix)) from None
    return factor


# --- samplers ------------------------------------------------------------------------


def sample_normal(mean, sd, rng: RngStream, size=None):
    _require_positive("sd", sd)
    return rng.generator.normal(mean, sd, size=size)


def sample_uniform(low: float, high: float, rng: RngStream, size=None):
    if not high > low:
        raise DomainError(f"uniform requires low < high, got ({low}, {high})")
    return rng.generator.uniform(low, high, size=size)


def sample_exponential(rate, rng: RngStream, size=None):
    _require_positive("rate", rate)
    return rng.generator.exponential(1.0 / np.asarray(rate, dtype=float), size=size)


def sample_double_exponential(loc, scale, rng: RngStream, size=None):
    _require_positive("scale", scale)
    return rng.generator.laplace(loc, scale, size=size)


def sample_gamma(shape, rate, rng: RngStream, size=None):
    """Gamma with shape/rate parameterization."""
    _require_positive("shape", shape)
    _require_positive("rate", rate)
    return rng.generator.gamma(shape, 1.0 / np.asarray(rate, dtype=float), size=size)


def sample_inverse_gamma(shape, rate, rng: RngStream, size=None):
    """Density proportional to x^(-shape-1) exp(-rate/x)."""
    _require_positive("shape", shape)
    _require_positive("rate", rate)
    return np.asarray(rate, dtype=float) / rng.generator.gamma(shape, 1.0, size=size)


def sample_inverse_gaussian(mean, shape, rng: RngStream, size=None):
    """Inverse-Gaussian draws by the Michael-Schucany-Haas transform.

    The smaller root is written as 2*mu*lam / (2*lam + mu*y + sqrt(mu*y*(4*lam + mu*y))),
    which equals the textbook form without its cancellation for large mu*y/lam.
    """
    _require_positive("mean", mean)
    _require_positive("shape", shape)
    mu = np.asarray(mean, dtype=float)
    lam = np.asarray(shape, dtype=float)
    out_shape = np.broadcast(mu, lam).shape if size is None else size
    nu = rng.generator.standard_normal(out_shape)
    u = rng.generator.uniform(size=out_shape)
    y = nu * nu
    muy = mu * y
    x1 = 2.0 * mu * lam / (2.0 * lam + muy + np.sqrt(muy * (4.0 * lam + muy)))
    draw = np.where(u <= mu / (mu + x1), x1, mu * mu / x1)
    return draw if np.ndim(draw) else float(draw)


def sample_dirichlet(concentration, rng: RngStream) -> np.ndarray:
    """Dirichlet draw from normalized gammas, evaluated in log space.

    log G = log Gamma(a+1) + log(U)/a keeps tiny concentrations away from exact zeros.
    """
    alpha = np.asarray(concentration, dtype=float)
    _require_positive("concentration", alpha)
    log_g = np.log(rng.generator.gamma(alpha + 1.0)) + np.log(rng.generator.uniform(size=alpha.shape)) / alpha
    w = np.exp(log_g - special.logsumexp(log_g))
    w = np.maximum(w, SIMPLEX_FLOOR)
    return w / w.sum()


def sample_multinomial_index(probs: np.ndarray, rng: RngStream) -> np.ndarray:
    """One categorical draw per row of an n x K probability matrix (0-based indices)."""
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    u = rng.generator.uniform(size=probs.shape[0])
    return np.argmax(u[:, None] < cdf, axis=1)


def sample_mvnormal(mean: np.ndarray, covariance: np.ndarray, rng: RngStream) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    covariance = np.asarray(covariance, dtype=float)
    factor = cholesky_lower(covariance, "covariance")
    if np.min(np.diag(factor)) ** 2 < PD_TOLERANCE:
        raise FactorizationError("covariance is numerically singular", min_eigenvalue(covariance))
    return mean + factor @ rng.generator.standard_normal(mean.shape[0])


def sample_mvnormal_precision(
    shift: np.ndarray, precision: np.ndarray, rng: RngStream, scale: float = 1.0
) -> np.ndarray:
    """Draw from N(P^-1 shift, scale * P^-1) using one Cholesky of the precision P."""
    factor = cholesky_lower(precision, "precision")
    mean = linalg.cho_solve((factor, True), shift)
    noise = linalg.solve_triangular(factor.T, rng.generator.standard_normal(shift.shape[0]), lower=False)
    return mean + math.sqrt(scale) * noise


def sample_wishart(scale: np.ndarray, df: float, rng: RngStream) -> np.ndarray:
    if df <= scale.shape[0] - 1:
        raise DomainError(f"Wishart needs df > p - 1, got df={df}, p={scale.shape[0]}")
    cholesky_lower(scale, "Wishart scale")
    return np.atleast_2d(stats.wishart.rvs(df=df, scale=scale, random_state=rng.generator))


# --- log densities -------------------------------------------------------------------


def bnb_log_pmf(k, params: BnbParams):
    """log p(K=k) of the Beta-Negative-Binomial prior placed on K - 1."""
    k_arr = np.asarray(k)
    if np.any(k_arr < 1) or not np.all(np.equal(np.mod(k_arr, 1), 0)):
        raise DomainError(f"bnb_log_pmf requires integer k >= 1, got {k!r}")
    km1 = k_arr.astype(float) - 1.0
    a_l, a_p, b_p = params.a_lambda, params.a_pi, params.b_pi
    value = (
        special.gammaln(a_l + km1)
        - special.gammaln(a_l)
        - special.gammaln(km1 + 1.0)
        + special.betaln(a_l + a_p, km1 + b_p)
        - special.betaln(a_p, b_p)
    )
    return float(value) if np.ndim(value) == 0 else value


def snedecor_f_log_pdf(x: float, nu_l: float, nu_r: float) -> float:
    if x <= 0:
        raise DomainError(f"F density requires x > 0, got {x}")
    _require_positive("nu_l", nu_l)
    _require_positive("nu_r", nu_r)
    return float(stats.f.logpdf(x, nu_l, nu_r))


def log_normal_pdf(x, mean, variance) -> float:
    return float(np.sum(-0.5 * (math.log(2.0 * math.pi) + np.log(variance)) - 0.5 * (x - mean) ** 2 / variance))


def log_mvnormal_precision_pdf(x: np.ndarray, mean: np.ndarray, precision: np.ndarray) -> float:
    factor = cholesky_lower(precision, "precision")
    diff = factor.T @ (np.asarray(x) - np.asarray(mean))
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor))))
    return -0.5 * diff.shape[0] * math.log(2.0 * math.pi) + 0.5 * log_det - 0.5 * float(diff @ diff)


def log_gamma_pdf(x, shape: float, rate: float) -> float:
    return float(np.sum(shape * math.log(rate) - special.gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x))


def log_inverse_gamma_pdf(x, shape: float, rate: float) -> float:
    return float(np.sum(shape * math.log(rate) - special.gammaln(shape) - (shape + 1.0) * np.log(x) - rate / x))


def log_exponential_pdf(x, rate) -> float:
    return float(np.sum(np.log(rate) - rate * np.asarray(x)))


def log_double_exponential_pdf(x, scale) -> float:
    """Laplace(0, scale) log density."""
    return float(np.sum(-np.log(2.0 * np.asarray(scale)) - np.abs(x) / scale))


def log_half_cauchy_pdf(x: float) -> float:
    return math.log(2.0 / math.pi) - math.log1p(x * x)


def log_dirichlet_pdf(w: np.ndarray, concentration: np.ndarray) -> float:
    if w.shape[0] == 1:
        return 0.0
    terms = special.gammaln(concentration) - (concentration - 1.0) * np.log(w)
    return float(special.gammaln(math.fsum(concentration)) - math.fsum(terms))
