"""Numerical state of the sampler: data, component parameters and chain state."""

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from bgcwm.core.exceptions import DataFormatError


@dataclass(frozen=True)
class Dataset:
    """Response vector y[n] and covariate matrix X[n, p]."""

    y: np.ndarray
    X: np.ndarray
    labels: np.ndarray | None = None  # ground truth, never used by fitting

    def __post_init__(self) -> None:
        y = np.ascontiguousarray(self.y, dtype=float)
        X = np.ascontiguousarray(self.X, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DataFormatError(f"Shape mismatch: y {y.shape}, X {X.shape}")
        if X.shape[1] < 1:
            raise DataFormatError("At least one covariate is required")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataFormatError("Data contain missing or non-finite values")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        if self.labels is not None:
            object.__setattr__(self, "labels", np.asarray(self.labels))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@lru_cache(maxsize=64)
def upper_pairs(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of the strict upper triangle, in the storage order of phi."""
    rows, cols = np.triu_indices(p, k=1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def phi_matrix(phi: np.ndarray, p: int) -> np.ndarray:
    """Symmetric matrix with zero diagonal holding phi in the off-diagonal slots."""
    rows, cols = upper_pairs(p)
    out = np.zeros((p, p))
    out[rows, cols] = phi
    out[cols, rows] = phi
    return out


@dataclass
class ComponentParams:
    """All parameters of one mixture component (regression block, Gaussian block, latents)."""

    alpha: float
    beta: np.ndarray
    sigma2: float
    tau2: np.ndarray
    lam: float
    delta: float
    mu: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    psi: float

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    @classmethod
    def neutral(cls, p: int, m0: np.ndarray, a: float, b: float, r: float, s: float) -> "ComponentParams":
        """Starting values for a freshly added or initialized component."""
        return cls(
            alpha=0.0,
            beta=np.zeros(p),
            sigma2=b / a,
            tau2=np.ones(p),
            lam=1.0,
            delta=1.0,
            mu=np.array(m0, dtype=float),
            omega=np.eye(p),
            phi=np.ones(p * (p - 1) // 2),
            psi=r / s,
        )

    def copy(self) -> "ComponentParams":
        return replace(
            self,
            beta=self.beta.copy(),
            tau2=self.tau2.copy(),
            mu=self.mu.copy(),
            omega=self.omega.copy(),
            phi=self.phi.copy(),
        )

    def covariance(self) -> np.ndarray:
        """Sigma_k = Omega_k^{-1}, derived on demand."""
        return np.linalg.inv(self.omega)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta.tolist(),
            "sigma2": self.sigma2,
            "tau2": self.tau2.tolist(),
            "lambda": self.lam,
            "delta": self.delta,
            "mu": self.mu.tolist(),
            "omega": self.omega.tolist(),
            "phi": self.phi.tolist(),
            "psi": self.psi,
        }


@dataclass
class MixtureState:
    """Full chain state: weights, allocations, gamma and the component list."""

    pi: np.ndarray
    z: np.ndarray  # 0-based component index per observation
    components: list[ComponentParams]
    gamma: float | None = None  # telescoping only
    flags: dict[str, int] = field(default_factory=dict)

    @property
    def K(self) -> int:
        return len(self.components)

    def counts(self) -> np.ndarray:
        return np.bincount(self.z, minlength=self.K)[: self.K]

    @property
    def k_plus(self) -> int:
        return int(np.count_nonzero(self.counts()))

    def copy(self) -> "MixtureState":
        return MixtureState(
            pi=self.pi.copy(),
            z=self.z.copy(),
            components=[comp.copy() for comp in self.components],
            gamma=self.gamma,
            flags=dict(self.flags),
        )

    def permuted(self, order: np.ndarray | list[int]) -> "MixtureState":
        """State with new label j holding old component order[j]; z is remapped accordingly."""
        order = np.asarray(order, dtype=int)
        new_label = np.empty(self.K, dtype=int)
        new_label[order] = np.arange(self.K)
        return MixtureState(
            pi=self.pi[order].copy(),
            z=new_label[self.z],
            components=[self.components[j] for j in order],
            gamma=self.gamma,
            flags=dict(self.flags),
        )

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "pi": self.pi.tolist(),
            "z": self.z.tolist(),
            "gamma": self.gamma,
            "components": [comp.to_dict() for comp in self.components],
        }


@dataclass(frozen=True)
class ComponentSuffStats:
    """Rows allocated to one component and the quantities the conditionals read from them."""

    mask: np.ndarray  # z_k as booleans over the n observations
    y: np.ndarray
    X: np.ndarray

    @classmethod
    def from_allocation(cls, data: Dataset, z: np.ndarray, k: int) -> "ComponentSuffStats":
        mask = z == k
        return cls(mask=mask, y=data.y[mask], X=data.X[mask])

    @classmethod
    def empty(cls, p: int) -> "ComponentSuffStats":
        return cls(mask=np.zeros(0, dtype=bool), y=np.zeros(0), X=np.zeros((0, p)))

    @property
    def n_k(self) -> int:
        return self.y.shape[0]

    def residuals(self, alpha: float, beta: np.ndarray) -> np.ndarray:
        """e_k = y - alpha - X beta on the allocated rows."""
        return self.y - alpha - self.X @ beta

    def precision_matrix(self, tau2: np.ndarray) -> np.ndarray:
        """A_k = X' Z_k X + T_k^-1."""
        return self.X.T @ self.X + np.diag(1.0 / tau2)

    def shrinkage_weight(self, sigma_alpha2: float, sigma2: float) -> float:
        """w_k = n_k sigma_alpha2 / (n_k sigma_alpha2 + sigma2); zero for an empty component."""
        return self.n_k * sigma_alpha2 / (self.n_k * sigma_alpha2 + sigma2)


@dataclass
class DrawRecord:
    """One retained state together with its log-likelihood and log-posterior."""

    iteration: int
    k_plus: int
    loglik: float
    logpost: float
    state: MixtureState

    @property
    def K(self) -> int:
        return self.state.K


@dataclass
class TraceRow:
    iteration: int
    K: int
    k_plus: int
    gamma: float | None
    loglik: float
    logpost: float
    retained: bool


@dataclass
class DrawArchive:
    """Retained draws of one chain, its log-posterior trace and run metadata."""

    draws: list[DrawRecord]
    trace: list[TraceRow]
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.draws)

    def k_plus_values(self) -> np.ndarray:
        return np.array([draw.k_plus for draw in self.draws], dtype=int)

    def logposts(self) -> np.ndarray:
        return np.array([draw.logpost for draw in self.draws])

    def with_k_plus(self, k_plus: int) -> list[DrawRecord]:
        return [draw for draw in self.draws if draw.k_plus == k_plus]
