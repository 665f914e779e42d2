"""Pydantic configuration and report schemas."""

from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from bgcwm.core.exceptions import ConfigError


class InferenceMode(str, Enum):
    """How the number of components is handled."""

    FIXED_K = "fixed_k"
    OVERFITTING = "overfitting"
    TELESCOPING = "telescoping"


class BnbParams(BaseModel):
    """Translated Beta-Negative-Binomial prior on K - 1."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    a_lambda: float = Field(default=1.0, gt=0, description="a_lambda")
    a_pi: float = Field(default=4.0, gt=0, description="a_pi")
    b_pi: float = Field(default=3.0, gt=0, description="b_pi")


class Hyperparams(BaseModel):
    """Fixed prior constants shared by every component."""

    model_config = ConfigDict(extra="forbid")

    sigma_alpha2: float = Field(default=1e3, gt=0, description="Prior variance of the intercepts")
    a: float = Field(default=1e-2, gt=0, description="Inverse-gamma shape of sigma^2")
    b: float = Field(default=1e-2, gt=0, description="Inverse-gamma rate of sigma^2")
    m0: list[float] | None = Field(
        default=None, description="Prior mean of mu_k; zero vector when omitted"
    )
    r: float = Field(default=1.0, gt=0, description="Gamma shape of psi")
    s: float = Field(default=1e-2, gt=0, description="Gamma rate of psi")
    nu_l: float = Field(default=6.0, gt=0, description="F hyper-prior numerator df")
    nu_r: float = Field(default=3.0, gt=0, description="F hyper-prior denominator df")
    bnb: BnbParams = Field(default_factory=BnbParams)
    fixed_concentration: float = Field(
        default=1.0, gt=0, description="Dirichlet concentration for fixed_k runs"
    )
    overfit_concentration: float = Field(
        default=1e-3, gt=0, description="Sparse Dirichlet concentration for overfitting runs"
    )

    @classmethod
    def section_defaults(cls) -> "Hyperparams":
        """Alternative prior constants with the smaller sigma^2 prior (a=b=1e-3)."""
        return cls(a=1e-3, b=1e-3, s=1e-2)

    def m0_vector(self, p: int) -> np.ndarray:
        if self.m0 is None:
            return np.zeros(p)
        m0 = np.asarray(self.m0, dtype=float)
        if m0.shape != (p,):
            raise ConfigError(f"m0 has length {m0.size}, data has p={p}")
        return m0


class RunConfig(BaseModel):
    """Configuration of one fit (one or more chains)."""

    model_config = ConfigDict(extra="forbid")

    mode: InferenceMode = InferenceMode.TELESCOPING
    k: int | None = Field(default=None, ge=1, description="Number of components for fixed_k")
    k_max: int = Field(default=20, ge=1, description="Number of components for overfitting")
    iterations: int = Field(default=11000, ge=1)
    burn_in: int = Field(default=1000, ge=0)
    thin: int = Field(default=10, ge=1)
    chains: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0, description="Base seed; chain c uses stream-id c")
    seeds: list[int] | None = Field(default=None, description="Explicit per-chain seeds")
    init_restarts: int = Field(default=30, ge=1)
    init_k_min: int = Field(default=6, ge=1)
    init_k_max: int = Field(default=15, ge=1)
    hyper: Hyperparams = Field(default_factory=Hyperparams)
    gamma_init: float = Field(default=1.0, gt=0)
    gamma_proposal_scale: float = Field(default=0.5, ge=0)
    gamma_target: Literal["gamma", "literal"] = Field(
        default="gamma",
        description="'gamma' uses Gamma(n_k + gamma/K); 'literal' uses (n_k + gamma/K)",
    )
    spawn_warm_sweeps: int = Field(default=10, ge=0)
    k_cap: int = Field(default=200, ge=1)
    k_tail_cutoff: float = Field(default=30.0, gt=0)
    minor_mode_gap: float = Field(default=50.0, gt=0)
    minor_mode_window: int = Field(default=100, ge=1)

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        if self.burn_in >= self.iterations:
            raise ValueError("burn_in must be smaller than iterations")
        if self.mode == InferenceMode.FIXED_K and self.k is None:
            raise ValueError("fixed_k mode requires k")
        if self.init_k_min > self.init_k_max:
            raise ValueError("init_k_min must not exceed init_k_max")
        if self.seeds is not None and len(self.seeds) != self.chains:
            raise ValueError("seeds must list one seed per chain")
        return self

    @classmethod
    def preset(cls, name: str, **overrides) -> "RunConfig":
        """Named schedules: 'default' (simulation runs) and 'long' (real-data runs)."""
        presets = {
            "default": {},
            "long": {"iterations": 250_000, "burn_in": 50_000, "thin": 100},
        }
        if name not in presets:
            raise ConfigError(f"Unknown preset '{name}'; choose from {sorted(presets)}")
        return cls(**{**presets[name], **overrides})

    @property
    def n_draws(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    def chain_seeds(self) -> list[tuple[int, int]]:
        """(seed, stream-id) per chain."""
        if self.seeds is not None:
            return [(seed, 0) for seed in self.seeds]
        return [(self.seed, chain) for chain in range(self.chains)]


class SimSpec(BaseModel):
    """Synthetic dataset specification."""

    model_config = ConfigDict(extra="forbid")

    K: int = Field(..., ge=2, le=4, description="Number of clusters")
    p: int = Field(..., ge=1, description="Number of covariates")
    n: int = Field(..., ge=1, description="Sample size")
    scenario: Literal[1, 2, 3, 4] = Field(..., description="Covariate scenario")
    p0: float = Field(..., ge=0, le=1, description="Probability of a zero coefficient")
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_wishart_df(self) -> "SimSpec":
        if self.scenario == 2 and self.p > 20:
            raise ValueError("scenario 2 draws a Wishart with 20 degrees of freedom; p must be <= 20")
        return self

    @property
    def weights(self) -> np.ndarray:
        w = np.arange(1, self.K + 1, dtype=float)
        return w / w.sum()


class ModeReport(BaseModel):
    """Grouping of chains by terminal mean log-posterior."""

    terminal_means: list[float] = Field(..., description="Terminal mean log-posterior per chain")
    groups: list[list[int]] = Field(..., description="Single-linkage groups of chains, best first")
    main_group: list[int] = Field(..., description="Chains within gap of the best terminal mean")
    minor_chains: list[int] = Field(default_factory=list, description="Chains flagged as minor-mode")
    gap: float = Field(..., description="Gap threshold in log-posterior units")


class RegionBounds(BaseModel):
    """Simultaneous credible interval of one coefficient."""

    cluster: int
    variable: int
    lower: float
    upper: float
    significant: bool


class ClusterEstimate(BaseModel):
    """Posterior means of one relabeled cluster."""

    cluster: int
    weight: float
    alpha: float
    beta: list[float]
    sigma2: float
    mu: list[float]


class Summary(BaseModel):
    """Post-processing summary written to summary.json."""

    k_plus_posterior: dict[int, float] = Field(..., description="K+ posterior over the chains used")
    k_plus_posterior_all_chains: dict[int, float] = Field(
        ..., description="K+ posterior over every supplied chain"
    )
    k_plus_hat: int = Field(..., description="Modal K+")
    chains_used: list[int] = Field(default_factory=list)
    n_draws_used: int = Field(..., description="Draws with K+ equal to the modal value")
    level: float = Field(..., description="Simultaneous credible level")
    xi: list[int] = Field(..., description="Pooled significance indicators")
    xi_by_cluster: list[list[int]] = Field(..., description="Per-cluster significance indicators")
    selected_variables: list[int] = Field(..., description="1-based significant variables")
    selected_by_cluster: dict[int, list[int]] = Field(default_factory=dict)
    regions: list[RegionBounds] = Field(default_factory=list)
    posterior_means: list[ClusterEstimate] = Field(default_factory=list)
    clustering: list[int] = Field(..., description="1-based single best clustering")
    ari: float | None = Field(default=None, description="ARI against the supplied truth")
    approximations: list[str] = Field(default_factory=list)


class CriterionRow(BaseModel):
    k: int
    d: int
    loglik: float
    aic: float
    bic: float
    icl: float
    entropy: float


class CriterionReport(BaseModel):
    """Information criteria over a fixed-K sweep."""

    rows: list[CriterionRow]
    selected: dict[str, int] = Field(..., description="argmin K per criterion")


class ScoreMetrics(BaseModel):
    """Accuracy of a fit against simulation ground truth."""

    k_true: int
    k_hat: int
    abs_error: int = Field(..., description="|K - K_hat|")
    ari: float
    hamming: int = Field(..., description="Sum_j |xi_hat_j - xi_j|")
    xi_true: list[int]
    xi_hat: list[int]
    beta_mae: float | None = Field(
        default=None, description="Cumulative absolute error of beta, when K_hat == K"
    )
    beta_mae_by_cluster: list[float] | None = None
