"""Shared pytest fixtures for the cluster-weighted model tests."""

import numpy as np
import pytest

from bgcwm.core.config import get_settings
from bgcwm.models.schemas import Hyperparams, InferenceMode, RunConfig
from bgcwm.models.state import ComponentParams, Dataset, DrawArchive, DrawRecord, MixtureState
from bgcwm.services.rngdist import RngStream


@pytest.fixture(autouse=True)
def fresh_settings():
    """Drop the cached settings so environment overrides in one test never leak into another."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return RngStream(12345)


@pytest.fixture
def hyper():
    return Hyperparams()


@pytest.fixture
def two_cluster_data():
    """Two well separated clusters in (x1, x2) with different regression lines."""
    gen = np.random.default_rng(7)
    n_each = 40
    X = np.vstack([gen.normal(-3.0, 1.0, size=(n_each, 2)), gen.normal(3.0, 1.0, size=(n_each, 2))])
    labels = np.repeat([1, 2], n_each)
    y = np.empty(2 * n_each)
    y[:n_each] = 1.0 + X[:n_each] @ np.array([2.0, 0.0]) + gen.normal(0.0, 0.3, n_each)
    y[n_each:] = -2.0 + X[n_each:] @ np.array([0.0, -1.5]) + gen.normal(0.0, 0.3, n_each)
    return Dataset(y=y, X=X, labels=labels)


@pytest.fixture
def state_factory():
    """Build a MixtureState from allocations with one neutral component per label.

    Component k gets alpha = k, beta filled with k + 1 and mu = k * ones, so
    tests can tell components apart after permutations.
    """

    def build(z, K: int | None = None, p: int = 2, gamma: float | None = None) -> MixtureState:
        z = np.asarray(z, dtype=int)
        K = int(z.max()) + 1 if K is None else K
        components = []
        for k in range(K):
            comp = ComponentParams.neutral(p, np.zeros(p), 1.0, 1.0, 1.0, 1.0)
            comp.alpha = float(k)
            comp.beta = np.full(p, k + 1.0)
            comp.mu = np.full(p, float(k))
            components.append(comp)
        counts = np.bincount(z, minlength=K).astype(float) + 1.0
        return MixtureState(pi=counts / counts.sum(), z=z, components=components, gamma=gamma)

    return build


@pytest.fixture
def archive_factory():
    """Wrap states into a DrawArchive with consecutive iterations and decreasing log-posteriors."""

    def build(states: list[MixtureState], n: int, p: int, metadata: dict | None = None) -> DrawArchive:
        draws = [
            DrawRecord(
                iteration=i + 1,
                k_plus=state.k_plus,
                loglik=-100.0 - i,
                logpost=-150.0 - i,
                state=state,
            )
            for i, state in enumerate(states)
        ]
        return DrawArchive(draws=draws, trace=[], metadata={"n": n, "p": p, **(metadata or {})})

    return build


@pytest.fixture
def fast_config():
    """A sampler configuration small enough for unit tests."""

    def build(mode: InferenceMode = InferenceMode.FIXED_K, **overrides) -> RunConfig:
        values = {
            "mode": mode,
            "k": 2 if mode == InferenceMode.FIXED_K else None,
            "k_max": 4,
            "iterations": 20,
            "burn_in": 10,
            "thin": 2,
            "init_restarts": 2,
            "init_k_min": 2,
            "init_k_max": 3,
            "spawn_warm_sweeps": 1,
        }
        values.update(overrides)
        return RunConfig(**values)

    return build
