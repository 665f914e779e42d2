"""Chain orchestration: initialization, sweeps, thinning, multi-chain runs and mode screening."""

import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from sklearn.cluster import KMeans
from sklearn.preprocessing import StandardScaler

from bgcwm.core.config import get_settings
from bgcwm.core.exceptions import BgcwmError, ChainAbortedError
from bgcwm.core.storage import dataset_digest
from bgcwm.models.schemas import InferenceMode, ModeReport, RunConfig
from bgcwm.models.state import (
    ComponentParams,
    ComponentSuffStats,
    Dataset,
    DrawArchive,
    DrawRecord,
    MixtureState,
    TraceRow,
)
from bgcwm.services import allocation, glasso_gaussian, lasso_regression, likelihood, rngdist
from bgcwm.services.rngdist import RngStream
from bgcwm.utils import SweepClock

logger = logging.getLogger(__name__)

RIDGE_PENALTY = 1e-6
COVARIANCE_LOADING = 1e-3
SIGMA2_FLOOR = 1e-6

# Sub-stream keys of a chain stream.
STREAM_INIT, STREAM_ALLOC, STREAM_PARAMS, STREAM_WEIGHTS, STREAM_K, STREAM_SPAWN, STREAM_GAMMA = range(7)

WARM_SWEEP_APPROXIMATION = "empty_components_from_prior_gibbs_warm_sweeps"


def _moments_component(
    y: np.ndarray, X: np.ndarray, pooled_cov: np.ndarray, fallback: bool, hyper, m0: np.ndarray
) -> ComponentParams:
    """Ridge OLS for (alpha, beta), residual variance, and regularized sample moments for (mu, Omega)."""
    p = X.shape[1]
    design = np.column_stack([np.ones(y.shape[0]), X])
    coef = np.linalg.solve(design.T @ design + RIDGE_PENALTY * np.eye(p + 1), design.T @ y)
    resid = y - design @ coef
    cov = pooled_cov if fallback else np.atleast_2d(np.cov(X, rowvar=False))
    comp = ComponentParams.neutral(p, m0, hyper.a, hyper.b, hyper.r, hyper.s)
    comp.alpha = float(coef[0])
    comp.beta = coef[1:].copy()
    comp.sigma2 = max(float(np.mean(resid * resid)), SIGMA2_FLOOR)
    comp.mu = X.mean(axis=0)
    comp.omega = np.linalg.inv(cov + COVARIANCE_LOADING * np.eye(p))
    comp.omega = 0.5 * (comp.omega + comp.omega.T)
    return comp


class ChainSampler:
    """Telescoping, overfitting or fixed-K Gibbs sampler for one chain."""

    def __init__(self, data: Dataset, config: RunConfig, rng: RngStream) -> None:
        self.data = data
        self.config = config
        self.hyper = config.hyper
        self.mode = config.mode
        self.m0 = config.hyper.m0_vector(data.p)
        self.settings = get_settings()
        self.rng = rng
        self.streams = {key: rng.substream(key) for key in range(7)}
        self.counters = {
            "beta_floor": 0,
            "omega_floor": 0,
            "k_cap_hits": 0,
            "gamma_accepted": 0,
            "gamma_proposed": 0,
        }

    # --- initialization --------------------------------------------------------------

    def _initial_k(self, rng: RngStream) -> int:
        if self.mode == InferenceMode.FIXED_K:
            return int(self.config.k)
        k = int(rng.generator.integers(self.config.init_k_min, self.config.init_k_max + 1))
        if self.mode == InferenceMode.OVERFITTING:
            k = min(k, self.config.k_max)
        return k

    def candidate(self, rng: RngStream) -> MixtureState:
        """k-means partition of the standardized (y, X) rows with per-cluster moment estimates."""
        data, hyper = self.data, self.hyper
        K = self._initial_k(rng)
        features = StandardScaler().fit_transform(np.column_stack([data.y, data.X]))
        n_clusters = min(K, data.n)
        if n_clusters > 1:
            seed = int(rng.generator.integers(0, 2**31 - 1))
            labels = KMeans(n_clusters=n_clusters, n_init=1, random_state=seed).fit(features).labels_
        else:
            labels = np.zeros(data.n, dtype=int)

        pooled_cov = np.atleast_2d(np.cov(data.X, rowvar=False)) if data.n > 1 else np.eye(data.p)
        components = []
        for k in range(K):
            rows = labels == k
            if not np.any(rows):
                components.append(allocation.fresh_component(data.p, hyper, self.m0))
                continue
            fallback = int(rows.sum()) < data.p + 2
            if fallback:
                logger.debug(f"Initial cluster {k} has {int(rows.sum())} members; using pooled covariance")
            components.append(_moments_component(data.y[rows], data.X[rows], pooled_cov, fallback, hyper, self.m0))

        if self.mode == InferenceMode.OVERFITTING:
            components += [
                allocation.fresh_component(data.p, hyper, self.m0) for _ in range(self.config.k_max - K)
            ]
        counts = np.bincount(labels, minlength=len(components)).astype(float)
        pi = np.maximum(counts / counts.sum(), rngdist.SIMPLEX_FLOOR)
        gamma = self.config.gamma_init if self.mode == InferenceMode.TELESCOPING else None
        return MixtureState(pi=pi / pi.sum(), z=labels.astype(int), components=components, gamma=gamma)

    def initialize(self) -> MixtureState:
        """Best of `init_restarts` candidates by log-posterior after one sweep each."""
        init_stream = self.streams[STREAM_INIT]
        best_state, best_score = None, -np.inf
        for restart in range(self.config.init_restarts):
            stream = init_stream.substream(restart)
            state = self.sweep(self.candidate(stream), iteration=0, rng=stream)
            score = likelihood.log_posterior_unnorm(self.data, state, self.hyper, self.mode)
            logger.debug(f"Restart {restart}: K={state.K}, K+={state.k_plus}, logpost={score:.3f}")
            if best_state is None or score > best_score:
                best_state, best_score = state, score
        logger.info(f"Initialized chain at K={best_state.K}, K+={best_state.k_plus}, logpost={best_score:.3f}")
        return best_state

    # --- one sweep -------------------------------------------------------------------

    def sweep(self, state: MixtureState, iteration: int, rng: RngStream | None = None) -> MixtureState:
        """z, relabel, component blocks, pi, then K, spawn and gamma when telescoping."""
        streams = self.streams if rng is None else {key: rng.substream(100 + key) for key in range(7)}
        data, hyper, config = self.data, self.hyper, self.config

        probs = allocation.allocation_probs(data, state)
        state.z = allocation.draw_allocations(probs, streams[STREAM_ALLOC])
        state, _ = allocation.relabel_nonempty_first(state)

        check_pd = self.settings.debug_checks or (
            iteration > 0 and iteration % self.settings.pd_check_interval == 0
        )
        for k, comp in enumerate(state.components):
            stats = ComponentSuffStats.from_allocation(data, state.z, k)
            self.counters["beta_floor"] += lasso_regression.update_regression_block(
                comp, stats, hyper, streams[STREAM_PARAMS]
            )
            self.counters["omega_floor"] += glasso_gaussian.update_covariate_block(
                comp, stats, hyper, self.m0, streams[STREAM_PARAMS], check_pd=check_pd
            )

        state.pi = rngdist.sample_dirichlet(allocation.pi_conditional(state, self.mode, hyper), streams[STREAM_WEIGHTS])

        if self.mode == InferenceMode.TELESCOPING:
            counts = state.counts()
            K_new, cap_hit = allocation.k_conditional_draw(
                counts, state.gamma, hyper.bnb, streams[STREAM_K], config.k_cap, config.k_tail_cutoff
            )
            if cap_hit:
                self.counters["k_cap_hits"] += 1
                logger.debug(f"K conditional reached the cap {config.k_cap} at sweep {iteration}")
            state = allocation.spawn_empty_components(
                state, K_new, hyper, self.m0, streams[STREAM_SPAWN], config.spawn_warm_sweeps
            )
            state.gamma, accepted = allocation.gamma_mh_update(
                state.gamma,
                counts,
                state.K,
                hyper,
                config.gamma_proposal_scale,
                streams[STREAM_GAMMA],
                config.gamma_target,
            )
            self.counters["gamma_proposed"] += 1
            self.counters["gamma_accepted"] += int(accepted)
            state.pi = rngdist.sample_dirichlet(
                allocation.pi_conditional(state, self.mode, hyper), streams[STREAM_WEIGHTS]
            )
        return state

    # --- full chain ------------------------------------------------------------------

    def evaluate(self, state: MixtureState) -> tuple[float, float]:
        weighted = likelihood.weighted_log_density(self.data, state)
        loglik = likelihood.observed_log_lik(self.data, state, weighted)
        logpost = likelihood.log_posterior_unnorm(self.data, state, self.hyper, self.mode, weighted)
        return loglik, logpost

    def run(self) -> DrawArchive:
        config = self.config
        draws: list[DrawRecord] = []
        trace: list[TraceRow] = []
        iteration = 0
        state = None
        with SweepClock() as clock:
            try:
                state = self.initialize()
                clock.initialized()
                for iteration in range(1, config.iterations + 1):
                    state = self.sweep(state, iteration)
                    clock.sweep_done()
                    retained = iteration > config.burn_in and (iteration - config.burn_in) % config.thin == 0
                    if not (retained or iteration % config.thin == 0):
                        continue
                    loglik, logpost = self.evaluate(state)
                    k_plus = state.k_plus
                    trace.append(TraceRow(iteration, state.K, k_plus, state.gamma, loglik, logpost, retained))
                    if retained:
                        draws.append(DrawRecord(iteration, k_plus, loglik, logpost, state.copy()))
            except (BgcwmError, np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
                dump = state.to_dict() if state is not None else {}
                logger.error(f"Chain {self.rng.stream_id} failed at sweep {iteration}: {exc}")
                raise ChainAbortedError(str(exc), iteration, dump) from exc

        timing = clock.timing()
        metadata = self.metadata(timing)
        logger.info(
            f"Chain {self.rng.stream_id} finished: {len(draws)} draws in {timing['wall_time_s']:.1f}s "
            f"({timing['sweeps_per_s'] or 0:.1f} sweeps/s), "
            f"gamma acceptance {metadata['gamma_acceptance']}"
        )
        return DrawArchive(draws=draws, trace=trace, metadata=metadata)

    def metadata(self, timing: dict) -> dict:
        counters = self.counters
        warnings = []
        if counters["beta_floor"]:
            warnings.append(f"beta floored at 1e-12 {counters['beta_floor']} times in the tau2 update")
        if counters["omega_floor"]:
            warnings.append(f"omega floored at 1e-12 {counters['omega_floor']} times in the phi update")
        if counters["k_cap_hits"]:
            warnings.append(f"K conditional truncated at the cap {self.config.k_cap} in {counters['k_cap_hits']} sweeps")
        approximations = [likelihood.GLASSO_CONSTANT_DROPPED]
        if self.mode == InferenceMode.TELESCOPING:
            approximations.append(WARM_SWEEP_APPROXIMATION)
        proposed = counters["gamma_proposed"]
        return {
            "config": self.config.model_dump(mode="json"),
            "seed": self.rng.seed,
            "stream_id": self.rng.stream_id,
            "n": self.data.n,
            "p": self.data.p,
            "data_sha256": dataset_digest(self.data),
            "wall_time_s": timing["wall_time_s"],
            "timing": timing,
            "warnings": warnings,
            "approximations": approximations,
            "counters": dict(counters),
            "gamma_acceptance": (counters["gamma_accepted"] / proposed) if proposed else None,
        }


def initialize(data: Dataset, config: RunConfig, rng: RngStream) -> MixtureState:
    return ChainSampler(data, config, rng).initialize()


def run_chain(data: Dataset, config: RunConfig, rng: RngStream) -> DrawArchive:
    logger.info(f"Starting {config.mode.value} chain (seed={rng.seed}, stream={rng.stream_id})")
    return ChainSampler(data, config, rng).run()


def _run_chain_job(job: tuple[Dataset, RunConfig, int, int]) -> DrawArchive:
    data, config, seed, stream_id = job
    return run_chain(data, config, RngStream(seed, stream_id))


def screen_modes(archives: list[DrawArchive], gap: float = 50.0, window: int = 100) -> ModeReport:
    """Screen chains by the mean of their last `window` retained log-posteriors.

    A chain is minor-mode when its terminal mean lies more than `gap` below the best
    chain's. `groups` is single linkage on the sorted means (a new group starts
    wherever two neighbours differ by more than `gap`) and is reported for inspection.
    """
    means = []
    for archive in archives:
        values = archive.logposts()
        means.append(float(np.mean(values[-window:])) if values.size else float("-inf"))
    order = sorted(range(len(means)), key=lambda c: (-means[c], c))
    groups: list[list[int]] = []
    for chain in order:
        if groups and means[groups[-1][-1]] - means[chain] <= gap:
            groups[-1].append(chain)
        else:
            groups.append([chain])
    best = max(means, default=float("-inf"))
    main = [c for c in range(len(means)) if means[c] == best or best - means[c] <= gap]
    minor = [c for c in range(len(means)) if c not in main]
    if minor:
        logger.info(f"Chains {minor} flagged as minor-mode (gap {gap})")
    return ModeReport(
        terminal_means=means,
        groups=[sorted(group) for group in groups],
        main_group=main,
        minor_chains=minor,
        gap=gap,
    )


def run_multichain(data: Dataset, config: RunConfig, jobs: int = 1) -> tuple[list[DrawArchive], ModeReport]:
    """Run every chain of the config (in parallel when jobs > 1) and screen for minor modes."""
    chain_jobs = [(data, config, seed, stream_id) for seed, stream_id in config.chain_seeds()]
    if jobs > 1 and len(chain_jobs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            archives = list(executor.map(_run_chain_job, chain_jobs))
    else:
        archives = [_run_chain_job(job) for job in chain_jobs]
    report = screen_modes(archives, config.minor_mode_gap, config.minor_mode_window)
    return archives, report
