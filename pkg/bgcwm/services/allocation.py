"""Updates of z, pi, K and gamma, plus the telescoping bookkeeping of empty components."""

import logging
import math

import numpy as np
from scipy import special

from bgcwm.core.exceptions import ComponentDropError
from bgcwm.models.schemas import BnbParams, Hyperparams, InferenceMode
from bgcwm.models.state import ComponentParams, ComponentSuffStats, Dataset, MixtureState
from bgcwm.services import glasso_gaussian, lasso_regression, rngdist
from bgcwm.services.likelihood import dirichlet_concentration, weighted_log_density
from bgcwm.services.rngdist import RngStream

logger = logging.getLogger(__name__)


def allocation_probs(data: Dataset, state: MixtureState, weighted: np.ndarray | None = None) -> np.ndarray:
    """n x K matrix p_ik proportional to pi_k f_k(y_i, x_i), normalized per row in log space."""
    if weighted is None:
        weighted = weighted_log_density(data, state)
    return np.exp(weighted - special.logsumexp(weighted, axis=1, keepdims=True))


def draw_allocations(probs: np.ndarray, rng: RngStream) -> np.ndarray:
    return rngdist.sample_multinomial_index(probs, rng)


def relabel_nonempty_first(state: MixtureState) -> tuple[MixtureState, int]:
    """Move non-empty components to the front, each group keeping its original order."""
    counts = state.counts()
    order = np.concatenate([np.flatnonzero(counts > 0), np.flatnonzero(counts == 0)])
    k_plus = int(np.count_nonzero(counts))
    if np.array_equal(order, np.arange(state.K)):
        return state, k_plus
    return state.permuted(order), k_plus


def pi_conditional(state: MixtureState, mode: InferenceMode, hyper: Hyperparams) -> np.ndarray:
    """Dirichlet concentration gamma_k + n_k of the weight update."""
    return dirichlet_concentration(mode, hyper, state.K, state.gamma) + state.counts()


def k_conditional_log_weights(
    counts: np.ndarray, gamma: float, bnb: BnbParams, k_max: int
) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized log mass of K over max(1, K+) .. k_max given the cluster sizes."""
    occupied = np.asarray(counts)[np.asarray(counts) > 0].astype(float)
    k_plus = occupied.size
    n = float(occupied.sum())
    support = np.arange(max(1, k_plus), k_max + 1)
    if support.size == 0:
        return support, np.zeros(0)
    ks = support.astype(float)
    gamma_k = gamma / ks
    log_mass = (
        rngdist.bnb_log_pmf(support, bnb)
        + special.gammaln(ks + 1.0)
        - special.gammaln(ks - k_plus + 1.0)
        + special.gammaln(gamma)
        - special.gammaln(n + gamma)
        - k_plus * special.gammaln(gamma_k)
        + special.gammaln(occupied[None, :] + gamma_k[:, None]).sum(axis=1)
    )
    return support, log_mass


def k_conditional_draw(
    counts: np.ndarray,
    gamma: float,
    bnb: BnbParams,
    rng: RngStream,
    cap: int = 200,
    tail_cutoff: float = 30.0,
) -> tuple[int, bool]:
    """Draw K from its full conditional on a truncated support.

    The support runs from K+ until the log mass falls tail_cutoff units below the
    running maximum, or to the cap.

    Returns:
        The drawn K and whether the cap was reached before the cutoff.
    """
    support, log_mass = k_conditional_log_weights(counts, gamma, bnb, cap)
    if support.size == 0:
        return int(max(1, np.count_nonzero(counts))), True
    below = log_mass < np.maximum.accumulate(log_mass) - tail_cutoff
    cap_hit = not bool(np.any(below))
    if not cap_hit:
        stop = int(np.argmax(below))
        support, log_mass = support[:stop], log_mass[:stop]
    probs = np.exp(log_mass - special.logsumexp(log_mass))
    index = int(rngdist.sample_multinomial_index(probs[None, :], rng)[0])
    return int(support[index]), cap_hit


def gamma_log_target(
    gamma: float, counts: np.ndarray, K: int, nu_l: float, nu_r: float, variant: str = "gamma"
) -> float:
    """log of the gamma full conditional (up to a constant) under the F hyper-prior."""
    occupied = np.asarray(counts)[np.asarray(counts) > 0].astype(float)
    n = float(occupied.sum())
    gamma_k = gamma / K
    if variant == "literal":
        per_cluster = np.log(occupied + gamma_k) - special.gammaln(1.0 + gamma_k)
    else:
        per_cluster = special.gammaln(occupied + gamma_k) - special.gammaln(1.0 + gamma_k)
    return (
        rngdist.snedecor_f_log_pdf(gamma, nu_l, nu_r)
        + occupied.size * math.log(gamma)
        + float(special.gammaln(gamma) - special.gammaln(n + gamma))
        + math.fsum(per_cluster)
    )


def gamma_log_ratio(
    current: float, proposed: float, counts: np.ndarray, K: int, nu_l: float, nu_r: float, variant: str = "gamma"
) -> float:
    """Log acceptance ratio of a log-scale random-walk move, Jacobian included."""
    if proposed == current:
        return 0.0
    return (
        gamma_log_target(proposed, counts, K, nu_l, nu_r, variant)
        - gamma_log_target(current, counts, K, nu_l, nu_r, variant)
        + math.log(proposed)
        - math.log(current)
    )


def gamma_mh_update(
    gamma: float,
    counts: np.ndarray,
    K: int,
    hyper: Hyperparams,
    proposal_scale: float,
    rng: RngStream,
    variant: str = "gamma",
) -> tuple[float, bool]:
    if proposal_scale == 0:
        return gamma, True
    proposed = gamma * math.exp(proposal_scale * float(rng.generator.standard_normal()))
    log_ratio = gamma_log_ratio(gamma, proposed, counts, K, hyper.nu_l, hyper.nu_r, variant)
    if math.log(rng.generator.uniform()) < log_ratio:
        return proposed, True
    return gamma, False


def fresh_component(p: int, hyper: Hyperparams, m0: np.ndarray) -> ComponentParams:
    return ComponentParams.neutral(p, m0, hyper.a, hyper.b, hyper.r, hyper.s)


def warm_empty_component(
    comp: ComponentParams, hyper: Hyperparams, m0: np.ndarray, sweeps: int, rng: RngStream
) -> None:
    """Prior-Gibbs sweeps on a component with no allocated observations."""
    empty = ComponentSuffStats.empty(comp.p)
    for _ in range(sweeps):
        lasso_regression.update_regression_block(comp, empty, hyper, rng)
        glasso_gaussian.update_covariate_block(comp, empty, hyper, m0, rng)


def spawn_empty_components(
    state: MixtureState,
    K_new: int,
    hyper: Hyperparams,
    m0: np.ndarray,
    rng: RngStream,
    warm_sweeps: int = 10,
) -> MixtureState:
    """Reduce the state to its K+ occupied components, then append K_new - K+ fresh ones.

    Raises:
        ComponentDropError: K_new below K+, or an occupied component sits after an empty one.
    """
    counts = state.counts()
    k_plus = int(np.count_nonzero(counts))
    if K_new < k_plus or np.any(counts[:k_plus] == 0):
        raise ComponentDropError(
            f"Cannot resize to K={K_new}: occupied components would be dropped (K+={k_plus})"
        )
    p = state.components[0].p
    components = state.components[:k_plus]
    added = []
    for _ in range(K_new - k_plus):
        comp = fresh_component(p, hyper, m0)
        warm_empty_component(comp, hyper, m0, warm_sweeps, rng)
        added.append(comp)
    pi = np.concatenate([state.pi[:k_plus], np.full(len(added), rngdist.SIMPLEX_FLOOR)])
    return MixtureState(
        pi=pi / pi.sum(),
        z=state.z,
        components=components + added,
        gamma=state.gamma,
        flags=state.flags,
    )
