"""Label-switching resolution, clustering summaries and variable selection."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats
from scipy.optimize import linear_sum_assignment

from bgcwm.core.config import get_settings
from bgcwm.core.exceptions import EmptyArchiveError, InsufficientDrawsError
from bgcwm.models.schemas import ClusterEstimate, ModeReport, RegionBounds, Summary
from bgcwm.models.state import DrawArchive, DrawRecord

logger = logging.getLogger(__name__)


@dataclass
class RelabeledDraws:
    """Draws aligned to a pivot allocation; permutation[old] = new for each draw."""

    pivot: np.ndarray
    k_plus: int
    permutations: list[np.ndarray]
    aligned: list[DrawRecord]


@dataclass
class VariableSelectionResult:
    level: float
    lower: np.ndarray  # K+ x p
    upper: np.ndarray
    xi_k: np.ndarray
    xi: np.ndarray
    selected_by_cluster: dict[int, list[int]] = field(default_factory=dict)
    selected: list[int] = field(default_factory=list)


@dataclass
class PostprocessResult:
    summary: Summary
    relabeled: RelabeledDraws
    selection: VariableSelectionResult
    clustering: np.ndarray
    confusion: pd.DataFrame | None = None


# --- relabeling ----------------------------------------------------------------------


def contingency(a: np.ndarray, b: np.ndarray, rows: int, cols: int) -> np.ndarray:
    table = np.zeros((rows, cols), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def misclassification_cost(z: np.ndarray, pivot: np.ndarray, permutation: np.ndarray) -> int:
    return int(np.count_nonzero(permutation[z] != pivot))


def ecr_relabel(draws: list[DrawRecord], k_plus: int) -> RelabeledDraws:
    """Align every draw with K+ = k_plus to the allocation of the highest log-posterior draw."""
    subset = [draw for draw in draws if draw.k_plus == k_plus]
    if not subset:
        raise EmptyArchiveError(f"No retained draws with K+={k_plus}")
    pivot_draw = max(subset, key=lambda draw: draw.logpost)
    pivot_order = np.flatnonzero(np.bincount(pivot_draw.state.z, minlength=pivot_draw.K) > 0)
    pivot_map = np.empty(pivot_draw.K, dtype=int)
    pivot_map[pivot_order] = np.arange(k_plus)
    pivot = pivot_map[pivot_draw.state.z]

    permutations, aligned = [], []
    for draw in subset:
        state = draw.state
        occupied = np.flatnonzero(state.counts() > 0)
        compact = np.empty(state.K, dtype=int)
        compact[occupied] = np.arange(k_plus)
        table = contingency(compact[state.z], pivot, k_plus, k_plus)
        rows, cols = linear_sum_assignment(-table)
        permutation = np.empty(state.K, dtype=int)
        permutation[occupied[rows]] = cols
        empty = np.setdiff1d(np.arange(state.K), occupied)
        permutation[empty] = np.arange(k_plus, state.K)
        order = np.argsort(permutation)
        permutations.append(permutation)
        aligned.append(DrawRecord(draw.iteration, draw.k_plus, draw.loglik, draw.logpost, state.permuted(order)))
    logger.info(f"ECR aligned {len(aligned)} draws with K+={k_plus}")
    return RelabeledDraws(pivot=pivot, k_plus=k_plus, permutations=permutations, aligned=aligned)


def single_best_clustering(relabeled: RelabeledDraws) -> np.ndarray:
    """Per-observation modal aligned label (0-based); ties go to the smaller label."""
    allocations = np.vstack([draw.state.z for draw in relabeled.aligned])
    n_labels = max(relabeled.k_plus, int(allocations.max()) + 1)
    votes = np.zeros((allocations.shape[1], n_labels), dtype=np.int64)
    for row in allocations:
        votes[np.arange(row.shape[0]), row] += 1
    return np.argmax(votes, axis=1)


# --- agreement -----------------------------------------------------------------------


def _comb2(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.sum(values * (values - 1.0) / 2.0))


def ari_from_contingency(table) -> float:
    table = np.asarray(table, dtype=float)
    n = table.sum()
    index = _comb2(table)
    rows = _comb2(table.sum(axis=1))
    cols = _comb2(table.sum(axis=0))
    expected = rows * cols / (n * (n - 1.0) / 2.0) if n > 1 else 0.0
    maximum = 0.5 * (rows + cols)
    if maximum == expected:
        return 1.0
    return (index - expected) / (maximum - expected)


def adjusted_rand_index(a, b) -> float:
    _, a_codes = np.unique(np.asarray(a), return_inverse=True)
    _, b_codes = np.unique(np.asarray(b), return_inverse=True)
    return ari_from_contingency(contingency(a_codes, b_codes, a_codes.max() + 1, b_codes.max() + 1))


def confusion_matrix(truth, estimate) -> pd.DataFrame:
    """Counts with rows = truth and columns = estimated cluster."""
    return pd.crosstab(pd.Series(np.asarray(truth), name="truth"), pd.Series(np.asarray(estimate), name="cluster"))


def k_plus_posterior(archives: list[DrawArchive]) -> dict[int, float]:
    values = np.concatenate([archive.k_plus_values() for archive in archives]) if archives else np.zeros(0)
    if values.size == 0:
        raise EmptyArchiveError("No retained draws in the supplied archives")
    labels, counts = np.unique(values, return_counts=True)
    return {int(k): float(c) / values.size for k, c in zip(labels, counts)}


# --- credible regions and selection --------------------------------------------------


def simultaneous_credible_region(draws: np.ndarray, level: float = 0.9) -> tuple[np.ndarray, np.ndarray]:
    """Rank-based simultaneous band jointly holding at least ceil(level * M) complete draws.

    A draw lies inside the band [t-th smallest, t-th largest] exactly when every
    coordinate rank r satisfies t <= r <= M + 1 - t, so the depth of a draw is
    min over coordinates of min(r, M + 1 - r), and the narrowest valid t is the
    ceil(level * M)-th largest depth.
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[:, None]
    M = draws.shape[0]
    alpha = 1.0 - level
    if not 0 < alpha < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if M < 10.0 / alpha - 1e-9:
        raise InsufficientDrawsError(f"{M} draws are too few for level {level}; need at least {math.ceil(10 / alpha)}")
    ranks = np.column_stack([stats.rankdata(draws[:, j], method="ordinal") for j in range(draws.shape[1])])
    depth = np.minimum(ranks, M + 1 - ranks).min(axis=1)
    need = math.ceil(level * M - 1e-9)
    t = int(np.sort(depth)[::-1][need - 1])
    ordered = np.sort(draws, axis=0)
    return ordered[t - 1], ordered[M - t]


def beta_draws(relabeled: RelabeledDraws, cluster: int) -> np.ndarray:
    return np.vstack([draw.state.components[cluster].beta for draw in relabeled.aligned])


def select_variables(relabeled: RelabeledDraws, level: float = 0.9) -> VariableSelectionResult:
    lowers, uppers = [], []
    for k in range(relabeled.k_plus):
        lower, upper = simultaneous_credible_region(beta_draws(relabeled, k), level)
        lowers.append(lower)
        uppers.append(upper)
    lower, upper = np.vstack(lowers), np.vstack(uppers)
    xi_k = ((lower > 0) | (upper < 0)).astype(int)
    xi = 1 - np.prod(1 - xi_k, axis=0)
    return VariableSelectionResult(
        level=level,
        lower=lower,
        upper=upper,
        xi_k=xi_k,
        xi=xi.astype(int),
        selected_by_cluster={k + 1: (np.flatnonzero(xi_k[k]) + 1).tolist() for k in range(relabeled.k_plus)},
        selected=(np.flatnonzero(xi) + 1).tolist(),
    )


def posterior_means(relabeled: RelabeledDraws) -> list[ClusterEstimate]:
    estimates = []
    for k in range(relabeled.k_plus):
        comps = [draw.state.components[k] for draw in relabeled.aligned]
        estimates.append(
            ClusterEstimate(
                cluster=k + 1,
                weight=float(np.mean([draw.state.pi[k] for draw in relabeled.aligned])),
                alpha=float(np.mean([c.alpha for c in comps])),
                beta=np.mean([c.beta for c in comps], axis=0).tolist(),
                sigma2=float(np.mean([c.sigma2 for c in comps])),
                mu=np.mean([c.mu for c in comps], axis=0).tolist(),
            )
        )
    return estimates


def kde_beta(relabeled: RelabeledDraws, selection: VariableSelectionResult, include_all: bool = False) -> pd.DataFrame:
    """Kernel density of aligned beta draws on a grid, per (cluster, variable)."""
    grid_points = get_settings().kde_grid_points
    frames = []
    for k in range(relabeled.k_plus):
        draws = beta_draws(relabeled, k)
        for j in range(draws.shape[1]):
            if not (include_all or selection.xi[j]):
                continue
            values = draws[:, j]
            if np.ptp(values) == 0:
                logger.debug(f"Skipping KDE for cluster {k + 1}, variable {j + 1}: constant draws")
                continue
            spread = np.ptp(values)
            grid = np.linspace(values.min() - 0.1 * spread, values.max() + 0.1 * spread, grid_points)
            density = stats.gaussian_kde(values)(grid)
            frames.append(pd.DataFrame({"cluster": k + 1, "variable": j + 1, "grid": grid, "density": density}))
    if not frames:
        return pd.DataFrame(columns=["cluster", "variable", "grid", "density"])
    return pd.concat(frames, ignore_index=True)


def regions_frame(selection: VariableSelectionResult) -> pd.DataFrame:
    K, p = selection.lower.shape
    return pd.DataFrame(
        {
            "cluster": np.repeat(np.arange(1, K + 1), p),
            "variable": np.tile(np.arange(1, p + 1), K),
            "lower": selection.lower.ravel(),
            "upper": selection.upper.ravel(),
            "significant": selection.xi_k.ravel(),
        }
    )


# --- end to end ----------------------------------------------------------------------


def summarize(
    archives: list[DrawArchive],
    level: float = 0.9,
    truth: np.ndarray | None = None,
    mode_report: ModeReport | None = None,
    all_chains: bool = False,
) -> PostprocessResult:
    """K+ posterior, ECR at the modal K+, selection, posterior means and agreement with truth."""
    if not archives:
        raise EmptyArchiveError("No archives supplied")
    chains = list(range(len(archives)))
    if mode_report is not None and not all_chains:
        chains = [c for c in mode_report.main_group if c < len(archives)]
        logger.info(f"Using main-mode chains {chains}")
    used = [archives[c] for c in chains]
    posterior = k_plus_posterior(used)
    k_hat = max(posterior, key=lambda k: (posterior[k], -k))

    draws = [draw for archive in used for draw in archive.draws]
    relabeled = ecr_relabel(draws, k_hat)
    clustering = single_best_clustering(relabeled)
    selection = select_variables(relabeled, level)

    approximations = sorted({item for archive in used for item in archive.metadata.get("approximations", [])})
    regions = [
        RegionBounds(cluster=int(row.cluster), variable=int(row.variable), lower=float(row.lower),
                     upper=float(row.upper), significant=bool(row.significant))
        for row in regions_frame(selection).itertuples(index=False)
    ]
    ari = None
    confusion = None
    if truth is not None:
        ari = adjusted_rand_index(truth, clustering)
        confusion = confusion_matrix(truth, clustering + 1)

    summary = Summary(
        k_plus_posterior=posterior,
        k_plus_posterior_all_chains=k_plus_posterior(archives),
        k_plus_hat=k_hat,
        chains_used=chains,
        n_draws_used=len(relabeled.aligned),
        level=level,
        xi=selection.xi.tolist(),
        xi_by_cluster=selection.xi_k.tolist(),
        selected_variables=selection.selected,
        selected_by_cluster=selection.selected_by_cluster,
        regions=regions,
        posterior_means=posterior_means(relabeled),
        clustering=(clustering + 1).tolist(),
        ari=ari,
        approximations=approximations,
    )
    return PostprocessResult(summary, relabeled, selection, clustering, confusion)
