"""Accuracy of a post-processed fit against simulation ground truth."""

import logging

import numpy as np
from scipy.optimize import linear_sum_assignment

from bgcwm.core.exceptions import DataFormatError
from bgcwm.models.schemas import ScoreMetrics, Summary
from bgcwm.services.postprocess import adjusted_rand_index, contingency

logger = logging.getLogger(__name__)

TRUTH_KEYS = {"K", "labels", "xi", "beta"}


def hamming_distance(xi_true, xi_hat) -> int:
    xi_true, xi_hat = np.asarray(xi_true, dtype=int), np.asarray(xi_hat, dtype=int)
    if xi_true.shape != xi_hat.shape:
        raise DataFormatError(f"Selection vectors differ in length: {xi_true.size} vs {xi_hat.size}")
    return int(np.sum(np.abs(xi_hat - xi_true)))


def match_clusters(truth_labels: np.ndarray, estimate_labels: np.ndarray, K: int) -> np.ndarray:
    """For each estimated cluster (0-based), the truth cluster it overlaps most under a bijection."""
    table = contingency(estimate_labels - 1, truth_labels - 1, K, K)
    rows, cols = linear_sum_assignment(-table)
    mapping = np.empty(K, dtype=int)
    mapping[rows] = cols
    return mapping


def score_fit(truth: dict, summary: Summary) -> ScoreMetrics:
    """MAE contribution |K - K_hat|, ARI, selection Hamming distance and, when K_hat = K, beta error."""
    missing = sorted(TRUTH_KEYS - truth.keys())
    if missing:
        raise DataFormatError(f"Ground truth is missing {missing}")
    truth_labels = np.asarray(truth["labels"], dtype=int)
    estimate = np.asarray(summary.clustering, dtype=int)
    if truth_labels.shape != estimate.shape:
        raise DataFormatError(f"Truth has {truth_labels.size} labels, clustering has {estimate.size}")
    k_true, k_hat = int(truth["K"]), int(summary.k_plus_hat)

    beta_mae = None
    by_cluster = None
    if k_hat == k_true and summary.posterior_means:
        mapping = match_clusters(truth_labels, estimate, k_true)
        beta_true = np.asarray(truth["beta"], dtype=float)
        by_cluster = [
            float(np.sum(np.abs(np.asarray(est.beta) - beta_true[mapping[est.cluster - 1]])))
            for est in summary.posterior_means
        ]
        beta_mae = float(sum(by_cluster))

    metrics = ScoreMetrics(
        k_true=k_true,
        k_hat=k_hat,
        abs_error=abs(k_true - k_hat),
        ari=adjusted_rand_index(truth_labels, estimate),
        hamming=hamming_distance(truth["xi"], summary.xi),
        xi_true=list(truth["xi"]),
        xi_hat=list(summary.xi),
        beta_mae=beta_mae,
        beta_mae_by_cluster=by_cluster,
    )
    logger.info(f"Score: |K - K_hat|={metrics.abs_error}, ARI={metrics.ari:.3f}, Hamming={metrics.hamming}")
    return metrics
