"""Tests for fit scoring against simulation ground truth."""

import numpy as np
import pytest

from bgcwm.core.exceptions import DataFormatError
from bgcwm.models.schemas import ClusterEstimate, Summary
from bgcwm.services import scoring


def _summary(clustering, xi, posterior_means=(), k_plus_hat=2) -> Summary:
    return Summary(
        k_plus_posterior={k_plus_hat: 1.0},
        k_plus_posterior_all_chains={k_plus_hat: 1.0},
        k_plus_hat=k_plus_hat,
        n_draws_used=100,
        level=0.9,
        xi=xi,
        xi_by_cluster=[xi] * k_plus_hat,
        selected_variables=[j + 1 for j, v in enumerate(xi) if v],
        posterior_means=list(posterior_means),
        clustering=clustering,
    )


@pytest.fixture
def truth():
    return {
        "K": 2,
        "labels": [1, 1, 1, 2, 2],
        "xi": [1, 0, 1],
        "beta": [[2.0, 0.0, 1.0], [0.0, 0.0, -3.0]],
    }


class TestHamming:
    def test_counts_disagreements(self):
        assert scoring.hamming_distance([1, 0, 1, 0], [1, 1, 0, 0]) == 2

    def test_length_mismatch(self):
        with pytest.raises(DataFormatError):
            scoring.hamming_distance([1, 0], [1, 0, 1])


class TestScoreFit:
    """Accuracy metrics of a summary against ground truth."""

    def test_perfect_fit_with_swapped_labels(self, truth):
        estimates = [
            ClusterEstimate(cluster=1, weight=0.4, alpha=0.0, beta=[0.0, 0.0, -3.0], sigma2=1.0, mu=[0.0] * 3),
            ClusterEstimate(cluster=2, weight=0.6, alpha=0.0, beta=[2.0, 0.0, 1.0], sigma2=1.0, mu=[0.0] * 3),
        ]
        metrics = scoring.score_fit(truth, _summary([2, 2, 2, 1, 1], [1, 0, 1], estimates))
        assert metrics.abs_error == 0
        assert metrics.ari == pytest.approx(1.0)
        assert metrics.hamming == 0
        assert metrics.beta_mae == pytest.approx(0.0)
        assert metrics.beta_mae_by_cluster == pytest.approx([0.0, 0.0])

    def test_wrong_cluster_count_skips_beta_error(self, truth):
        metrics = scoring.score_fit(truth, _summary([1, 1, 1, 1, 1], [1, 1, 1], k_plus_hat=1))
        assert metrics.abs_error == 1
        assert metrics.hamming == 1
        assert metrics.beta_mae is None

    def test_label_count_mismatch(self, truth):
        with pytest.raises(DataFormatError):
            scoring.score_fit(truth, _summary([1, 2], [1, 0, 1]))

    def test_match_clusters(self):
        mapping = scoring.match_clusters(np.array([1, 1, 2, 2, 3]), np.array([3, 3, 1, 1, 2]), 3)
        np.testing.assert_array_equal(mapping, [1, 2, 0])
