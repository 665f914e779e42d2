"""Longer sampler runs on simulated data; run with `pytest -m slow`."""

import numpy as np
import pytest
from scipy import stats

from bgcwm.models.schemas import Hyperparams, InferenceMode, RunConfig, SimSpec
from bgcwm.models.state import ComponentParams, ComponentSuffStats
from bgcwm.services import glasso_gaussian, lasso_regression
from bgcwm.services.postprocess import adjusted_rand_index, summarize
from bgcwm.services.rngdist import RngStream
from bgcwm.services.runner import run_multichain
from bgcwm.services.scoring import hamming_distance
from bgcwm.services.simulate import gen_dataset


@pytest.mark.slow
class TestRecovery:
    """Telescoping and overfitting fits recover well separated simulated clusters."""

    @pytest.fixture(scope="class")
    def simulated(self):
        return gen_dataset(SimSpec(K=2, p=3, n=300, scenario=3, p0=0.3, seed=1))

    @pytest.mark.parametrize("mode", [InferenceMode.TELESCOPING, InferenceMode.OVERFITTING])
    def test_recovers_cluster_count_and_partition(self, simulated, mode):
        data, truth = simulated
        config = RunConfig(mode=mode, k_max=10, iterations=3000, burn_in=1000, thin=10, chains=2, init_restarts=5)
        archives, report = run_multichain(data, config, jobs=2)
        result = summarize(archives, level=0.9, mode_report=report)
        assert result.summary.k_plus_hat == 2
        assert adjusted_rand_index(truth.labels, result.clustering) > 0.8


def _batch_mean_se(values: np.ndarray, batches: int = 50) -> float:
    means = np.array([chunk.mean() for chunk in np.array_split(values, batches)])
    return float(means.std(ddof=1) / np.sqrt(batches))


@pytest.mark.slow
class TestVariableSelection:
    """Simultaneous credible regions recover the relevant covariates at p=18."""

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_hamming_distance_of_selection(self, seed):
        data, truth = gen_dataset(SimSpec(K=2, p=18, n=500, scenario=1, p0=2 / 3, seed=seed))
        config = RunConfig(
            mode=InferenceMode.TELESCOPING, iterations=11000, burn_in=1000, thin=10, seed=seed, init_restarts=10
        )
        archives, report = run_multichain(data, config, jobs=1)
        result = summarize(archives, level=0.9, mode_report=report)
        assert hamming_distance(truth.xi, result.summary.xi) <= 2


@pytest.mark.slow
class TestPriorSampling:
    """Gibbs sweeps over an empty component sample from the prior."""

    def test_lasso_scale_is_half_cauchy(self):
        rng = RngStream(21)
        hyper = Hyperparams(a=1.0, b=1.0)
        comp = ComponentParams.neutral(2, np.zeros(2), hyper.a, hyper.b, hyper.r, hyper.s)
        empty = ComponentSuffStats.empty(2)
        for _ in range(1000):
            lasso_regression.update_regression_block(comp, empty, hyper, rng)
        draws = np.empty(100_000)
        for sweep in range(draws.size):
            lasso_regression.update_regression_block(comp, empty, hyper, rng)
            draws[sweep] = comp.lam
        assert stats.kstest(draws, stats.halfcauchy.cdf).statistic < 0.03

    def test_precision_is_positive_definite_with_symmetric_off_diagonals(self):
        rng = RngStream(22)
        hyper = Hyperparams()
        p = 9
        comp = ComponentParams.neutral(p, np.zeros(p), hyper.a, hyper.b, hyper.r, hyper.s)
        empty = ComponentSuffStats.empty(p)
        rows, cols = np.triu_indices(p, k=1)
        kept = 19_000
        first_pair, pair_average = np.empty(kept), np.empty(kept)
        for sweep in range(20_000):
            glasso_gaussian.update_covariate_block(comp, empty, hyper, np.zeros(p), rng, check_pd=True)
            assert np.linalg.eigvalsh(comp.omega).min() > 0
            if sweep >= 1000:
                first_pair[sweep - 1000] = comp.omega[0, 1]
                pair_average[sweep - 1000] = np.mean(comp.omega[rows, cols])
        for values in (first_pair, pair_average):
            assert abs(values.mean()) < 3 * _batch_mean_se(values)
