"""Tests for dataset CSVs and chain archive persistence."""

import json

import numpy as np
import pandas as pd
import pytest

from bgcwm.core import storage
from bgcwm.core.exceptions import DataFormatError, EmptyArchiveError
from bgcwm.models.schemas import ModeReport
from bgcwm.models.state import TraceRow


@pytest.fixture
def archive(state_factory, archive_factory):
    z = np.array([0, 0, 1, 2, 2])
    states = []
    for shift in range(3):
        state = state_factory(z, K=4, p=2, gamma=1.0 + shift)
        state.components[1].omega = np.array([[2.0, 0.25], [0.25, 1.0]])
        state.components[2].phi = np.array([0.5 + shift])
        states.append(state)
    result = archive_factory(states, n=5, p=2, metadata={"seed": 1, "stream_id": 0})
    result.trace = [
        TraceRow(iteration=d.iteration, K=d.K, k_plus=d.k_plus, gamma=d.state.gamma,
                 loglik=d.loglik, logpost=d.logpost, retained=True)
        for d in result.draws
    ]
    return result


class TestDatasetFiles:
    def test_written_dataset_reads_back_exactly(self, two_cluster_data, tmp_path):
        path = tmp_path / "data.csv"
        storage.write_dataset(two_cluster_data, path)
        loaded = storage.load_dataset(path)
        np.testing.assert_array_equal(loaded.y, two_cluster_data.y)
        np.testing.assert_array_equal(loaded.X, two_cluster_data.X)
        np.testing.assert_array_equal(loaded.labels, two_cluster_data.labels)

    def test_missing_response_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        pd.DataFrame({"x1": [1.0, 2.0]}).to_csv(path, index=False)
        with pytest.raises(DataFormatError) as exc_info:
            storage.load_dataset(path)
        assert exc_info.value.exit_code == 2

    def test_non_numeric_covariate(self, tmp_path):
        path = tmp_path / "bad.csv"
        pd.DataFrame({"y": [1.0, 2.0], "x1": ["a", "b"]}).to_csv(path, index=False)
        with pytest.raises(DataFormatError):
            storage.load_dataset(path)

    def test_missing_values(self, tmp_path):
        path = tmp_path / "bad.csv"
        pd.DataFrame({"y": [1.0, None], "x1": [0.5, 0.2]}).to_csv(path, index=False)
        with pytest.raises(DataFormatError):
            storage.load_dataset(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFormatError):
            storage.load_dataset(tmp_path / "absent.csv")

    def test_digest_tracks_content(self, two_cluster_data):
        first = storage.dataset_digest(two_cluster_data)
        assert first == storage.dataset_digest(two_cluster_data)
        assert len(first) == 64


class TestArchives:
    """draws.bin, trace.csv, draws.csv and manifest.json."""

    def test_archive_restores_draws(self, archive, tmp_path):
        storage.write_archive(archive, tmp_path / "chain_01")
        restored = storage.read_archive(tmp_path / "chain_01")
        assert len(restored) == len(archive)
        for original, loaded in zip(archive.draws, restored.draws):
            assert loaded.iteration == original.iteration
            assert loaded.k_plus == original.k_plus == 3
            assert loaded.state.gamma == original.state.gamma
            np.testing.assert_array_equal(loaded.state.z, original.state.z)
            np.testing.assert_array_equal(loaded.state.pi, original.state.pi)
            for a, b in zip(original.state.components, loaded.state.components):
                np.testing.assert_array_equal(a.omega, b.omega)
                np.testing.assert_array_equal(a.phi, b.phi)
                assert (a.alpha, a.sigma2, a.lam, a.delta, a.psi) == (b.alpha, b.sigma2, b.lam, b.delta, b.psi)
        assert [row.gamma for row in restored.trace] == [1.0, 2.0, 3.0]

    def test_manifest_describes_record_layout(self, archive, tmp_path):
        storage.write_archive(archive, tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        layout = manifest["draws_bin"]
        assert layout["component_block_length"] == 15
        assert layout["records"] == 3
        record_size = 6 + 4 + 5 + 4 * 15
        assert layout["record_offsets"] == [0, record_size, 2 * record_size]
        assert np.fromfile(tmp_path / "draws.bin", dtype="<f8").size == 3 * record_size
        assert manifest["seed"] == 1

    def test_fixed_k_gamma_round_trips_as_missing(self, state_factory, archive_factory, tmp_path):
        result = archive_factory([state_factory([0, 1, 1])], n=3, p=2)
        result.trace = [TraceRow(1, 2, 2, None, -1.0, -2.0, True)]
        storage.write_archive(result, tmp_path)
        restored = storage.read_archive(tmp_path)
        assert restored.draws[0].state.gamma is None
        assert restored.trace[0].gamma is None

    def test_draws_csv_skipped_above_cell_limit(self, archive, tmp_path, monkeypatch):
        monkeypatch.setenv("BGCWM_DRAWS_CSV_MAX_CELLS", "0")
        storage.get_settings.cache_clear()
        storage.write_archive(archive, tmp_path)
        assert not (tmp_path / "draws.csv").exists()
        assert json.loads((tmp_path / "manifest.json").read_text())["draws_csv"] is False

    def test_draws_csv_has_one_row_per_component(self, archive, tmp_path):
        storage.write_archive(archive, tmp_path)
        frame = pd.read_csv(tmp_path / "draws.csv")
        assert len(frame) == 3 * 4
        assert {"beta_1", "beta_2", "mu_1", "mu_2", "pi"} <= set(frame.columns)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(EmptyArchiveError):
            storage.read_archive(tmp_path)

    def test_discover_chain_directories(self, archive, tmp_path):
        storage.write_archive(archive, tmp_path / "chain_02")
        storage.write_archive(archive, tmp_path / "chain_01")
        assert [path.name for path in storage.discover_archives(tmp_path)] == ["chain_01", "chain_02"]
        assert storage.discover_archives(tmp_path / "chain_01") == [tmp_path / "chain_01"]
        with pytest.raises(EmptyArchiveError):
            storage.discover_archives(tmp_path / "nothing")


class TestTruthLabels:
    def test_from_truth_json(self, tmp_path):
        path = tmp_path / "truth.json"
        storage.write_json({"labels": [1, 2, 2]}, path)
        np.testing.assert_array_equal(storage.read_truth_labels(path), [1, 2, 2])

    def test_from_dataset_csv(self, two_cluster_data, tmp_path):
        path = tmp_path / "data.csv"
        storage.write_dataset(two_cluster_data, path)
        np.testing.assert_array_equal(storage.read_truth_labels(path), two_cluster_data.labels)

    def test_csv_without_labels(self, tmp_path):
        path = tmp_path / "data.csv"
        pd.DataFrame({"y": [1.0], "x1": [2.0]}).to_csv(path, index=False)
        with pytest.raises(DataFormatError):
            storage.read_truth_labels(path)


class TestJsonReports:
    """Report files read back through pydantic models."""

    def test_mode_report_reads_back(self, tmp_path):
        report = ModeReport(terminal_means=[-1.0, -90.0], groups=[[0], [1]], main_group=[0], minor_chains=[1], gap=50.0)
        storage.write_json(report.model_dump(), tmp_path / "modes.json")
        assert storage.read_json_model(tmp_path / "modes.json", ModeReport) == report

    @pytest.mark.parametrize("text", ["{broken", "[]", json.dumps({"gap": "wide"})])
    def test_malformed_report_is_a_data_format_error(self, tmp_path, text):
        (tmp_path / "modes.json").write_text(text)
        with pytest.raises(DataFormatError):
            storage.read_json_model(tmp_path / "modes.json", ModeReport)

    def test_missing_report(self, tmp_path):
        with pytest.raises(DataFormatError):
            storage.read_json_object(tmp_path / "absent.json")

    def test_corrupt_manifest(self, archive, tmp_path):
        directory = storage.write_archive(archive, tmp_path / "chain_01")
        (directory / "manifest.json").write_text("{")
        with pytest.raises(DataFormatError):
            storage.read_archive(directory)
