"""File persistence: dataset CSVs and chain archives (manifest.json, trace.csv, draws.bin)."""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from bgcwm.core.config import get_settings
from bgcwm.core.exceptions import DataFormatError, EmptyArchiveError
from bgcwm.models.state import (
    ComponentParams,
    Dataset,
    DrawArchive,
    DrawRecord,
    MixtureState,
    TraceRow,
    upper_pairs,
)

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

RECORD_HEADER = ["iteration", "K", "K_plus", "gamma", "loglik", "logpost"]
TRACE_COLUMNS = RECORD_HEADER + ["retained"]
DRAWS_DTYPE = "<f8"


# --- datasets ------------------------------------------------------------------------


def load_dataset(path: str | Path) -> Dataset:
    """Read a CSV with a `y` column, optional `label` column, and covariates in file order."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"Data file not found: {path}")
    frame = pd.read_csv(path)
    if "y" not in frame.columns:
        raise DataFormatError(f"{path} has no 'y' column")
    labels = frame["label"].to_numpy() if "label" in frame.columns else None
    covariates = frame.drop(columns=[c for c in ("y", "label") if c in frame.columns])
    if frame.isna().any().any():
        raise DataFormatError(f"{path} contains missing values")
    non_numeric = [c for c in covariates.columns if not pd.api.types.is_numeric_dtype(covariates[c])]
    if non_numeric:
        raise DataFormatError(f"Non-numeric covariate columns: {non_numeric}")
    data = Dataset(y=frame["y"].to_numpy(dtype=float), X=covariates.to_numpy(dtype=float), labels=labels)
    logger.info(f"Loaded dataset {path}: n={data.n}, p={data.p}")
    return data


def write_dataset(data: Dataset, path: str | Path) -> None:
    settings = get_settings()
    frame = pd.DataFrame(data.X, columns=[f"x{j + 1}" for j in range(data.p)])
    frame.insert(0, "y", data.y)
    if data.labels is not None:
        frame["label"] = data.labels
    frame.to_csv(path, index=False, float_format=settings.float_format)


def dataset_digest(data: Dataset) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(data.y, dtype=DRAWS_DTYPE).tobytes())
    digest.update(np.ascontiguousarray(data.X, dtype=DRAWS_DTYPE).tobytes())
    return digest.hexdigest()


def write_json(payload: Any, path: str | Path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")


def read_json(path: str | Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"File not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path} is not valid JSON: {exc}") from None


def read_json_object(path: str | Path) -> dict:
    payload = read_json(path)
    if not isinstance(payload, dict):
        raise DataFormatError(f"{path} must hold a JSON object")
    return payload


def read_json_model(path: str | Path, model: type[ModelT]) -> ModelT:
    """Parse a JSON report file into `model`; malformed content is a DataFormatError."""
    payload = read_json_object(path)
    try:
        return model.model_validate(payload)
    except ValidationError as exc:
        raise DataFormatError(f"{path} is not a valid {model.__name__}: {exc.errors(include_url=False)}") from None


# --- draw records --------------------------------------------------------------------


def component_block_length(p: int) -> int:
    return 5 + 3 * p + p * p


def component_block_layout(p: int) -> list[list]:
    """(name, length) pairs of one component block inside a draws.bin record."""
    return [
        ["alpha", 1],
        ["beta", p],
        ["sigma2", 1],
        ["tau2", p],
        ["lambda", 1],
        ["delta", 1],
        ["mu", p],
        ["omega_upper_with_diagonal", p * (p + 1) // 2],
        ["phi", p * (p - 1) // 2],
        ["psi", 1],
    ]


def _pack_component(comp: ComponentParams) -> np.ndarray:
    rows, cols = np.triu_indices(comp.p)
    return np.concatenate(
        [
            [comp.alpha],
            comp.beta,
            [comp.sigma2],
            comp.tau2,
            [comp.lam, comp.delta],
            comp.mu,
            comp.omega[rows, cols],
            comp.phi,
            [comp.psi],
        ]
    )


def _unpack_component(block: np.ndarray, p: int) -> ComponentParams:
    offset = 0

    def take(length: int) -> np.ndarray:
        nonlocal offset
        out = block[offset : offset + length]
        offset += length
        return out

    alpha = float(take(1)[0])
    beta = take(p).copy()
    sigma2 = float(take(1)[0])
    tau2 = take(p).copy()
    lam, delta = (float(v) for v in take(2))
    mu = take(p).copy()
    omega = np.zeros((p, p))
    rows, cols = np.triu_indices(p)
    omega[rows, cols] = take(p * (p + 1) // 2)
    omega[cols, rows] = omega[rows, cols]
    phi = take(len(upper_pairs(p)[0])).copy()
    psi = float(take(1)[0])
    return ComponentParams(alpha, beta, sigma2, tau2, lam, delta, mu, omega, phi, psi)


def pack_record(draw: DrawRecord) -> np.ndarray:
    state = draw.state
    gamma = np.nan if state.gamma is None else state.gamma
    header = [draw.iteration, state.K, draw.k_plus, gamma, draw.loglik, draw.logpost]
    parts = [np.array(header, dtype=float), state.pi, state.z.astype(float) + 1.0]
    parts.extend(_pack_component(comp) for comp in state.components)
    return np.concatenate(parts)


def unpack_records(values: np.ndarray, n: int, p: int) -> list[DrawRecord]:
    draws = []
    offset = 0
    block = component_block_length(p)
    while offset < values.size:
        iteration, K, k_plus, gamma, loglik, logpost = values[offset : offset + 6]
        K = int(K)
        offset += 6
        pi = values[offset : offset + K].copy()
        offset += K
        z = values[offset : offset + n].astype(int) - 1
        offset += n
        components = []
        for _ in range(K):
            components.append(_unpack_component(values[offset : offset + block], p))
            offset += block
        state = MixtureState(pi=pi, z=z, components=components, gamma=None if np.isnan(gamma) else float(gamma))
        draws.append(DrawRecord(int(iteration), int(k_plus), float(loglik), float(logpost), state))
    return draws


# --- archives ------------------------------------------------------------------------


def trace_frame(archive: DrawArchive) -> pd.DataFrame:
    frame = pd.DataFrame(
        [
            [row.iteration, row.K, row.k_plus, np.nan if row.gamma is None else row.gamma, row.loglik, row.logpost, int(row.retained)]
            for row in archive.trace
        ],
        columns=TRACE_COLUMNS,
    )
    return frame


def draws_frame(archive: DrawArchive) -> pd.DataFrame:
    """One row per (draw, component) with the scalar parameters, beta and mu."""
    rows = []
    for draw in archive.draws:
        for k, comp in enumerate(draw.state.components):
            row = {
                "iteration": draw.iteration,
                "component": k + 1,
                "pi": draw.state.pi[k],
                "alpha": comp.alpha,
                "sigma2": comp.sigma2,
                "lambda": comp.lam,
                "delta": comp.delta,
                "psi": comp.psi,
            }
            row.update({f"beta_{j + 1}": v for j, v in enumerate(comp.beta)})
            row.update({f"mu_{j + 1}": v for j, v in enumerate(comp.mu)})
            rows.append(row)
    return pd.DataFrame(rows)


def write_archive(archive: DrawArchive, directory: str | Path) -> Path:
    settings = get_settings()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    p = int(archive.metadata["p"])

    records = [pack_record(draw) for draw in archive.draws]
    offsets = np.cumsum([0] + [r.size for r in records[:-1]]).tolist() if records else []
    packed = np.concatenate(records) if records else np.zeros(0)
    packed.astype(DRAWS_DTYPE).tofile(directory / "draws.bin")

    trace_frame(archive).to_csv(
        directory / "trace.csv", index=False, float_format=settings.float_format, na_rep=""
    )

    cells = sum(draw.K for draw in archive.draws) * p
    wrote_csv = cells <= settings.draws_csv_max_cells
    if wrote_csv:
        draws_frame(archive).to_csv(directory / "draws.csv", index=False, float_format=settings.float_format)

    manifest = dict(archive.metadata)
    manifest["draws_bin"] = {
        "dtype": DRAWS_DTYPE,
        "records": len(records),
        "record_offsets": [int(o) for o in offsets],
        "record_header": RECORD_HEADER,
        "record_layout": ["header[6]", "pi[K]", "z[n] (1-based)", "component_block[K]"],
        "component_block": component_block_layout(p),
        "component_block_length": component_block_length(p),
        "notes": "gamma is NaN outside telescoping mode; omega stored row-major upper triangle",
    }
    manifest["draws_csv"] = wrote_csv
    write_json(manifest, directory / "manifest.json")
    logger.info(f"Wrote archive with {len(records)} draws to {directory}")
    return directory


def read_archive(directory: str | Path) -> DrawArchive:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise EmptyArchiveError(f"No manifest.json in {directory}")
    metadata = read_json_object(manifest_path)
    values = np.fromfile(directory / "draws.bin", dtype=DRAWS_DTYPE)
    draws = unpack_records(values, int(metadata["n"]), int(metadata["p"]))

    trace: list[TraceRow] = []
    trace_path = directory / "trace.csv"
    if trace_path.exists() and trace_path.stat().st_size > 0:
        frame = pd.read_csv(trace_path)
        for row in frame.itertuples(index=False):
            trace.append(
                TraceRow(
                    iteration=int(row.iteration),
                    K=int(row.K),
                    k_plus=int(row.K_plus),
                    gamma=None if pd.isna(row.gamma) else float(row.gamma),
                    loglik=float(row.loglik),
                    logpost=float(row.logpost),
                    retained=bool(row.retained),
                )
            )
    logger.info(f"Read archive {directory}: {len(draws)} draws")
    return DrawArchive(draws=draws, trace=trace, metadata=metadata)


def write_failure_state(payload: dict, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "failure_state.json"
    write_json(payload, path)
    logger.error(f"Chain failure state written to {path}")
    return path


def discover_archives(run_dir: str | Path) -> list[Path]:
    """A single archive directory, or the chain_* archives inside a run directory."""
    run_dir = Path(run_dir)
    if (run_dir / "manifest.json").exists():
        return [run_dir]
    chains = sorted(path for path in run_dir.glob("chain_*") if (path / "manifest.json").exists())
    if not chains:
        raise EmptyArchiveError(f"No archives found under {run_dir}")
    return chains


def read_truth_labels(path: str | Path) -> np.ndarray:
    """Ground-truth labels from a truth.json or from the label column of a dataset CSV."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"Truth file not found: {path}")
    if path.suffix == ".json":
        payload = read_json_object(path)
        if "labels" not in payload:
            raise DataFormatError(f"{path} has no 'labels' entry")
        return np.asarray(payload["labels"])
    frame = pd.read_csv(path)
    if "label" not in frame.columns:
        raise DataFormatError(f"{path} has no 'label' column")
    return frame["label"].to_numpy()
