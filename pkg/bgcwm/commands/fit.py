"""fit: run the sampler and persist one archive per chain."""

import logging
from pathlib import Path

import typer

from bgcwm.commands.common import build_run_config, handle_errors
from bgcwm.core.config import get_settings
from bgcwm.core.exceptions import ChainAbortedError, ConfigError
from bgcwm.core.storage import load_dataset, write_archive, write_failure_state, write_json
from bgcwm.models.schemas import InferenceMode, RunConfig
from bgcwm.models.state import Dataset
from bgcwm.services.runner import run_multichain
from bgcwm.utils import parse_k_range

logger = logging.getLogger(__name__)


def fit_to_directory(data: Dataset, config: RunConfig, out: Path, jobs: int) -> None:
    try:
        archives, report = run_multichain(data, config, jobs)
    except ChainAbortedError as exc:
        write_failure_state({**exc.to_payload(), "state": exc.state_dump}, out)
        raise
    for index, archive in enumerate(archives):
        write_archive(archive, out / f"chain_{index + 1:02d}")
    write_json(report.model_dump(), out / "modes.json")


@handle_errors
def fit(
    data_path: Path = typer.Argument(..., help="CSV with a y column and covariates"),
    out: Path = typer.Option(..., "--out", help="Run directory"),
    config_path: Path | None = typer.Option(None, "--config", help="JSON RunConfig file"),
    mode: InferenceMode | None = typer.Option(None, "--mode"),
    k: int | None = typer.Option(None, "--k", help="K for fixed_k"),
    k_max: int | None = typer.Option(None, "--k-max", help="K_max for overfitting"),
    k_range: str | None = typer.Option(None, "--k-range", help="Fixed-K sweep, e.g. 1:5"),
    iters: int | None = typer.Option(None, "--iters"),
    burnin: int | None = typer.Option(None, "--burnin"),
    thin: int | None = typer.Option(None, "--thin"),
    chains: int | None = typer.Option(None, "--chains"),
    seed: int | None = typer.Option(None, "--seed"),
    jobs: int | None = typer.Option(None, "--jobs", help="Parallel chains"),
    preset: str | None = typer.Option(None, "--preset", help="'default' or 'long'"),
    overrides: list[str] = typer.Option([], "--set", help="key=value override, repeatable"),
) -> None:
    """Fit the model in fixed_k, overfitting or telescoping mode."""
    flags = {
        "mode": mode.value if mode is not None else None,
        "k": k,
        "k_max": k_max,
        "iterations": iters,
        "burn_in": burnin,
        "thin": thin,
        "chains": chains,
        "seed": seed,
    }
    jobs = jobs or get_settings().default_jobs
    data = load_dataset(data_path)

    if k_range is not None:
        try:
            ks = parse_k_range(k_range)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        flags["mode"] = InferenceMode.FIXED_K.value
        for value in ks:
            config = build_run_config(config_path, {**flags, "k": value}, overrides, preset)
            logger.info(f"Criteria sweep: fitting K={value}")
            fit_to_directory(data, config, out / f"k_{value:02d}", jobs)
    else:
        config = build_run_config(config_path, flags, overrides, preset)
        fit_to_directory(data, config, out, jobs)
    typer.echo(str(out))
