"""criteria: AIC/BIC/ICL over a fixed-K sweep."""

import logging
from pathlib import Path

import pandas as pd
import typer

from bgcwm.commands.common import handle_errors
from bgcwm.core.config import get_settings
from bgcwm.core.exceptions import EmptyArchiveError
from bgcwm.core.storage import discover_archives, load_dataset, read_archive, write_json
from bgcwm.models.state import DrawArchive
from bgcwm.services.criteria import evaluate_criteria

logger = logging.getLogger(__name__)


@handle_errors
def criteria(
    sweep_dir: Path = typer.Argument(..., help="Directory holding k_XX run directories"),
    data_path: Path = typer.Option(..., "--data", help="Dataset the sweep was fitted on"),
    out: Path = typer.Option(..., "--out", help="Path of criteria.csv"),
) -> None:
    """Evaluate information criteria at the max-log-likelihood draw of each K."""
    settings = get_settings()
    run_dirs = sorted(path for path in sweep_dir.glob("k_*") if path.is_dir())
    if not run_dirs:
        raise EmptyArchiveError(f"No k_* run directories under {sweep_dir}")
    archives = []
    for path in run_dirs:
        chains = [read_archive(chain) for chain in discover_archives(path)]
        archives.append(DrawArchive(draws=[draw for chain in chains for draw in chain.draws], trace=[]))
    report = evaluate_criteria(archives, load_dataset(data_path))

    out.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([row.model_dump() for row in report.rows])
    frame.rename(columns={"k": "K"})[["K", "d", "loglik", "aic", "bic", "icl"]].to_csv(
        out, index=False, float_format=settings.float_format
    )
    write_json(report.model_dump(), out.with_suffix(".json"))
    typer.echo(str(out))
