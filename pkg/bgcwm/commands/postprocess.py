"""postprocess: relabeling, K+ posterior, variable selection and clustering summaries."""

import logging
from pathlib import Path

import pandas as pd
import typer

from bgcwm.commands.common import handle_errors
from bgcwm.core.config import get_settings
from bgcwm.core.storage import discover_archives, read_archive, read_json_model, read_truth_labels, write_json
from bgcwm.models.schemas import ModeReport
from bgcwm.services.postprocess import kde_beta, regions_frame, summarize

logger = logging.getLogger(__name__)


@handle_errors
def postprocess(
    run_dir: Path = typer.Argument(..., help="Run directory or single archive directory"),
    out: Path = typer.Option(..., "--out", help="Directory for the summary files"),
    level: float = typer.Option(0.9, "--level", help="Simultaneous credible level"),
    truth: Path | None = typer.Option(None, "--truth", help="truth.json or dataset CSV with labels"),
    all_chains: bool = typer.Option(False, "--all-chains", help="Ignore minor-mode screening"),
    kde_all: bool = typer.Option(False, "--kde-all", help="KDE for every coefficient"),
) -> None:
    """Summarize the retained draws of one or more chains."""
    settings = get_settings()
    archives = [read_archive(path) for path in discover_archives(run_dir)]
    modes_path = run_dir / "modes.json"
    report = read_json_model(modes_path, ModeReport) if modes_path.exists() else None
    labels = read_truth_labels(truth) if truth is not None else None

    result = summarize(archives, level=level, truth=labels, mode_report=report, all_chains=all_chains)

    out.mkdir(parents=True, exist_ok=True)
    write_json(result.summary.model_dump(mode="json"), out / "summary.json")
    pd.DataFrame(
        {"observation": range(1, result.clustering.size + 1), "label": result.clustering + 1}
    ).to_csv(out / "clustering.csv", index=False)
    regions_frame(result.selection).to_csv(out / "regions.csv", index=False, float_format=settings.float_format)
    kde_beta(result.relabeled, result.selection, include_all=kde_all).to_csv(
        out / "kde_beta.csv", index=False, float_format=settings.float_format
    )
    if result.confusion is not None:
        result.confusion.to_csv(out / "confusion.csv")
    logger.info(f"K+ posterior {result.summary.k_plus_posterior}; selected {result.summary.selected_variables}")
    typer.echo(str(out))
