"""score: compare a post-processing summary with simulation ground truth."""

import logging
from pathlib import Path

import typer

from bgcwm.commands.common import handle_errors
from bgcwm.core.storage import read_json_model, read_json_object, write_json
from bgcwm.models.schemas import Summary
from bgcwm.services.scoring import score_fit

logger = logging.getLogger(__name__)


@handle_errors
def score(
    truth: Path = typer.Option(..., "--truth", help="truth.json written by simulate"),
    summary: Path = typer.Option(..., "--summary", help="summary.json written by postprocess"),
    out: Path = typer.Option(..., "--out", help="Path of metrics.json"),
) -> None:
    """Report |K - K_hat|, ARI, selection Hamming distance and beta error."""
    metrics = score_fit(read_json_object(truth), read_json_model(summary, Summary))
    out.parent.mkdir(parents=True, exist_ok=True)
    write_json(metrics.model_dump(), out)
    typer.echo(metrics.model_dump_json())
