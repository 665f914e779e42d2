"""Command-line entry point."""

import logging

import typer

from bgcwm.commands import criteria, fit, postprocess, score, simulate
from bgcwm.core.config import get_settings

# Configure logging
settings = get_settings()
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper()),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

app = typer.Typer(
    name="bgcwm",
    help="Bayesian Gaussian cluster-weighted model: simulate, fit, postprocess, criteria, score.",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)

# Register commands
app.command("simulate")(simulate.simulate)
app.command("fit")(fit.fit)
app.command("postprocess")(postprocess.postprocess)
app.command("criteria")(criteria.criteria)
app.command("score")(score.score)


def run() -> None:
    app(prog_name="bgcwm")
