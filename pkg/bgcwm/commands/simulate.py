"""simulate: synthetic dataset and ground truth."""

import logging
from pathlib import Path

import typer
from pydantic import ValidationError

from bgcwm.commands.common import handle_errors, load_config_file
from bgcwm.core.exceptions import ConfigError
from bgcwm.core.storage import write_dataset, write_json
from bgcwm.models.schemas import SimSpec
from bgcwm.services.simulate import gen_dataset

logger = logging.getLogger(__name__)


@handle_errors
def simulate(
    out: Path = typer.Option(..., "--out", help="Output directory for data.csv and truth.json"),
    spec_file: Path | None = typer.Option(None, "--spec", help="JSON SimSpec file"),
    k: int | None = typer.Option(None, "--k", help="Number of clusters (2-4)"),
    p: int | None = typer.Option(None, "--p", help="Number of covariates"),
    n: int | None = typer.Option(None, "--n", help="Sample size"),
    scenario: int | None = typer.Option(None, "--scenario", help="Covariate scenario (1-4)"),
    p0: float | None = typer.Option(None, "--p0", help="Probability of a zero coefficient"),
    seed: int | None = typer.Option(None, "--seed"),
) -> None:
    """Generate a synthetic dataset with known clusters and coefficients."""
    values = load_config_file(spec_file)
    flags = {"K": k, "p": p, "n": n, "scenario": scenario, "p0": p0, "seed": seed}
    values.update({key: value for key, value in flags.items() if value is not None})
    try:
        spec = SimSpec(**values)
    except ValidationError as exc:
        raise ConfigError(f"Invalid simulation spec: {exc.errors(include_url=False)}") from None

    data, truth = gen_dataset(spec)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(data, out / "data.csv")
    write_json(truth.to_dict(), out / "truth.json")
    logger.info(f"Wrote {out / 'data.csv'} and {out / 'truth.json'}")
    typer.echo(str(out))
