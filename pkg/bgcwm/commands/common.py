"""Shared CLI plumbing: structured error output and run-configuration assembly."""

import functools
import json
import logging
from pathlib import Path
from typing import Any, Callable

import typer
from pydantic import ValidationError

from bgcwm.core.exceptions import BgcwmError, ConfigError
from bgcwm.models.schemas import RunConfig

logger = logging.getLogger(__name__)


def handle_errors(func: Callable) -> Callable:
    """Print any BgcwmError to stderr as {"detail", "error_type"} and exit with its code."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except BgcwmError as exc:
            logger.error(f"{exc.error_type}: {exc.detail}")
            typer.echo(json.dumps(exc.to_payload()), err=True)
            raise typer.Exit(code=exc.exit_code) from None

    return wrapper


def parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(base: dict, overrides: list[str]) -> dict:
    """Apply key=value pairs; dotted keys address nested sections (hyper.a=0.001)."""
    merged = json.loads(json.dumps(base))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"Override '{item}' is not of the form key=value")
        key, value = item.split("=", 1)
        target = merged
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"Override '{key}' addresses a non-section value")
            target = node
        target[parts[-1]] = parse_value(value)
    return merged


def load_config_file(path: Path | None) -> dict:
    if path is None:
        return {}
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {path} is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    return payload


def build_run_config(
    config_path: Path | None,
    flags: dict[str, Any],
    overrides: list[str],
    preset: str | None = None,
) -> RunConfig:
    """Preset, then config file, then CLI flags, then --set overrides (later wins)."""
    values = load_config_file(config_path)
    values.update({key: value for key, value in flags.items() if value is not None})
    values = apply_overrides(values, overrides)
    try:
        return RunConfig.preset(preset or "default", **values)
    except ValidationError as exc:
        raise ConfigError(f"Invalid run configuration: {exc.errors(include_url=False)}") from None
