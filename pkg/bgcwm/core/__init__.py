"""Core module exports."""

from bgcwm.core.config import Settings, get_settings
from bgcwm.core.exceptions import BgcwmError, ChainAbortedError, ConfigError, DataFormatError

__all__ = [
    "Settings",
    "get_settings",
    "BgcwmError",
    "ChainAbortedError",
    "ConfigError",
    "DataFormatError",
]
