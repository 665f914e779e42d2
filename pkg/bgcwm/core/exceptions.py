"""Error types raised by the sampler, post-processing and CLI layers."""

from typing import Any


class BgcwmError(Exception):
    """Base error carrying a human-readable detail and a machine-readable type."""

    error_type: str = "bgcwm_error"
    exit_code: int = 1

    def __init__(self, detail: str, error_type: str | None = None) -> None:
        super().__init__(detail)
        self.detail = detail
        if error_type is not None:
            self.error_type = error_type

    def to_payload(self) -> dict[str, Any]:
        """Structured form written to stderr by the CLI."""
        return {"detail": self.detail, "error_type": self.error_type}

    def __reduce__(self):
        # Subclass constructors take extra arguments; unpickling restores the instance dict.
        return _rebuild_error, (type(self), self.args, self.__dict__)


class DomainError(BgcwmError, ValueError):
    """Invalid distribution parameter or argument outside its support."""

    error_type = "domain_error"


class FactorizationError(BgcwmError):
    """A matrix expected to be positive definite could not be factorized."""

    error_type = "factorization_failure"

    def __init__(self, detail: str, min_eigenvalue: float) -> None:
        super().__init__(f"{detail} (min eigenvalue {min_eigenvalue:.3e})")
        self.min_eigenvalue = min_eigenvalue

    def to_payload(self) -> dict[str, Any]:
        payload = super().to_payload()
        payload["min_eigenvalue"] = self.min_eigenvalue
        return payload


class SingularMatrixError(BgcwmError):
    """Conditional precision matrix too ill-conditioned to solve reliably."""

    error_type = "singular_matrix"

    def __init__(self, detail: str, condition_number: float) -> None:
        super().__init__(f"{detail} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class ChainAbortedError(BgcwmError):
    """A numerical failure stopped a chain; carries the state at the failing sweep."""

    error_type = "chain_aborted"

    def __init__(self, detail: str, sweep: int, state_dump: dict[str, Any]) -> None:
        super().__init__(f"Chain aborted at sweep {sweep}: {detail}")
        self.sweep = sweep
        self.state_dump = state_dump

    def to_payload(self) -> dict[str, Any]:
        payload = super().to_payload()
        payload["sweep"] = self.sweep
        return payload


class EmptyArchiveError(BgcwmError):
    error_type = "empty_archive"


class InsufficientDrawsError(BgcwmError):
    error_type = "insufficient_draws"


class MissingComponentError(BgcwmError):
    """Criteria sweep is missing one or more K values."""

    error_type = "missing_k"


class ComponentDropError(BgcwmError):
    error_type = "non_empty_drop"


class ConfigError(BgcwmError):
    error_type = "config_error"
    exit_code = 2


class DataFormatError(BgcwmError):
    error_type = "data_format"
    exit_code = 2


def _rebuild_error(cls: type, args: tuple, state: dict[str, Any]) -> BgcwmError:
    error = Exception.__new__(cls)
    error.args = args
    error.__dict__.update(state)
    return error
