"""Process-level settings using pydantic-settings."""

from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Settings loaded from BGCWM_* environment variables or a .env file."""

    # Logging Configuration
    log_level: str = "INFO"

    # Execution Configuration
    default_jobs: int = 1

    # Invariant Checks
    debug_checks: bool = False  # PD check on every sweep instead of every interval
    pd_check_interval: int = 100

    # Output Configuration
    draws_csv_max_cells: int = 200_000
    float_format: str = "%.17g"
    kde_grid_points: int = 200

    model_config = SettingsConfigDict(
        env_prefix="BGCWM_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
