"""
Configuration settings for the accelerated-oracles toolkit.

Uses Pydantic Settings for environment variable management
with validation and type safety.
"""

import os
from pathlib import Path
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class AppSettings(BaseSettings):
    """Application-level settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    log_level: str = Field(
        default="INFO",
        description="Logging level",
    )
    log_format: Literal["rich", "plain"] = Field(
        default="rich",
        description="Console log rendering; 'plain' for CI logs and pipes",
    )

    @field_validator("log_level")
    @classmethod
    def upper_level(cls, v: str) -> str:
        """Accept 'debug', 'Info', ... as well."""
        return v.upper()


class HarnessSettings(BaseSettings):
    """Experiment harness settings (work pool, reference solver, eigen-solver)."""

    model_config = SettingsConfigDict(
        env_prefix="ACCEL_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    workers: int = Field(
        default_factory=lambda: os.cpu_count() or 1,
        ge=1,
        description="Size of the work pool running independent (seed, λ, ν) cells",
    )
    output_dir: Path = Field(
        default=Path("results"),
        description="Directory for CSV traces when a config gives a relative output name",
    )
    reference_max_iterations: int = Field(
        default=1_000_000,
        ge=1,
        description="Iteration cap for the exact-oracle reference run",
    )
    reference_window: int = Field(
        default=1_000,
        ge=1,
        description="Window (in iterations) over which the reference run must settle",
    )
    reference_rtol: float = Field(
        default=1e-14,
        gt=0,
        description="Relative change of the best value tolerated over one window",
    )
    eig_max_iterations: int = Field(
        default=200,
        ge=1,
        description="Power-iteration cap used to estimate L and μ",
    )
    eig_rtol: float = Field(
        default=1e-10,
        gt=0,
        description="Relative change at which power iteration stops",
    )


# Convenience functions
def get_app_settings() -> AppSettings:
    """Get application settings from environment."""
    return AppSettings()


def get_harness_settings() -> HarnessSettings:
    """Get harness settings from environment."""
    return HarnessSettings()
