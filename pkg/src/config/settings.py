"""
Configuration settings for the self-triggered sparse control toolkit.
Uses Pydantic Settings for environment variable management.
"""
from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings loaded from STC_* environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="STC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = Field(default="Sparse Self-Triggered Control")
    app_version: str = Field(default="1.0.0")

    # Logging
    log_level: str = Field(default="INFO")
    log_file: str = Field(default="logs/stc.log")

    # Sweep fan-out width (STC_THREADS)
    threads: int = Field(default=1, ge=1)

    # Look-up table precomputation
    table_cache_dir: str = Field(default=".stc_cache")
    rk4_substeps: int = Field(default=8, ge=1)


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()
