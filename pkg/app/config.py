from functools import lru_cache
from typing import Annotated

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, NoDecode, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="PLAP_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    app_name: str = "p-Laplacian Dynamics"
    log_level: str = "INFO"

    database_url: str = "sqlite+aiosqlite:///./plap_runs.db"
    record_history: bool = True

    max_parallel_trajectories: int = 4
    trajectory_timeout_seconds: float = 600.0
    default_output_dir: str = "out"

    quadrature_refinements: int = 5
    quadrature_base_cells: int = 16
    divergence_factor: float = 10.0
    strict_paper: bool = False

    snapshot_formats: Annotated[list[str], NoDecode] = Field(
        default_factory=lambda: ["plap", "csv"]
    )

    @field_validator("snapshot_formats", mode="before")
    @classmethod
    def _parse_formats(cls, value: str | list[str] | None) -> list[str]:
        if value is None:
            return ["plap", "csv"]
        if isinstance(value, str):
            return [item.strip().lower() for item in value.split(",") if item.strip()]
        return [item.strip().lower() for item in value if item.strip()]

    @field_validator("log_level")
    @classmethod
    def _normalize_level(cls, value: str) -> str:
        return value.strip().upper()


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
