"""
Application configuration settings
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple, Type

from pydantic import Field, SecretStr, field_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

logger = logging.getLogger(__name__)

# Environment-only fields
SECRET_FIELDS = ("llm_token", "omim_key", "embed_token")

MAX_CANDIDATES = 50

CONFIG_ENV = "ONTONORM_CONFIG"


class _EnvOnlySecretsTomlSource(TomlConfigSettingsSource):
    """TOML source that refuses to read secrets from the config file"""

    def __call__(self) -> Dict[str, Any]:
        data = super().__call__()
        for name in SECRET_FIELDS:
            if name in data:
                logger.warning(f"Ignoring '{name}' in config file; secrets are read from the environment only")
                data.pop(name)
        return data


class Settings(BaseSettings):
    """Toolkit settings"""

    PROJECT_NAME: str = "ontonorm"
    VERSION: str = "1.0.0"

    # Secrets (environment only)
    llm_token: Optional[SecretStr] = None
    omim_key: Optional[SecretStr] = None
    embed_token: Optional[SecretStr] = None

    # Chat-completions endpoint
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o"
    temperature: float = 0.0
    request_timeout: float = 60.0
    max_retries: int = Field(default=3, ge=0)
    backoff_base: float = Field(default=1.0, ge=0.0)
    backoff_max: float = Field(default=30.0, ge=0.0)
    concurrency: int = Field(default=4, ge=1)

    # Embedding provider
    embed_url: Optional[str] = None
    embed_model: str = "dmis-lab/biobert-base-cased-v1.1"
    embed_batch_size: int = Field(default=64, ge=1)
    embed_concurrency: int = Field(default=2, ge=1)
    embed_dimension: int = Field(default=768, ge=1)

    # Retrieval and normalization
    k: int = Field(default=20, ge=1, le=MAX_CANDIDATES)
    paper_faithful: bool = False
    exact_match_fast_path: Optional[bool] = None
    dedupe_by_id: bool = False
    clamp_to_candidates: bool = False
    candidate_renderer: Literal["label_id", "label"] = "label_id"

    # Ontology parsing
    synonym_delimiter: str = "|"
    include_obsolete: bool = True

    # Evaluation
    cosine_threshold: float = Field(default=0.90, gt=0.0, le=1.0)
    count_malformed_as_tn: bool = False

    # OMIM ingest
    omim_base_url: str = "https://api.omim.org/api"
    omim_cache_dir: Path = Path(".omim_cache")
    omim_concurrency: int = Field(default=1, ge=1)
    extract_attempts: int = Field(default=2, ge=1)

    log_level: str = "INFO"

    model_config = SettingsConfigDict(
        env_prefix="ONTONORM_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
        toml_file=None,
    )

    @field_validator("synonym_delimiter")
    @classmethod
    def validate_delimiter(cls, v: str) -> str:
        if len(v) != 1:
            raise ValueError("Synonym delimiter must be a single character")
        return v

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # flags > environment > .env > config file > defaults
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            _EnvOnlySecretsTomlSource(settings_cls),
        )

    @property
    def fast_path_enabled(self) -> bool:
        """Exact-string fast path: off in paper-faithful mode unless forced"""
        if self.exact_match_fast_path is not None:
            return self.exact_match_fast_path
        return not self.paper_faithful


def load_settings(config_file: Optional[Path] = None, **overrides: Any) -> Settings:
    """
    Build settings from flags, environment, .env and an optional TOML file

    Args:
        config_file: Optional TOML config file path, else ONTONORM_CONFIG
        **overrides: Values from command-line flags; None values are ignored

    Returns:
        Settings instance
    """
    for name in SECRET_FIELDS:
        if overrides.get(name) is not None:
            raise ValueError(f"'{name}' can only be set through the environment")
    flags = {key: value for key, value in overrides.items() if value is not None}

    if config_file is None and os.environ.get(CONFIG_ENV):
        config_file = Path(os.environ[CONFIG_ENV])

    if config_file is None:
        return Settings(**flags)

    if not Path(config_file).exists():
        raise FileNotFoundError(f"Config file not found: {config_file}")

    class FileSettings(Settings):
        model_config = SettingsConfigDict(toml_file=Path(config_file))

    return FileSettings(**flags)


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get settings instance, loading defaults if needed"""
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings
