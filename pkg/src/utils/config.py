"""
Configuration management for loopcanon.

Handles loading run settings (cache location, seed, interpolation points,
default windows) from environment variables and provides a centralized
configuration object.
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

from dotenv import load_dotenv

from src.errors import ConfigError

logger = logging.getLogger(__name__)


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from e


def parse_int_list(raw: str) -> List[int]:
    """
    Parse a comma separated list of integers such as "2,3,5".

    Raises:
        ConfigError: If an entry is not an integer
    """
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"Expected a comma list of integers, got {raw!r}") from e


def parse_range(raw: str) -> Tuple[int, int]:
    """
    Parse an inclusive integer range written "lo:hi" or "lo..hi".

    Raises:
        ConfigError: If the text is not a range
    """
    text = raw.replace("..", ":")
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"Expected a range lo:hi, got {raw!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as e:
        raise ConfigError(f"Expected a range lo:hi, got {raw!r}") from e


@dataclass
class Config:
    """Run configuration."""

    cache_dir: str = "./.loopcanon_cache"
    output_dir: str = "./output"
    log_level: str = "INFO"
    seed: int = 20240601
    primes: List[int] = field(default_factory=lambda: [2, 3, 4, 5])
    check_prime: int = 7
    xi_max: int = 6
    index_min: int = -6
    index_max: int = 6
    max_workers: int = 1

    def __post_init__(self):
        """Validate configuration after initialization."""
        if not self.primes:
            raise ConfigError("At least one interpolation point is required")
        if self.index_min > self.index_max:
            raise ConfigError(f"Empty window: {self.index_min} > {self.index_max}")
        if self.xi_max < 0:
            raise ConfigError(f"xi_max must be nonnegative, got {self.xi_max}")

        Path(self.cache_dir).mkdir(parents=True, exist_ok=True)
        Path(self.output_dir).mkdir(parents=True, exist_ok=True)

        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if self.log_level.upper() not in valid_levels:
            logger.warning(f"Invalid log level: {self.log_level}. Using INFO.")
            self.log_level = "INFO"

        logger.debug(f"Configuration initialized: cache_dir={self.cache_dir}, seed={self.seed}")

    @property
    def cache_file(self) -> Path:
        """Location of the persisted structure-constant cache."""
        return Path(self.cache_dir) / "structure_constants.json"

    @classmethod
    def from_env(cls, env_file: Optional[str] = None) -> "Config":
        """
        Load configuration from environment variables.

        Args:
            env_file: Optional path to .env file (defaults to .env in cwd)

        Returns:
            Config instance

        Raises:
            ConfigError: If a variable is malformed
        """
        if env_file:
            load_dotenv(env_file)
        else:
            load_dotenv()

        defaults = cls.__dataclass_fields__
        primes_raw = os.getenv("LOOPCANON_PRIMES")
        window_raw = os.getenv("LOOPCANON_WINDOW")
        index_min, index_max = (
            parse_range(window_raw) if window_raw else (defaults["index_min"].default, defaults["index_max"].default)
        )

        return cls(
            cache_dir=os.getenv("LOOPCANON_CACHE_DIR", "./.loopcanon_cache"),
            output_dir=os.getenv("LOOPCANON_OUTPUT_DIR", "./output"),
            log_level=os.getenv("LOG_LEVEL", "INFO"),
            seed=_int_env("LOOPCANON_SEED", 20240601),
            primes=parse_int_list(primes_raw) if primes_raw else [2, 3, 4, 5],
            check_prime=_int_env("LOOPCANON_CHECK_PRIME", 7),
            xi_max=_int_env("LOOPCANON_XI_MAX", 6),
            index_min=index_min,
            index_max=index_max,
            max_workers=_int_env("MAX_WORKERS", 1),
        )

    @classmethod
    def from_dict(cls, config_dict: dict) -> "Config":
        """
        Create configuration from dictionary.

        Args:
            config_dict: Configuration dictionary

        Returns:
            Config instance
        """
        return cls(**config_dict)


def setup_logging(config: Config) -> None:
    """
    Set up logging configuration.

    Args:
        config: Configuration object
    """
    logging.basicConfig(
        level=getattr(logging, config.log_level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    logger.info(f"Logging configured at {config.log_level} level")
