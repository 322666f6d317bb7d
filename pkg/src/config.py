"""Configuration management for qaffine."""

import os
import logging
from pathlib import Path
from fractions import Fraction
from typing import Optional, Dict, Any, List, Tuple, FrozenSet
from dataclasses import dataclass, field

from dotenv import load_dotenv

from . import roots

VALID_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
VALID_FORMATS = ["json", "tsv"]


class ConfigError(Exception):
    """Custom exception for configuration errors."""

    pass


@dataclass
class Settings:
    """Process-wide settings for qaffine, read from the environment."""

    # Defaults for construction flags
    default_rank: int = 3
    loop_bound: int = 3
    len_bound: int = 3
    depth: int = 3
    slack: int = 2

    # Concurrency
    workers: int = 1

    # Logging Configuration
    log_level: str = "INFO"
    log_file: Optional[Path] = None

    def __post_init__(self) -> None:
        """Validate settings after initialization."""
        self.validate()

    def validate(self) -> None:
        """Validate settings."""
        if self.default_rank < 3:
            raise ValueError("QAFFINE_DEFAULT_RANK must be at least 3")

        for name, value in [
            ("QAFFINE_LOOP_BOUND", self.loop_bound),
            ("QAFFINE_LEN_BOUND", self.len_bound),
            ("QAFFINE_DEPTH", self.depth),
        ]:
            if value < 1:
                raise ValueError(f"{name} must be at least 1")

        if self.slack < 1:
            raise ValueError("QAFFINE_SLACK must be at least 1")

        if self.workers < 1:
            raise ValueError("QAFFINE_WORKERS must be at least 1")

        if self.log_level.upper() not in VALID_LOG_LEVELS:
            raise ValueError(
                f"Invalid log level: {self.log_level}. Must be one of {VALID_LOG_LEVELS}"
            )

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to dictionary."""
        return {
            "default_rank": self.default_rank,
            "loop_bound": self.loop_bound,
            "len_bound": self.len_bound,
            "depth": self.depth,
            "slack": self.slack,
            "workers": self.workers,
            "log_level": self.log_level,
            "log_file": str(self.log_file) if self.log_file else None,
        }


def load_settings(env_file: Optional[Path] = None) -> Settings:
    """
    Load settings from environment variables and .env file.

    Args:
        env_file: Optional path to .env file. If None, looks for .env in current directory.

    Returns:
        Loaded settings

    Raises:
        ConfigError: If a value is malformed or out of range
    """
    if env_file is None:
        env_file = Path.cwd() / ".env"

    if env_file.exists():
        load_dotenv(env_file)
        logging.debug(f"Loaded environment variables from {env_file}")

    try:
        log_file_str = os.getenv("QAFFINE_LOG_FILE")
        return Settings(
            default_rank=int(os.getenv("QAFFINE_DEFAULT_RANK", "3")),
            loop_bound=int(os.getenv("QAFFINE_LOOP_BOUND", "3")),
            len_bound=int(os.getenv("QAFFINE_LEN_BOUND", "3")),
            depth=int(os.getenv("QAFFINE_DEPTH", "3")),
            slack=int(os.getenv("QAFFINE_SLACK", "2")),
            workers=int(os.getenv("QAFFINE_WORKERS", "1")),
            log_level=os.getenv("QAFFINE_LOG_LEVEL", "INFO").upper(),
            log_file=Path(log_file_str) if log_file_str else None,
        )
    except ValueError as e:
        raise ConfigError(f"Configuration validation failed: {e}")


def setup_logging(settings: Settings) -> None:
    """
    Set up logging based on settings. Console output goes to stderr.

    Args:
        settings: Settings object with logging options
    """
    log_level = getattr(logging, settings.log_level.upper())

    formatter = logging.Formatter(
        fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # Remove existing handlers to avoid duplicates
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if settings.log_file:
        try:
            settings.log_file.parent.mkdir(parents=True, exist_ok=True)

            file_handler = logging.FileHandler(settings.log_file)
            file_handler.setLevel(log_level)
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)

            logging.info(f"Logging to file: {settings.log_file}")
        except Exception as e:
            logging.warning(f"Could not set up file logging to {settings.log_file}: {e}")

    logging.debug(f"Settings: {settings.to_dict()}")


def parse_rational(text: str) -> Fraction:
    """
    Parse ``p/q`` or an integer string.

    Raises:
        ConfigError: If the text is not an exact rational
    """
    text = text.strip()
    if not text or "." in text or "e" in text.lower():
        raise ConfigError(f"Not an exact rational: {text!r}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"Not an exact rational: {text!r} ({e})")


def parse_lambda(text: str, n: int) -> Tuple[Tuple[Fraction, ...], Fraction]:
    """
    Parse ``"h_1,...,h_n;d"`` into H-values and the D-value.

    The ``;d`` part is optional and defaults to 0.
    """
    head, sep, tail = text.partition(";")
    values = tuple(parse_rational(v) for v in head.split(",") if v.strip())
    if len(values) != n:
        raise ConfigError(f"lambda needs {n} H-values, got {len(values)}")
    d_value = parse_rational(tail) if sep and tail.strip() else Fraction(0)
    return values, d_value


def parse_subset(text: str, n: int) -> FrozenSet[int]:
    """Parse a comma-separated list of simple root indices in 1..n-1."""
    try:
        return roots.parse_subset(text, n)
    except roots.RootError as e:
        raise ConfigError(str(e))


@dataclass
class RunConfig:
    """One CLI invocation's parsed inputs."""

    n: int = 3
    subset: FrozenSet[int] = frozenset()
    h_values: Optional[Tuple[Fraction, ...]] = None
    d_value: Fraction = Fraction(0)
    loop_bound: int = 3
    len_bound: int = 3
    depth: int = 3
    slack: int = 2
    seed: int = 0
    output: Optional[Path] = None
    output_format: str = "json"
    extra: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """
        Raises:
            ConfigError: On any out-of-range value
        """
        errors: List[str] = []
        if self.n < 3:
            errors.append(f"rank must be at least 3, got {self.n}")
        if any(not 1 <= i <= self.n - 1 for i in self.subset):
            errors.append(f"subset {sorted(self.subset)} not inside 1..{self.n - 1}")
        if self.h_values is not None and len(self.h_values) != self.n:
            errors.append(f"lambda needs {self.n} H-values")
        for name in ("loop_bound", "len_bound", "depth"):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be at least 1")
        if self.slack < 1:
            errors.append("slack must be at least 1")
        if self.output_format not in VALID_FORMATS:
            errors.append(f"format must be one of {VALID_FORMATS}")
        if errors:
            raise ConfigError(
                "Invalid run configuration:\n" + "\n".join(f"  - {e}" for e in errors)
            )

    @property
    def window(self) -> Dict[str, int]:
        return {
            "loop_bound": self.loop_bound,
            "len_bound": self.len_bound,
            "depth": self.depth,
            "slack": self.slack,
        }


def get_default_config_path() -> Path:
    """Get the default path for the .env configuration file."""
    return Path.cwd() / ".env"


def create_sample_env(path: Optional[Path] = None) -> Path:
    """
    Create a sample .env configuration file.

    Args:
        path: Optional path where to create the file. Defaults to .env in current directory.

    Returns:
        Path of the written file
    """
    if path is None:
        path = get_default_config_path()

    sample_content = """# Default rank for commands run without --n
QAFFINE_DEFAULT_RANK=3

# Truncation window defaults
QAFFINE_LOOP_BOUND=3  # Largest |loop degree| of generators
QAFFINE_LEN_BOUND=3   # Longest PBW monomial
QAFFINE_DEPTH=3       # Deepest delta-degree
QAFFINE_SLACK=2       # Extra delta-degree for raising searches

# Worker threads for independent weight spaces
QAFFINE_WORKERS=1

# Logging Configuration
QAFFINE_LOG_LEVEL=INFO
# QAFFINE_LOG_FILE=/var/log/qaffine.log
"""

    with open(path, "w") as f:
        f.write(sample_content)

    logging.info(f"Sample configuration created at: {path}")
    return path
