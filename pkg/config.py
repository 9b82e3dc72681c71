import logging
import os
from typing import Optional

from dotenv import load_dotenv

ARTIFACT_VERSION = "0.1.0"
LOG_FORMAT = "[%(levelname)s] %(name)s: %(message)s"
DEFAULT_OUTPUT_DIR = "results"


def _env(name: str) -> Optional[str]:
    load_dotenv()
    value = os.environ.get(name)
    return value.strip() if value and value.strip() else None


def get_default_workers() -> int:
    """Worker count from SNIS_WORKERS in the .env file or environment, else the CPU count."""
    value = _env("SNIS_WORKERS")
    if value is None:
        return max(1, os.cpu_count() or 1)
    try:
        workers = int(value)
    except ValueError:
        raise ValueError(f"SNIS_WORKERS must be a positive integer, got '{value}'.") from None
    if workers < 1:
        raise ValueError(f"SNIS_WORKERS must be a positive integer, got '{value}'.")
    return workers


def get_output_dir() -> str:
    return _env("SNIS_OUTPUT_DIR") or DEFAULT_OUTPUT_DIR


def get_log_level(override: Optional[str] = None) -> int:
    name = (override or _env("SNIS_LOG_LEVEL") or "WARNING").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise ValueError(f"SNIS_LOG_LEVEL must be a logging level name, got '{name}'.")
    return level


def configure_logging(level: Optional[str] = None) -> None:
    """Installs one stream handler on the root logger."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(get_log_level(level))
