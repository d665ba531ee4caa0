"""
Environment driven settings
Values come from the process environment, optionally seeded from a .env file.
"""

import logging
import os
from functools import lru_cache

from dotenv import load_dotenv

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

SOLVERS = ("dct", "banded", "cg")


class Settings:
    def __init__(self):
        self.threads = self._int_env("LLG_THREADS", 1)
        if self.threads < 1:
            raise ConfigurationError(f"LLG_THREADS must be >= 1, got {self.threads}")

        self.log_level = os.getenv("LOG_LEVEL", "INFO").upper()
        self.output_dir = os.getenv("LLG_OUTPUT_DIR", "./results")

        self.solver = os.getenv("LLG_SOLVER", "dct").lower()
        if self.solver not in SOLVERS:
            raise ConfigurationError(
                f"LLG_SOLVER must be one of {', '.join(SOLVERS)}, got {self.solver!r}"
            )

        self.csv_digits = self._int_env("LLG_CSV_DIGITS", 17)

        logger.debug(
            "⚙️  Settings loaded (threads=%d, solver=%s, output=%s)",
            self.threads, self.solver, self.output_dir,
        )

    @staticmethod
    def _int_env(name: str, default: int) -> int:
        raw = os.getenv(name)
        if raw is None or raw.strip() == "":
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigurationError(f"{name} must be an integer, got {raw!r}")

    def as_dict(self) -> dict:
        return {
            "threads": self.threads,
            "log_level": self.log_level,
            "output_dir": self.output_dir,
            "solver": self.solver,
            "csv_digits": self.csv_digits,
        }


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Load .env (if present) and build the process-wide settings"""
    load_dotenv()
    return Settings()
