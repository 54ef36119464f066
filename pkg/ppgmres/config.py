"""
Configuration management for ppgmres
"""

import os
from typing import Optional
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    """Configuration class for run defaults"""

    def __init__(self):
        self.output_dir = os.getenv("PPGMRES_OUTPUT_DIR", "results")
        self.default_seed = self._get_int_env("PPGMRES_SEED", 7)
        self.log_level = os.getenv("PPGMRES_LOG_LEVEL", "INFO").upper()
        self.log_file: Optional[str] = os.getenv("PPGMRES_LOG_FILE") or None
        self.small_eig_cap = self._get_int_env("PPGMRES_SMALL_EIG_CAP", 512)
        self.max_mvp = self._get_int_env("PPGMRES_MAX_MVP", 2_000_000)

    def _get_int_env(self, key: str, default: int) -> int:
        """Get an integer environment variable or raise error on garbage"""
        value = os.getenv(key)
        if value is None or value == "":
            return default
        try:
            return int(value)
        except ValueError:
            raise ValueError(f"Environment variable {key} must be an integer, got {value!r}")


class ConfigProxy:
    """Lazy access to the Config so tests can patch the instance before first use"""
    _instance = None

    def __getattr__(self, name):
        if ConfigProxy._instance is None:
            ConfigProxy._instance = Config()
        return getattr(ConfigProxy._instance, name)

config = ConfigProxy()
