"""
Configuration management for cmsimd.
Reads CMSIMD_* keys from environment variables; an optional .env-format
config file can override env vars. Config file path can be set via
CONFIG_FILE or the --config command line argument.
"""

import os
from pathlib import Path

OPT_LEVELS = ("O0", "O2")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
BUNDLED_CORPUS = Path(__file__).resolve().parent / "corpus" / "kernels"


def _load_env_file(path: Path) -> dict[str, str]:
    """Parse a .env-style file (KEY=VALUE per line). Returns dict of key -> value."""
    result = {}
    if not path.exists():
        raise ValueError(f"config file {path} does not exist")
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key:
                result[key] = value
    return result


def _get(key: str, file_config: dict[str, str], default: str | None = None) -> str | None:
    """Get config value: file overrides env, then default."""
    if key in file_config and file_config[key] != "":
        return file_config[key]
    return os.getenv(key, default)


def _positive_int(key: str, raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{key} must be an integer, got '{raw}'") from None
    if value < 1:
        raise ValueError(f"{key} must be at least 1, got {value}")
    return value


class Config:
    """Compiler, emulator and test-harness settings."""

    def __init__(self, config_path: Path | str | None = None):
        path = None
        if config_path is not None:
            path = Path(config_path)
        elif os.getenv("CONFIG_FILE"):
            path = Path(os.getenv("CONFIG_FILE"))
        file_config = _load_env_file(path) if path else {}

        # Compiler
        self.opt_level = _get("CMSIMD_OPT_LEVEL", file_config, "O2").upper()
        if self.opt_level not in OPT_LEVELS:
            raise ValueError(f"CMSIMD_OPT_LEVEL must be one of {', '.join(OPT_LEVELS)}, got '{self.opt_level}'")

        # Logging
        self.log_level = _get("CMSIMD_LOG_LEVEL", file_config, "WARNING").upper()
        if self.log_level not in LOG_LEVELS:
            raise ValueError(f"CMSIMD_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got '{self.log_level}'")
        log_file = _get("CMSIMD_LOG_FILE", file_config)
        self.log_file = Path(log_file) if log_file else None

        # Corpus and test harness
        self.corpus_dir = Path(_get("CMSIMD_CORPUS_DIR", file_config) or BUNDLED_CORPUS)
        self.test_seeds = _positive_int("CMSIMD_TEST_SEEDS", _get("CMSIMD_TEST_SEEDS", file_config, "100"))
        self.jobs = _positive_int("CMSIMD_JOBS", _get("CMSIMD_JOBS", file_config, "4"))
