from pathlib import Path

import numpy as np
import pytest

from config import BUNDLED_CORPUS
from corpus.harness import build_kernel

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return BUNDLED_CORPUS


@pytest.fixture(scope="session")
def corpus_source(corpus_dir):
    def load(name: str) -> str:
        return (corpus_dir / f"{name}.cmk").read_text(encoding="utf-8")

    return load


@pytest.fixture
def build():
    """Compile DSL source through the whole pipeline."""

    def run(source: str, level: str = "O2"):
        return build_kernel(source, "<test>", level)

    return run


@pytest.fixture(autouse=True)
def _clean_config_env(monkeypatch):
    for key in ("CONFIG_FILE", "CMSIMD_OPT_LEVEL", "CMSIMD_LOG_LEVEL", "CMSIMD_LOG_FILE", "CMSIMD_CORPUS_DIR", "CMSIMD_TEST_SEEDS", "CMSIMD_JOBS"):
        monkeypatch.delenv(key, raising=False)
