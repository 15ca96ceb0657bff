from pathlib import Path

import pytest

from config import BUNDLED_CORPUS, Config

ROOT = Path(__file__).resolve().parent.parent


def test_defaults():
    config = Config()
    assert config.opt_level == "O2"
    assert config.log_level == "WARNING"
    assert config.log_file is None
    assert config.corpus_dir == BUNDLED_CORPUS
    assert config.test_seeds == 100
    assert config.jobs == 4


def test_environment_is_read(monkeypatch):
    monkeypatch.setenv("CMSIMD_OPT_LEVEL", "o0")
    monkeypatch.setenv("CMSIMD_LOG_LEVEL", "debug")
    monkeypatch.setenv("CMSIMD_TEST_SEEDS", "7")
    config = Config()
    assert config.opt_level == "O0"
    assert config.log_level == "DEBUG"
    assert config.test_seeds == 7


def test_file_overrides_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CMSIMD_JOBS", "2")
    monkeypatch.setenv("CMSIMD_OPT_LEVEL", "O0")
    path = tmp_path / "cmsimd.env"
    path.write_text("# local\nCMSIMD_JOBS=8\nCMSIMD_OPT_LEVEL=\nCMSIMD_LOG_FILE=out.log\nnot a setting\n", encoding="utf-8")
    config = Config(path)
    assert config.jobs == 8
    # empty values in the file fall back to the environment
    assert config.opt_level == "O0"
    assert config.log_file == Path("out.log")


def test_config_file_from_environment(tmp_path, monkeypatch):
    path = tmp_path / "cmsimd.env"
    path.write_text("CMSIMD_CORPUS_DIR=/srv/kernels\n", encoding="utf-8")
    monkeypatch.setenv("CONFIG_FILE", str(path))
    assert Config().corpus_dir == Path("/srv/kernels")


def test_example_file_loads():
    config = Config(ROOT / ".env.example")
    assert config.opt_level == "O2"
    assert config.test_seeds == 100


@pytest.mark.parametrize(
    "key,value,message",
    [
        ("CMSIMD_OPT_LEVEL", "O3", "CMSIMD_OPT_LEVEL must be one of O0, O2"),
        ("CMSIMD_LOG_LEVEL", "LOUD", "CMSIMD_LOG_LEVEL must be one of"),
        ("CMSIMD_TEST_SEEDS", "many", "must be an integer"),
        ("CMSIMD_JOBS", "0", "must be at least 1"),
    ],
)
def test_bad_values(monkeypatch, key, value, message):
    monkeypatch.setenv(key, value)
    with pytest.raises(ValueError, match=message):
        Config()


def test_missing_config_file(tmp_path):
    with pytest.raises(ValueError, match="does not exist"):
        Config(tmp_path / "nope.env")
