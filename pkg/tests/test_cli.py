import asyncio
import json

import numpy as np
import pytest

from cli_commands import base as command_base
from cli_commands.base import CommandHandlerBase, UsageError
from main import main

ADD_ONE = """kernel add_one(surface buf) {
    vector<int, 8> v;
    read(buf, 0, v);
    v = v + 1;
    write(buf, 0, v);
}
"""


def _cli(*argv) -> int:
    return asyncio.run(main(list(argv)))


@pytest.fixture
def kernel_file(tmp_path):
    path = tmp_path / "add_one.cmk"
    path.write_text(ADD_ONE, encoding="utf-8")
    return path


def test_compile_prints_assembly(kernel_file, capsys):
    assert _cli("compile", str(kernel_file)) == 0
    out = capsys.readouterr().out
    assert out.startswith(".kernel add_one\n.surface buf buffer\n")
    assert "oword_read (1|NM) @buf" in out


def test_compile_stats_and_ir(kernel_file, capsys):
    assert _cli("compile", str(kernel_file), "-O0", "--stats", "--dump-ir") == 0
    out = capsys.readouterr().out
    assert "// region IR, lowered\nkernel add_one" in out
    assert "// region IR, O0" in out
    assert "opt.iterations=0" in out
    assert "backend.instructions=" in out


def test_compile_json(kernel_file, capsys):
    assert _cli("compile", str(kernel_file), "--json", "--print-after", "dead") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["kernel"] == "add_one"
    assert payload["level"] == "O2"
    assert payload["asm"].startswith(".kernel add_one")
    assert payload["stats"]["backend.instructions"] == payload["instructions"]
    assert payload["print_after"]


def test_compile_then_run(kernel_file, tmp_path, capsys):
    asm = tmp_path / "add_one.visa"
    assert _cli("compile", str(kernel_file), "-o", str(asm)) == 0
    assert capsys.readouterr().out == ""
    data = tmp_path / "buf.bin"
    data.write_bytes(np.arange(8, dtype=np.int32).tobytes())
    assert _cli("run", str(asm), "--surface", f"buf={data}:32:buffer") == 0
    out = capsys.readouterr().out
    assert "threads=1" in out
    assert np.frombuffer(data.read_bytes(), dtype=np.int32).tolist() == list(range(1, 9))


def test_run_creates_missing_outputs(kernel_file, tmp_path, capsys):
    asm = tmp_path / "add_one.visa"
    _cli("compile", str(kernel_file), "-o", str(asm))
    out_file = tmp_path / "fresh.bin"
    assert _cli("run", str(asm), "--surface", f"buf={out_file}:32:buffer", "--grid", "2x1", "--json") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["written"] == ["buf"]
    assert payload["grid"] == [2, 1]
    assert payload["stats"]["threads"] == 2
    # two threads each add one to the same zero block
    assert np.frombuffer(out_file.read_bytes(), dtype=np.int32).tolist() == [2] * 8


def test_compile_errors_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.cmk"
    bad.write_text("kernel k(surface s) {\n    vector<int, 4> v = ;\n}\n", encoding="utf-8")
    assert _cli("compile", str(bad)) == 1
    assert f"{bad}:2:" in capsys.readouterr().err

    assert _cli("compile", str(tmp_path / "missing.cmk")) == 1
    assert "cannot read" in capsys.readouterr().err


def test_run_errors_exit_one(kernel_file, tmp_path, capsys):
    asm = tmp_path / "add_one.visa"
    _cli("compile", str(kernel_file), "-o", str(asm))
    capsys.readouterr()
    assert _cli("run", str(asm), "--grid", "0x2") == 1
    assert "empty" in capsys.readouterr().err
    assert _cli("run", str(asm)) == 1
    assert "not bound" in capsys.readouterr().err
    garbage = tmp_path / "garbage.visa"
    garbage.write_text(".kernel k\n    frob\n", encoding="utf-8")
    assert _cli("run", str(garbage)) == 1
    assert f"{garbage}:2:" in capsys.readouterr().err


def test_corpus_command(capsys):
    assert _cli("test", "transpose2", "linear") == 0
    out = capsys.readouterr().out
    assert "PASS transpose2" in out
    assert "2/2 cases passed" in out


def test_corpus_command_json(capsys):
    assert _cli("test", "transpose2", "--seeds", "2", "--differential", "--json") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["passed"] is True
    assert payload["seeds"] == 2
    assert payload["cases"][0]["name"] == "transpose2"


def test_unknown_case_exits_one(capsys):
    assert _cli("test", "no_such_case") == 1
    assert "no corpus case named 'no_such_case'" in capsys.readouterr().err


def test_configuration_errors_exit_two(monkeypatch, capsys):
    monkeypatch.setenv("CMSIMD_OPT_LEVEL", "O9")
    assert _cli("test") == 2
    assert "configuration error" in capsys.readouterr().err


def test_usage_errors_exit_two():
    with pytest.raises(SystemExit) as info:
        _cli("compile")
    assert info.value.code == 2


def test_command_aliases():
    assert CommandHandlerBase.normalize_command("cc") == "compile"
    assert CommandHandlerBase.normalize_command("Exec") == "run"
    assert CommandHandlerBase.normalize_command("check") == "test"


@pytest.mark.parametrize("text,grid", [("4x2", (4, 2)), ("3", (3, 1)), ("16X16", (16, 16))])
def test_parse_grid(text, grid):
    assert CommandHandlerBase.parse_grid(text) == grid


def test_parse_kernel_args():
    assert CommandHandlerBase.parse_kernel_args(["n=0x10", "scale=0.5"]) == {"n": 16, "scale": 0.5}
    with pytest.raises(UsageError):
        CommandHandlerBase.parse_kernel_args(["n"])
    with pytest.raises(UsageError):
        CommandHandlerBase.parse_kernel_args(["n=ten"])


def test_command_modules_are_documented():
    assert command_base.__doc__.startswith("Shared base utilities")
