import numpy as np
import pytest

from elemtypes import D, UW
from emulator.surfaces import Surface
from errors import IRVerifyError
from regionir.evaluator import eval_grid, evaluate_pure
from regionir.ir import IRBuilder, IRValue, KernelParam
from regionir.printer import format_module
from regionir.regions import RegionSpec
from regionir.verify import verify

BUF = KernelParam("buf", "surface", surface_kind="buffer")


def _offset(b):
    tx = b.op("thread_x", (), D, 1)
    return b.op("mul", (tx, b.const(D, [64])), D, 1)


def _branchy_module():
    """Lanes above zero become 100, the rest -1, through a masked simd-if/else."""
    b = IRBuilder("branchy", (BUF,))
    off = _offset(b)
    v = b.op("oword_read", (off,), D, 16, attrs={"surface": "buf"})
    zero = b.const(D, np.zeros(16))
    hundred = b.const(D, [100])
    minus = b.const(D, [-1])
    cond = b.op("cmp", (v, zero), UW, 16, attrs={"rel": "gt"})
    b.emit("simd_if_begin", (cond,))
    r = b.op("wrregion", (v, hundred), D, 16, region=RegionSpec.identity(16), attrs={"masked": True})
    b.emit("simd_else")
    r2 = b.op("wrregion", (r, minus), D, 16, region=RegionSpec.identity(16), attrs={"masked": True})
    b.emit("simd_if_end")
    b.emit("oword_write", (off, r2), attrs={"surface": "buf"})
    return b.build()


def _run(module, values, threads=1):
    surface = Surface.buffer("buf", len(values) * 4, np.asarray(values, dtype=np.int32))
    eval_grid(module, {"buf": surface}, (threads, 1))
    return surface.as_array(np.int32).tolist()


def test_simd_if_else_uses_complementary_masks():
    module = _branchy_module()
    verify(module)
    values = [3, -2, 0, 7] * 4
    assert _run(module, values) == [100, -1, -1, 100] * 4


@pytest.mark.parametrize("fill, expected", [(5, 100), (-5, -1)])
def test_empty_branches_are_skipped(fill, expected):
    assert _run(_branchy_module(), [fill] * 16) == [expected] * 16


def test_threads_see_their_own_coordinates():
    values = list(range(-16, 16))
    out = _run(_branchy_module(), values, threads=2)
    assert out == [100 if v > 0 else -1 for v in values]


def test_eval_grid_honours_order():
    b = IRBuilder("bump", (BUF,))
    offsets = b.const(D, [0])
    b.emit("atomic", (offsets,), attrs={"surface": "buf", "op": "inc"})
    module = b.build()
    forward = Surface.buffer("buf", 4)
    backward = Surface.buffer("buf", 4)
    eval_grid(module, {"buf": forward}, (3, 2))
    eval_grid(module, {"buf": backward}, (3, 2), order=[(x, y) for y in (1, 0) for x in (2, 1, 0)])
    assert forward.as_array(np.uint32)[0] == backward.as_array(np.uint32)[0] == 6


def test_iselect_gather_wraps_indices():
    b = IRBuilder("k")
    base = b.const(D, [10, 20, 30, 40])
    idx = b.const(UW, [3, 4, 9, 0])
    out = b.op("iselect_gather", (base, idx), D, 4)
    inst = b.build().instructions[-1]
    assert inst.result == out
    got = evaluate_pure(inst, [np.array([10, 20, 30, 40], dtype=np.int32), np.array([3, 4, 9, 0], dtype=np.uint16)])
    assert got.tolist() == [40, 10, 20, 10]


def _problems(module):
    with pytest.raises(IRVerifyError) as exc:
        verify(module)
    return exc.value.problems


def test_verify_reports_use_before_definition():
    b = IRBuilder("k")
    b.op("mov", (IRValue(99, D, 1),), D, 1)
    assert any("used before it is defined" in p for p in _problems(b.build()))


def test_verify_reports_double_definition():
    b = IRBuilder("k")
    v = b.const(D, [1])
    b.emit("mov", (v,), v)
    assert any("defined more than once" in p for p in _problems(b.build()))


def test_verify_reports_unclosed_simd_if():
    b = IRBuilder("k")
    cond = b.const(UW, [1] * 8)
    b.emit("simd_if_begin", (cond,))
    problems = _problems(b.build())
    assert any("no matching simd_if_end" in p for p in problems)


def test_verify_reports_out_of_bounds_region():
    b = IRBuilder("k")
    v = b.const(D, np.arange(16))
    b.op("rdregion", (v,), D, 4, region=RegionSpec(0, 4, 4, 16, 4))
    problems = _problems(b.build())
    assert any("rdregion" in p and "reaches element 16" in p for p in problems)


def test_verify_reports_masked_write_outside_region():
    b = IRBuilder("k")
    v = b.const(D, np.arange(8))
    b.op("wrregion", (v, b.const(D, [0])), D, 8, region=RegionSpec.identity(8), attrs={"masked": True})
    assert any("masked write outside" in p for p in _problems(b.build()))


def test_verify_reports_values_escaping_their_region():
    b = IRBuilder("k")
    v = b.const(D, np.arange(8))
    cond = b.op("cmp", (v, b.const(D, [3])), UW, 8, attrs={"rel": "lt"})
    b.emit("simd_if_begin", (cond,))
    local = b.op("add", (v, v), D, 8)
    b.emit("simd_if_end")
    b.op("mov", (local,), D, 8)
    assert any("used after it closes" in p for p in _problems(b.build()))


def test_verify_reports_mixed_arithmetic_types():
    b = IRBuilder("k")
    a = b.const(D, [1])
    c = b.const(UW, [1])
    b.op("add", (a, c), D, 1)
    problems = _problems(b.build())
    assert problems[0].startswith("instruction 2 (add):")


def test_printer_shows_regions_masks_and_types():
    text = format_module(_branchy_module())
    lines = text.splitlines()
    assert lines[0] == "kernel branchy"
    assert lines[1] == "  surface buf buffer"
    assert "const splat(0) : dx16" in text
    assert "cmp.gt" in text
    assert "<0;16,1>@0 masked : dx16" in text
    # simd-if bodies are indented one level deeper
    begin = next(i for i, line in enumerate(lines) if "simd_if_begin" in line)
    assert lines[begin + 1].startswith("    %")
