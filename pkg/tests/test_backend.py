import re

import numpy as np
import pytest

from backend import codegen, normalize_registers, parse_visa, validate_program
from backend.baling import analyze_bales
from backend.emit import VISAInstruction, VISAProgram
from backend.legalize import legalize
from backend.machine import DEFAULT_MACHINE, DstDesc, Immediate, RegionDesc, fit_dst_stride, fit_src_region
from backend.regalloc import allocate_registers
from corpus.harness import build_file, build_kernel
from elemtypes import D, F, UB, UW
from emulator.dispatch import DispatchSpec, dispatch
from emulator.surfaces import Surface
from errors import ParseError, RegisterPressureError
from regionir.evaluator import eval_grid
from regionir.ir import IRBuilder, KernelParam
from regionir.regions import RegionSpec

SRC = KernelParam("src", "surface", surface_kind="buffer")
DST = KernelParam("dst", "surface", surface_kind="buffer")


def _kernels(corpus_dir):
    return sorted(corpus_dir.glob("*.cmk"))


def test_fit_src_region_prefers_width_eight():
    assert fit_src_region(np.arange(16), 1) == (8, 8, 1)
    assert fit_src_region(list(range(8)) + list(range(16, 24)), 1) == (16, 8, 1)
    assert fit_src_region(np.zeros(8, dtype=np.int64), 4) == (0, 1, 0)
    assert fit_src_region(np.arange(8) * 4 * 3, 4) is None


def test_fit_dst_stride():
    assert fit_dst_stride(np.arange(8) * 8, 4) == 2
    assert fit_dst_stride(np.array([0, 4, 12]), 4) is None


def test_linear_first_statement_is_nine_simd16_converting_moves(corpus_dir):
    program = build_file(corpus_dir / "linear.cmk", "O2").program
    moves = [
        inst
        for inst in program.instructions
        if inst.opcode == "mov" and inst.dst is not None and inst.dst.elem == F
        and isinstance(inst.srcs[0], RegionDesc) and inst.srcs[0].elem == UB
    ][:9]
    assert len(moves) == 9
    assert all(inst.exec_size == 16 and inst.mask == 0 for inst in moves)
    assert [(m.srcs[0].v, m.srcs[0].w, m.srcs[0].h) for m in moves] == [(8, 8, 1), (16, 8, 1), (8, 8, 1)] * 3
    assert [m.srcs[0].subreg for m in moves] == [3, 19, 11] * 3
    for inst in moves:
        assert re.fullmatch(r"mov \(16\|M0\) r\d+\.\d+<1>:f r\d+\.(3|19|11)<(8|16);8,1>:ub", inst.text())


def test_linear_fits_in_the_register_file(corpus_dir):
    result = build_file(corpus_dir / "linear.cmk", "O2").result
    assert 0 < result.allocation.grf_used <= DEFAULT_MACHINE.grf_count
    assert result.program.count("media_read") >= 1
    assert any(line.startswith("backend.pieces=") for line in result.stats_lines())


@pytest.mark.parametrize("level", ["O0", "O2"])
def test_corpus_programs_pass_the_validator(corpus_dir, level):
    for path in _kernels(corpus_dir):
        program = build_file(path, level).program
        assert validate_program(program) == [], path.name


def test_no_move_copies_a_region_onto_itself(corpus_dir):
    for path in _kernels(corpus_dir):
        for inst in build_file(path, "O2").program.instructions:
            if inst.opcode != "mov" or inst.dst is None or not isinstance(inst.srcs[0], RegionDesc):
                continue
            src = inst.srcs[0]
            if src.elem != inst.dst.elem:
                continue
            same = np.array_equal(src.offsets(inst.exec_size), inst.dst.offsets(inst.exec_size))
            assert not same, f"{path.name}: {inst.text()}"


def test_assembly_text_parses_back(corpus_dir):
    for path in _kernels(corpus_dir):
        program = build_file(path, "O2").program
        text = program.text()
        assert parse_visa(text, path.name).text() == text


def test_normalized_registers_number_by_first_use():
    text = "mov (8|M0) r7.0<1>:d r3.0<8;8,1>:d\nadd (8|M0) r3.0<1>:d r7.0<8;8,1>:d 0x1:d\n"
    assert normalize_registers(text) == "mov (8|M0) r0.0<1>:d r1.0<8;8,1>:d\nadd (8|M0) r1.0<1>:d r0.0<8;8,1>:d 0x1:d\n"


@pytest.mark.parametrize(
    "text,line",
    [
        ("mov (8|M0) r0.0<1>:d r1.0<8;8,1>:d\n", 1),
        (".kernel k\n    mov (8|M0) r0.0<1>:d r1.0:d\n", 2),
        (".kernel k\n.surface s texture\n", 2),
        (".kernel k\n    mov (8|X) r0.0<1>:d r1.0<8;8,1>:d\n", 2),
    ],
)
def test_bad_assembly_is_rejected_with_a_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_visa(text, "bad.visa")
    assert info.value.diagnostics[0].line == line
    assert info.value.diagnostics[0].file == "bad.visa"


def _program(*instructions):
    return VISAProgram("k", (("src", "buffer"),), (), 4, tuple(instructions))


def test_validator_accepts_a_legal_move():
    mov = VISAInstruction("mov", 16, 0, DstDesc(0, 0, 1, D), (RegionDesc(2, 0, 8, 8, 1, D),))
    assert validate_program(_program(mov)) == []


def test_validator_rejects_oversized_operands():
    wide = VISAInstruction("mov", 32, 0, DstDesc(0, 0, 1, D), (RegionDesc(10, 0, 8, 8, 1, D),))
    problems = validate_program(_program(wide))
    assert any("more than 2 registers" in p for p in problems)
    assert all(p.startswith("instruction 0 (mov (32|M0)") for p in problems)


def test_validator_rejects_illegal_shapes():
    program = _program(
        VISAInstruction("mov", 12, 0, DstDesc(0, 0, 1, D), (RegionDesc(2, 0, 8, 8, 1, D),)),
        VISAInstruction("mov", 8, 0, DstDesc(0, 0, 3, D), (RegionDesc(2, 0, 8, 8, 1, D),)),
        VISAInstruction("add", 8, 0, DstDesc(0, 0, 1, UB), (RegionDesc(2, 0, 8, 8, 1, UB), Immediate.of(1, UB))),
        VISAInstruction("frob", 8, 0, DstDesc(0, 0, 1, D), ()),
        VISAInstruction("simd_endif", 8, 0),
    )
    problems = validate_program(program)
    assert any("execution size 12" in p for p in problems)
    assert any("destination stride 3" in p for p in problems)
    assert any("must be promoted" in p for p in problems)
    assert any("unknown opcode 'frob'" in p for p in problems)
    assert any("simd_endif without simd_if" in p for p in problems)


def _legal(module):
    return legalize(analyze_bales(module))


def test_region_read_with_two_users_bales_into_both():
    b = IRBuilder("k", (SRC, DST))
    zero = b.const(D, [0])
    v = b.op("oword_read", (zero,), D, 16, attrs={"surface": "src"})
    odd = b.op("rdregion", (v,), D, 8, region=RegionSpec(0, 8, 2, 4, 8))
    s = b.op("add", (odd, odd), D, 8)
    t = b.op("mul", (odd, b.const(D, [3])), D, 8)
    b.emit("oword_write", (zero, s), attrs={"surface": "dst"})
    b.emit("oword_write", (b.const(D, [32]), t), attrs={"surface": "dst"})
    baled = analyze_bales(b.build())
    assert odd.id not in baled.materialized
    mains = [bale for bale in baled.bales if bale.opcode in ("add", "mul")]
    assert len(mains) == 2
    for bale in mains:
        assert bale.srcs[0].value == v
        assert bale.srcs[0].offsets.tolist() == list(range(4, 64, 8))


def test_disjoint_lifetimes_share_registers():
    b = IRBuilder("k", (SRC, DST))
    zero = b.const(D, [0])
    first = b.op("oword_read", (zero,), D, 16, attrs={"surface": "src"})
    b.emit("oword_write", (zero, first), attrs={"surface": "dst"})
    second = b.op("oword_read", (b.const(D, [64]),), D, 16, attrs={"surface": "src"})
    b.emit("oword_write", (b.const(D, [64]), second), attrs={"surface": "dst"})
    allocation = allocate_registers(_legal(b.build()))
    assert allocation.base[first.id] == allocation.base[second.id]
    assert allocation.grf_used == 2
    assert allocation.peak_bytes == 64


def test_in_place_writes_share_the_old_registers():
    b = IRBuilder("k", (SRC, DST))
    zero = b.const(D, [0])
    v = b.op("oword_read", (zero,), D, 16, attrs={"surface": "src"})
    w = b.op("wrregion", (v, b.const(D, [7])), D, 16, region=RegionSpec(0, 8, 2, 0, 8))
    b.emit("oword_write", (zero, w), attrs={"surface": "dst"})
    legal = _legal(b.build())
    assert legal.stats["coalesced"] == 1
    allocation = allocate_registers(legal)
    assert allocation.base[v.id] == allocation.base[w.id]


def test_more_live_data_than_the_register_file_fails():
    b = IRBuilder("big", (SRC, DST))
    zero = b.const(D, [0])
    a = b.op("oword_read", (zero,), F, 1024, attrs={"surface": "src"}, name="a")
    c = b.op("oword_read", (zero,), F, 1024, attrs={"surface": "src"}, name="c")
    s = b.op("add", (a, c), F, 1024)
    b.emit("oword_write", (zero, s), attrs={"surface": "dst"})
    with pytest.raises(RegisterPressureError) as info:
        codegen(b.build())
    assert info.value.capacity == 4096
    assert info.value.peak_bytes > 4096
    assert any(name.endswith("(a)") for name in info.value.live_values)


def _emulate_and_evaluate(module, program, surfaces):
    emulated = {name: s.copy() for name, s in surfaces.items()}
    evaluated = {name: s.copy() for name, s in surfaces.items()}
    dispatch(program, DispatchSpec((1, 1), emulated))
    eval_grid(module, evaluated, (1, 1))
    return emulated, evaluated


def test_byte_arithmetic_is_promoted_to_words():
    b = IRBuilder("bytes", (SRC, DST))
    zero = b.const(D, [0])
    x = b.op("oword_read", (zero,), UB, 32, attrs={"surface": "src"})
    y = b.op("oword_read", (b.const(D, [32]),), UB, 32, attrs={"surface": "src"})
    s = b.op("add", (x, y), UB, 32)
    b.emit("oword_write", (zero, s), attrs={"surface": "dst"})
    module = b.build()
    result = codegen(module)
    assert "backend.promoted=1" in list(result.stats_lines())
    adds = [inst for inst in result.program.instructions if inst.opcode == "add"]
    assert adds and all(inst.dst.elem == UW and inst.srcs[0].elem == UB for inst in adds)
    assert any(
        inst.opcode == "mov" and inst.dst.elem == UB and inst.srcs[0].elem == UW for inst in result.program.instructions
    )
    data = np.random.default_rng(5).integers(0, 256, size=64, dtype=np.uint8)
    surfaces = {"src": Surface.buffer("src", 64, data), "dst": Surface.buffer("dst", 32)}
    emulated, evaluated = _emulate_and_evaluate(module, result.program, surfaces)
    assert emulated["dst"].tobytes() == evaluated["dst"].tobytes()
    assert emulated["dst"].tobytes() == ((data[:32].astype(np.uint16) + data[32:]) & 0xFF).astype(np.uint8).tobytes()


FORMAT_CHAIN = """kernel flip(surface buf) {
    vector<int, 256> v;
    read(buf, 0, v);
    v.format<int, 16, 16>().select<8, 2, 16, 1>(1, 0) ^= -1;
    v.format<uint, 32, 8>().select<16, 2, 8, 1>(0, 0) ^= 255u;
    write(buf, 0, v);
}
"""


def test_format_chains_cost_no_copies_at_o0():
    build = build_kernel(FORMAT_CHAIN, "flip.cmk", "O0")
    program = build.program
    copies = [
        inst
        for inst in program.instructions
        if inst.opcode == "mov" and isinstance(inst.srcs[0], RegionDesc) and inst.srcs[0].elem == inst.dst.elem
    ]
    assert copies == []
    assert build.result.legal.stats["copies"] == 0
    # both writes land in the registers of the vector itself
    assert build.result.allocation.grf_used <= 40
    data = np.random.default_rng(9).integers(-1000, 1000, size=256, dtype=np.int32)
    surfaces = {"buf": Surface.buffer("buf", 1024, data)}
    emulated, evaluated = _emulate_and_evaluate(build.optimized, program, surfaces)
    assert emulated["buf"].tobytes() == evaluated["buf"].tobytes()
    expected = data.copy()
    expected.reshape(16, 16)[1::2] ^= -1
    words = expected.view(np.uint32).reshape(32, 8)
    words[0::2] ^= 255
    assert emulated["buf"].as_array(np.int32).tolist() == expected.tolist()


@pytest.mark.parametrize("kernel", ["bitonic_local_sort.cmk", "bitonic_local_merge.cmk"])
def test_bitonic_kernels_fit_the_register_file_at_o0(corpus_dir, kernel):
    result = build_file(corpus_dir / kernel, "O0").result
    assert result.allocation.grf_used <= DEFAULT_MACHINE.grf_count
    assert validate_program(result.program) == []
