"""
Post-emission validator: every instruction must respect the machine limits.
"""

from __future__ import annotations

from typing import List

from backend.emit import VISAInstruction, VISAProgram
from backend.machine import DEFAULT_MACHINE, DstDesc, Immediate, MachineConfig, RegionDesc
from elemtypes import RELATIONS
from emulator.memory import ATOMIC_ARITY, MEDIA_MAX_ROWS
from regionir.ir import ARITH_OPCODES

OPERAND_COUNTS = {
    "mov": (1,),
    "sel": (3,),
    "cmp": (2,),
    "gather": (3,),
    "any": (1, 2),
    "all": (1, 2),
    "media_read": (5,),
    "media_write": (6,),
    "oword_read": (3,),
    "oword_write": (4,),
    "scatter_read": (2,),
    "scatter_write": (3,),
    "atomic": (1, 2, 3),
    "simd_if": (1,),
    "simd_else": (0,),
    "simd_endif": (0,),
}
OPERAND_COUNTS.update({op: (2,) for op in ARITH_OPCODES})

NEEDS_DST = ARITH_OPCODES | {"mov", "sel", "cmp", "gather", "any", "all", "media_read", "oword_read", "scatter_read"}
LANE_MESSAGES = {"scatter_read", "scatter_write", "atomic"}


class _Validator:
    def __init__(self, cfg: MachineConfig):
        self.cfg = cfg
        self.problems: List[str] = []

    def fail(self, index: int, inst: VISAInstruction, message: str):
        self.problems.append(f"instruction {index} ({inst.text()}): {message}")

    def bounds(self, index: int, inst: VISAInstruction, first: int, span: int, what: str):
        if span > self.cfg.max_operand_bytes:
            self.fail(index, inst, f"{what} spans {span} bytes, more than {self.cfg.max_operand_grfs} registers")
        if first < 0 or first + span > self.cfg.file_bytes:
            self.fail(index, inst, f"{what} falls outside the register file")

    def region(self, index: int, inst: VISAInstruction, rd: RegionDesc, lanes: int, what: str):
        cfg = self.cfg
        if rd.subreg >= cfg.grf_bytes or rd.subreg % rd.elem.size_bytes:
            self.fail(index, inst, f"{what} subregister {rd.subreg} is not an aligned byte of a register")
        if rd.w not in cfg.region_widths or lanes % rd.w and lanes > rd.w:
            self.fail(index, inst, f"{what} width {rd.w} is not legal for {lanes} lanes")
        if rd.v not in cfg.src_strides or rd.h not in cfg.src_strides:
            self.fail(index, inst, f"{what} strides <{rd.v};{rd.w},{rd.h}> are not legal")
        self.bounds(index, inst, rd.base, rd.span(lanes), what)

    def dst(self, index: int, inst: VISAInstruction, dst: DstDesc, lanes: int):
        if dst.h not in self.cfg.dst_strides:
            self.fail(index, inst, f"destination stride {dst.h} is not legal")
        if dst.subreg >= self.cfg.grf_bytes:
            self.fail(index, inst, f"destination subregister {dst.subreg} is out of range")
        self.bounds(index, inst, dst.base, dst.span(lanes), "destination")

    def instruction(self, index: int, inst: VISAInstruction):
        op = inst.base_opcode
        suffix = inst.opcode[len(op) + 1 :]
        if op not in OPERAND_COUNTS:
            self.fail(index, inst, f"unknown opcode '{inst.opcode}'")
            return
        if op == "cmp" and suffix not in RELATIONS or op == "atomic" and suffix not in ATOMIC_ARITY:
            self.fail(index, inst, f"unknown opcode '{inst.opcode}'")
        if len(inst.srcs) not in OPERAND_COUNTS[op]:
            self.fail(index, inst, f"'{op}' takes {' or '.join(map(str, OPERAND_COUNTS[op]))} sources, got {len(inst.srcs)}")
            return
        if inst.exec_size not in self.cfg.exec_sizes:
            self.fail(index, inst, f"execution size {inst.exec_size} is not legal")
        if op in LANE_MESSAGES and inst.exec_size > self.cfg.max_message_lanes:
            self.fail(index, inst, f"'{op}' is limited to {self.cfg.max_message_lanes} lanes")
        if inst.mask is not None and inst.mask + inst.exec_size > 32:
            self.fail(index, inst, f"mask M{inst.mask} runs past lane 31")
        if op in NEEDS_DST and inst.dst is None:
            self.fail(index, inst, f"'{op}' needs a destination")
        if (op in ARITH_OPCODES or op == "sel") and inst.dst is not None and inst.dst.elem.size_bytes == 1:
            self.fail(index, inst, f"byte destination on '{op}' must be promoted")

        if op in ("media_read", "media_write", "oword_read", "oword_write"):
            self.block(index, inst, op)
            return
        lanes = inst.exec_size
        for k, src in enumerate(inst.srcs):
            if not isinstance(src, RegionDesc):
                continue
            if op == "gather" and k == 0:
                length = inst.srcs[2].value if isinstance(inst.srcs[2], Immediate) else 0
                self.bounds(index, inst, src.base, int(length) * src.elem.size_bytes, "gather base")
            elif op in ("any", "all") and k == 1:
                self.region(index, inst, src, 1, "accumulator")
            else:
                self.region(index, inst, src, lanes, f"source {k}")
        if inst.pred is not None:
            self.region(index, inst, inst.pred, lanes, "predicate")
        if inst.dst is not None:
            self.dst(index, inst, inst.dst, 1 if op in ("any", "all") else lanes)

    def block(self, index: int, inst: VISAInstruction, op: str):
        imms = [s for s in inst.srcs if isinstance(s, Immediate)]
        if op.startswith("media"):
            rows, width = (int(i.value) for i in imms[-2:])
            if rows > MEDIA_MAX_ROWS:
                self.fail(index, inst, f"media block of {rows} rows")
            nbytes = rows * width
        else:
            nbytes = int(imms[-1].value)
            if nbytes not in (16, 32, 64):
                self.fail(index, inst, f"oword block of {nbytes} bytes")
        payload = inst.srcs[-1] if op.endswith("write") else inst.dst
        if payload is None or not isinstance(payload, (RegionDesc, DstDesc)):
            self.fail(index, inst, "block message needs a register payload")
            return
        self.bounds(index, inst, payload.base, nbytes, "payload")
        for k, src in enumerate(inst.srcs[:-1] if op.endswith("write") else inst.srcs):
            if isinstance(src, RegionDesc):
                self.region(index, inst, src, 1, f"source {k}")


def validate_program(program: VISAProgram, cfg: MachineConfig = DEFAULT_MACHINE) -> List[str]:
    """Return every limit violation in the program; empty when it is legal."""
    v = _Validator(cfg)
    depth = 0
    for index, inst in enumerate(program.instructions):
        v.instruction(index, inst)
        if inst.opcode == "simd_if":
            depth += 1
        elif inst.opcode == "simd_endif":
            depth -= 1
        if depth < 0:
            v.fail(index, inst, "simd_endif without simd_if")
            depth = 0
    if depth:
        v.problems.append(f"{depth} simd_if region(s) left open")
    return v.problems
