"""
Region-IR verifier: SSA dominance, type/length agreement, region bounds and
structured simd-if pairing.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional

from elemtypes import MASK_TYPE, RELATIONS, UD
from emulator.memory import ATOMIC_ARITY, MEDIA_MAX_WIDTH
from errors import IRVerifyError
from regionir.ir import ARITH_OPCODES, OPCODES, IRInstruction, IRModule
from regionir.regions import check_region

logger = logging.getLogger(__name__)

MAX_MASK_LANES = 32
LANE_OPCODES = ARITH_OPCODES | {"mov", "cmp", "sel", "iselect_gather"}


class _Checker:
    def __init__(self, module: IRModule):
        self.module = module
        self.problems: List[str] = []
        self.surfaces = {p.name: p for p in module.surfaces}
        self.seen_else: set[int] = set()

    def fail(self, inst: IRInstruction, message: str):
        self.problems.append(f"instruction {inst.iid} ({inst.opcode}): {message}")

    def expect_operands(self, inst: IRInstruction, *counts: int) -> bool:
        if len(inst.operands) not in counts:
            self.fail(inst, f"expected {' or '.join(map(str, counts))} operands, got {len(inst.operands)}")
            return False
        return True

    def expect_result(self, inst: IRInstruction, wanted: bool = True) -> bool:
        if wanted and inst.result is None:
            self.fail(inst, "missing result value")
            return False
        if not wanted and inst.result is not None:
            self.fail(inst, "must not define a value")
            return False
        return True

    def lengths_agree(self, inst: IRInstruction, operands, length: int):
        for v in operands:
            if v.length not in (length, 1):
                self.fail(inst, f"operand {v} has {v.length} elements, expected {length} or 1")

    def scalar(self, inst: IRInstruction, v, what: str):
        if v.length != 1 or v.elem.is_float:
            self.fail(inst, f"{what} must be an integer scalar")

    def surface(self, inst: IRInstruction, kind: str):
        name = inst.attrs.get("surface")
        param = self.surfaces.get(name)
        if param is None:
            self.fail(inst, f"unknown surface '{name}'")
        elif param.surface_kind not in (None, kind):
            self.fail(inst, f"surface '{name}' is a {param.surface_kind}, {inst.opcode} needs a {kind}")

    def run(self) -> List[str]:
        defined: Dict[int, int] = {}
        region_of_def: Dict[int, Optional[int]] = {}
        def_opcode: Dict[int, str] = {}
        open_regions: List[tuple[int, int]] = []  # (begin iid, mask length)
        closed: set[int] = set()
        for inst in self.module.instructions:
            if inst.opcode not in OPCODES:
                self.fail(inst, "unknown opcode")
                continue
            for v in inst.operands:
                if v.id not in defined:
                    self.fail(inst, f"operand {v} is used before it is defined")
                    continue
                home = region_of_def[v.id]
                if home is not None and home in closed and def_opcode[v.id] != "wrregion":
                    self.fail(inst, f"operand {v} defined inside simd-if region {home} is used after it closes")
            mask_len = open_regions[-1][1] if open_regions else None
            self.check(inst, mask_len, open_regions, closed)
            if inst.result is not None:
                if inst.result.id in defined:
                    self.fail(inst, f"value {inst.result} is defined more than once")
                defined[inst.result.id] = inst.iid
                region_of_def[inst.result.id] = open_regions[-1][0] if open_regions else None
                def_opcode[inst.result.id] = inst.opcode
        for begin, _ in open_regions:
            self.problems.append(f"instruction {begin} (simd_if_begin): no matching simd_if_end")
        return self.problems

    def check(self, inst: IRInstruction, mask_len: Optional[int], open_regions, closed):
        op = inst.opcode
        res = inst.result
        in_simd = mask_len is not None

        if op == "simd_if_begin":
            if self.expect_operands(inst, 1) and self.expect_result(inst, False):
                n = inst.operands[0].length
                if n > MAX_MASK_LANES:
                    self.fail(inst, f"mask of {n} lanes exceeds {MAX_MASK_LANES}")
                if in_simd and n != mask_len:
                    self.fail(inst, f"nested mask of {n} lanes inside a {mask_len}-lane region")
                open_regions.append((inst.iid, n))
            return
        if op == "simd_else":
            if not open_regions:
                self.fail(inst, "simd_else outside a simd-if region")
            elif open_regions[-1][0] in self.seen_else:
                self.fail(inst, "second simd_else in one region")
            else:
                self.seen_else.add(open_regions[-1][0])
                self.expect_operands(inst, 0)
            return
        if op == "simd_if_end":
            if not open_regions:
                self.fail(inst, "simd_if_end without a matching simd_if_begin")
            else:
                closed.add(open_regions.pop()[0])
            return

        if in_simd and op in LANE_OPCODES and res is not None and res.length not in (mask_len, 1):
            self.fail(inst, f"{res.length}-lane operation inside a {mask_len}-lane simd-if region")

        if op == "const":
            if self.expect_result(inst) and (inst.const is None or len(inst.const) != res.size_bytes):
                self.fail(inst, "constant data does not match the result type")
        elif op in ("param", "thread_x", "thread_y"):
            if self.expect_result(inst) and res.length != 1:
                self.fail(inst, "must produce a scalar")
        elif op == "mov":
            if self.expect_operands(inst, 1) and self.expect_result(inst):
                self.lengths_agree(inst, inst.operands, res.length)
        elif op in ARITH_OPCODES:
            if self.expect_operands(inst, 2) and self.expect_result(inst):
                self.lengths_agree(inst, inst.operands, res.length)
                for v in inst.operands:
                    if v.elem != res.elem:
                        self.fail(inst, f"operand {v} is {v.elem}, result is {res.elem}")
                if res.elem.is_float and op in ("and", "or", "xor", "shl", "shr"):
                    self.fail(inst, "bitwise operation on floating-point values")
        elif op == "cmp":
            if self.expect_operands(inst, 2) and self.expect_result(inst):
                self.lengths_agree(inst, inst.operands, res.length)
                a, b = inst.operands
                if a.elem != b.elem:
                    self.fail(inst, f"compares {a.elem} with {b.elem}")
                if res.elem != MASK_TYPE:
                    self.fail(inst, f"result must be {MASK_TYPE}")
                if inst.attrs.get("rel") not in RELATIONS:
                    self.fail(inst, f"unknown relation {inst.attrs.get('rel')!r}")
        elif op == "sel":
            if self.expect_operands(inst, 3) and self.expect_result(inst):
                self.lengths_agree(inst, inst.operands, res.length)
                for v in inst.operands[1:]:
                    if v.elem != res.elem:
                        self.fail(inst, f"operand {v} is {v.elem}, result is {res.elem}")
        elif op in ("mask_any", "mask_all"):
            if self.expect_operands(inst, 1) and self.expect_result(inst):
                if res.length != 1 or res.elem != MASK_TYPE:
                    self.fail(inst, f"result must be a {MASK_TYPE} scalar")
        elif op == "rdregion":
            if self.expect_operands(inst, 1) and self.expect_result(inst):
                self.region(inst, inst.operands[0], res.elem.size_bytes, write=False)
                if inst.region is not None and inst.region.length != res.length:
                    self.fail(inst, f"region yields {inst.region.length} elements, result has {res.length}")
        elif op == "wrregion":
            if self.expect_operands(inst, 2, 3) and self.expect_result(inst):
                old, new = inst.operands[:2]
                if (old.elem, old.length) != (res.elem, res.length):
                    self.fail(inst, "result type differs from the old value")
                self.region(inst, old, new.elem.size_bytes, write=True)
                if inst.region is not None:
                    n = inst.region.length
                    if new.length not in (n, 1):
                        self.fail(inst, f"new value has {new.length} elements, region writes {n}")
                    if len(inst.operands) == 3 and inst.operands[2].length not in (n, 1):
                        self.fail(inst, f"predicate has {inst.operands[2].length} lanes, region writes {n}")
                    if inst.is_masked:
                        if not in_simd:
                            self.fail(inst, "masked write outside a simd-if region")
                        elif n != mask_len:
                            self.fail(inst, f"masked write of {n} lanes inside a {mask_len}-lane region")
        elif op == "iselect_gather":
            if self.expect_operands(inst, 2) and self.expect_result(inst):
                base, idx = inst.operands
                if idx.elem.is_float:
                    self.fail(inst, "indices must be integers")
                if res.elem != base.elem or res.length != idx.length:
                    self.fail(inst, "result must have the base element type and one element per index")
        elif op in ("media_read", "media_write"):
            self.surface(inst, "image")
            if in_simd:
                self.fail(inst, "block memory access inside a simd-if region")
            reading = op == "media_read"
            if self.expect_operands(inst, 2 if reading else 3) and self.expect_result(inst, reading):
                self.scalar(inst, inst.operands[0], "x offset")
                self.scalar(inst, inst.operands[1], "y offset")
                rows, width = inst.attrs.get("rows", 0), inst.attrs.get("width", 0)
                payload = res if reading else inst.operands[2]
                if not (1 <= width <= MEDIA_MAX_WIDTH) or rows < 1 or rows * width != payload.size_bytes:
                    self.fail(inst, f"block {width}x{rows} does not match a {payload.size_bytes}-byte payload")
        elif op in ("oword_read", "oword_write"):
            self.surface(inst, "buffer")
            if in_simd:
                self.fail(inst, "block memory access inside a simd-if region")
            reading = op == "oword_read"
            if self.expect_operands(inst, 1 if reading else 2) and self.expect_result(inst, reading):
                self.scalar(inst, inst.operands[0], "offset")
                payload = res if reading else inst.operands[1]
                if payload.size_bytes % 16:
                    self.fail(inst, f"payload of {payload.size_bytes} bytes is not a whole number of owords")
        elif op in ("scatter_read", "scatter_write"):
            self.surface(inst, "buffer")
            reading = op == "scatter_read"
            if self.expect_operands(inst, 2 if reading else 3) and self.expect_result(inst, reading):
                self.scalar(inst, inst.operands[0], "global offset")
                offsets = inst.operands[1]
                lanes = res.length if reading else inst.operands[2].length
                if offsets.elem.is_float or offsets.length != lanes:
                    self.fail(inst, "offsets must be integers, one per lane")
                if in_simd and offsets.length != mask_len:
                    self.fail(inst, f"{offsets.length}-lane access inside a {mask_len}-lane region")
        elif op == "atomic":
            self.surface(inst, "buffer")
            aop = inst.attrs.get("op")
            if aop not in ATOMIC_ARITY:
                self.fail(inst, f"unknown atomic operation {aop!r}")
                return
            if self.expect_operands(inst, 1 + ATOMIC_ARITY[aop]):
                offsets = inst.operands[0]
                self.lengths_agree(inst, inst.operands[1:], offsets.length)
                if res is not None and (res.elem != UD or res.length != offsets.length):
                    self.fail(inst, "result must hold one uint per lane")
                if in_simd and offsets.length != mask_len:
                    self.fail(inst, f"{offsets.length}-lane atomic inside a {mask_len}-lane region")

    def region(self, inst: IRInstruction, source, elem_size: int, write: bool):
        if inst.region is None:
            self.fail(inst, "missing region")
            return
        if source.size_bytes % elem_size:
            self.fail(inst, f"{source.size_bytes}-byte source cannot be viewed in {elem_size}-byte elements")
            return
        for problem in check_region(inst.region, elem_size, source.size_bytes // elem_size, write=write):
            self.fail(inst, problem)


def verify(module: IRModule) -> None:
    """Raise IRVerifyError listing every violation; return None when the module is well formed."""
    problems = _Checker(module).run()
    if problems:
        logger.debug(f"Verifier found {len(problems)} problem(s) in {module.name}")
        raise IRVerifyError(problems)
