"""
Baling: grouping region reads, a main operation and a region write into
one machine instruction.

A region read feeding a main-op source is folded into that source (each
use gets its own copy of the region, so multi-use reads bale everywhere).
A read of every byte of its source in order (what `format` lowers to) is
a view: it gets no bale and shares the registers of the value it reads.
A main op whose only use is the new value of a region write is emitted
with that write as its destination. Everything else becomes a bale of its
own, with a plain mov standing in for reads and writes that have no main op.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set

import numpy as np

from elemtypes import ElemType
from regionir.ir import ARITH_OPCODES, IRInstruction, IRModule, IRValue

logger = logging.getLogger(__name__)

LANE_OPS = ARITH_OPCODES | {"mov", "cmp", "sel"}

# operand positions that accept an immediate (or an inline region for main ops)
IMMEDIATE_POSITIONS = {
    "media_read": {0, 1},
    "media_write": {0, 1},
    "oword_read": {0},
    "oword_write": {0},
    "scatter_read": {0},
    "scatter_write": {0},
    "atomic": {1, 2},
}


@dataclass
class Operand:
    """One bale operand, given per lane as byte offsets into ``value`` viewed as ``elem``."""

    value: Optional[IRValue]
    elem: ElemType
    offsets: np.ndarray
    const: Optional[np.ndarray] = None
    special: Optional[str] = None

    @property
    def lanes(self) -> int:
        return len(self.offsets)

    def is_whole(self) -> bool:
        if self.value is None:
            return False
        size = self.elem.size_bytes
        return self.lanes == self.value.length and np.array_equal(self.offsets, np.arange(self.lanes) * size)


@dataclass
class Bale:
    opcode: str
    lanes: int
    dst: Optional[Operand] = None
    srcs: List[Operand] = field(default_factory=list)
    pred: Optional[Operand] = None
    mode: str = "M"  # M (all lanes outside simd-if) | Mc (execution mask) | NM
    attrs: Dict[str, object] = field(default_factory=dict)
    old: Optional[IRValue] = None
    iid: int = -1
    line: int = 0
    depth: int = 0


@dataclass
class BaleProgram:
    module: IRModule
    bales: List[Bale]
    materialized: Set[int]
    next_value: int
    views: Dict[int, int] = field(default_factory=dict)  # view value id -> source value id


def whole(v: IRValue, lanes: Optional[int] = None) -> Operand:
    lanes = v.length if lanes is None else lanes
    size = v.elem.size_bytes
    offsets = np.zeros(lanes, dtype=np.int64) if v.length == 1 else np.arange(lanes, dtype=np.int64) * size
    return Operand(v, v.elem, offsets)


class _Baler:
    def __init__(self, module: IRModule):
        self.module = module
        self.defs = module.definitions()
        self.uses = module.uses()
        self.depths = module.simd_depths()
        self.materialized: Set[int] = set()
        self.dst_baled: Dict[int, IRInstruction] = {}
        self.views: Dict[int, int] = {}

    @staticmethod
    def is_view(inst: IRInstruction) -> bool:
        if inst.opcode != "rdregion" or inst.result.size_bytes != inst.operands[0].size_bytes:
            return False
        return inst.region.is_identity(inst.result.length, inst.result.elem.size_bytes)

    def inline_use(self, user: IRInstruction, pos: int) -> bool:
        if user.opcode in LANE_OPS:
            return not (user.opcode == "sel" and pos == 0)
        return user.opcode == "wrregion" and pos == 1

    def immediate_use(self, user: IRInstruction, pos: int) -> bool:
        if self.is_view(user):
            return False
        if user.opcode in LANE_OPS or user.opcode == "rdregion":
            return True
        if user.opcode == "wrregion":
            return pos == 1
        return pos in IMMEDIATE_POSITIONS.get(user.opcode, ())

    def plan(self):
        insts = self.module.instructions
        position = {inst.iid: i for i, inst in enumerate(insts)}
        for inst in insts:
            res = inst.result
            if res is None:
                continue
            users = self.uses.get(res.id, [])
            if inst.opcode == "rdregion":
                if self.is_view(inst):
                    self.views[res.id] = inst.operands[0].id
                elif any(not self.inline_use(u, p) for u, p in users):
                    self.materialized.add(res.id)
            elif inst.opcode == "const":
                values = inst.const_values()
                uniform = bool(np.all(values == values[0]))
                if not uniform or any(not self.immediate_use(u, p) for u, p in users):
                    self.materialized.add(res.id)
            elif inst.opcode in LANE_OPS and len(users) == 1:
                user, pos = users[0]
                if user.opcode == "wrregion" and pos == 1:
                    between = insts[position[inst.iid] + 1 : position[user.iid]]
                    if not any(i.opcode.startswith("simd_") for i in between):
                        self.dst_baled[inst.iid] = user

    def mode(self, pos: int, masked: bool) -> str:
        if masked:
            return "Mc"
        return "NM" if self.depths[pos] > 0 else "M"

    def source(self, inst: IRInstruction, k: int, lanes: int, allow_inline: bool = True) -> Operand:
        v = inst.operands[k]
        d = self.defs.get(v.id)
        if allow_inline and d is not None and d.opcode == "rdregion":
            src = d.operands[0]
            elem = d.result.elem
            size = elem.size_bytes
            idx = d.region.indices(size)
            if len(idx) == 1 and lanes > 1:
                idx = np.repeat(idx, lanes)
            const = None
            src_def = self.defs.get(src.id)
            if src_def is not None and src_def.opcode == "const":
                const = np.frombuffer(src_def.const, dtype=elem.dtype)[idx]
            return Operand(src, elem, idx * size, const)
        op = whole(v, lanes)
        if d is not None and d.opcode == "const":
            values = d.const_values()
            op.const = np.repeat(values, lanes) if len(values) == 1 else values
        return op

    def bales(self) -> List[Bale]:
        self.plan()
        out: List[Bale] = []
        mask_lanes: List[int] = []
        for pos, inst in enumerate(self.module.instructions):
            op = inst.opcode
            res = inst.result
            common = {"iid": inst.iid, "line": inst.line, "depth": self.depths[pos]}
            if op == "const":
                if res.id in self.materialized:
                    src = whole(res)
                    src.const = inst.const_values()
                    src.value = None
                    out.append(Bale("mov", res.length, whole(res), [src], mode="NM", attrs={"materialize": True}, **common))
            elif op == "param":
                out.append(Bale("mov", 1, whole(res), [Operand(None, res.elem, np.zeros(1, dtype=np.int64), special=f"arg.{inst.attrs['name']}")], mode="NM", **common))
            elif op in ("thread_x", "thread_y"):
                out.append(Bale("mov", 1, whole(res), [Operand(None, res.elem, np.zeros(1, dtype=np.int64), special=op)], mode="NM", **common))
            elif op == "rdregion":
                if res.id in self.materialized:
                    src = self.source_of_read(inst)
                    out.append(Bale("mov", res.length, whole(res), [src], mode=self.mode(pos, False), **common))
            elif op in LANE_OPS:
                if inst.iid in self.dst_baled:
                    continue
                srcs = [self.source(inst, k, res.length, allow_inline=not (op == "sel" and k == 0)) for k in range(len(inst.operands))]
                attrs = {"rel": inst.attrs["rel"]} if op == "cmp" else {}
                out.append(Bale(op, res.length, whole(res), srcs, mode=self.mode(pos, False), attrs=attrs, **common))
            elif op == "wrregion":
                out.append(self.write_bale(pos, inst, common))
            elif op == "iselect_gather":
                base, idx = inst.operands
                out.append(
                    Bale("gather", res.length, whole(res), [whole(base), whole(idx, res.length)], mode=self.mode(pos, False), attrs={"len": base.length}, **common)
                )
            elif op in ("mask_any", "mask_all"):
                src = inst.operands[0]
                out.append(Bale(op[5:], src.length, whole(res), [whole(src)], mode=self.mode(pos, False), **common))
            elif op in ("media_read", "media_write", "oword_read", "oword_write"):
                attrs = dict(inst.attrs)
                scalars = 2 if op.startswith("media") else 1
                srcs = [self.source(inst, k, 1, allow_inline=False) for k in range(scalars)]
                if op.endswith("write"):
                    srcs.append(whole(inst.operands[scalars]))
                dst = whole(res) if res is not None else None
                out.append(Bale(op, 1, dst, srcs, mode="NM", attrs=attrs, **common))
            elif op in ("scatter_read", "scatter_write"):
                lanes = inst.operands[1].length
                srcs = [self.source(inst, 0, 1, allow_inline=False), whole(inst.operands[1])]
                if op == "scatter_write":
                    srcs.append(whole(inst.operands[2], lanes))
                dst = whole(res) if res is not None else None
                out.append(Bale(op, lanes, dst, srcs, mode=self.mode(pos, self.depths[pos] > 0), attrs=dict(inst.attrs), **common))
            elif op == "atomic":
                lanes = inst.operands[0].length
                srcs = [whole(inst.operands[0])] + [self.source(inst, k, lanes, allow_inline=False) for k in range(1, len(inst.operands))]
                dst = whole(res) if res is not None else None
                out.append(Bale("atomic", lanes, dst, srcs, mode=self.mode(pos, self.depths[pos] > 0), attrs=dict(inst.attrs), **common))
            elif op == "simd_if_begin":
                mask = inst.operands[0]
                mask_lanes.append(mask.length)
                out.append(Bale("simd_if", mask.length, None, [whole(mask)], mode="M", **common))
            elif op == "simd_else":
                out.append(Bale("simd_else", mask_lanes[-1], mode="M", **common))
            elif op == "simd_if_end":
                out.append(Bale("simd_endif", mask_lanes.pop(), mode="M", **common))
            else:
                raise ValueError(f"instruction {inst.iid}: no bale for opcode '{op}'")
        return out

    def source_of_read(self, rd: IRInstruction) -> Operand:
        src = rd.operands[0]
        elem = rd.result.elem
        size = elem.size_bytes
        idx = rd.region.indices(size)
        const = None
        src_def = self.defs.get(src.id)
        if src_def is not None and src_def.opcode == "const":
            const = np.frombuffer(src_def.const, dtype=elem.dtype)[idx]
        return Operand(src, elem, idx * size, const)

    def write_bale(self, pos: int, wr: IRInstruction, common: dict) -> Bale:
        old, new = wr.operands[:2]
        res = wr.result
        size = new.elem.size_bytes
        lanes = wr.region.length
        dst = Operand(res, new.elem, wr.region.indices(size) * size)
        pred = whole(wr.operands[2], lanes) if wr.is_predicated else None
        mode = self.mode(pos, wr.is_masked)
        main = self.defs.get(new.id)
        if main is not None and main.iid in self.dst_baled:
            srcs = [self.source(main, k, lanes, allow_inline=not (main.opcode == "sel" and k == 0)) for k in range(len(main.operands))]
            attrs = {"rel": main.attrs["rel"]} if main.opcode == "cmp" else {}
            return Bale(main.opcode, lanes, dst, srcs, pred, mode, attrs, old, **common)
        return Bale("mov", lanes, dst, [self.source(wr, 1, lanes)], pred, mode, {}, old, **common)


def analyze_bales(module: IRModule) -> BaleProgram:
    """Group the instructions of an optimized module into bales, in program order."""
    baler = _Baler(module)
    bales = baler.bales()
    logger.debug(f"Baled {len(module.instructions)} instructions of {module.name} into {len(bales)} bales")
    return BaleProgram(module, bales, baler.materialized, module.next_value, baler.views)
