"""
Dead vector removal driven by per-byte liveness.

Liveness flows backward from memory writes, atomics and simd-if masks.
Each value carries one flag per byte; a region read only demands the bytes
it gathers and a region write whose written bytes are all dead is bypassed
in favour of its old value. A kept write none of whose old bytes are
observed starts from a zero constant instead of the removed old value.
"""

from __future__ import annotations

import logging
from typing import Dict, Optional

import numpy as np

from regionir.ir import (
    ARITH_OPCODES,
    MEMORY_READS,
    SIDE_EFFECT_OPCODES,
    SIMD_MARKERS,
    IRBuilder,
    IRInstruction,
    IRModule,
    IRValue,
    substitute,
)

logger = logging.getLogger(__name__)

LANEWISE = ARITH_OPCODES | {"mov", "cmp", "sel"}


class _Liveness:
    def __init__(self):
        self.live: Dict[int, np.ndarray] = {}

    def of(self, v: IRValue) -> Optional[np.ndarray]:
        return self.live.get(v.id)

    def demand_bytes(self, v: IRValue, mask: np.ndarray):
        if not mask.any():
            return
        cur = self.live.get(v.id)
        self.live[v.id] = mask.copy() if cur is None else (cur | mask)

    def demand_all(self, v: IRValue):
        self.demand_bytes(v, np.ones(v.size_bytes, dtype=bool))

    def demand_lanes(self, v: IRValue, lanes: np.ndarray):
        if v.length == 1:
            if lanes.any():
                self.demand_all(v)
            return
        self.demand_bytes(v, np.repeat(lanes, v.elem.size_bytes))

    def demand_elements(self, v: IRValue, indices: np.ndarray, elem_size: int):
        mask = np.zeros(v.size_bytes, dtype=bool)
        if indices.size:
            positions = (indices[:, None] * elem_size + np.arange(elem_size)[None, :]).reshape(-1)
            mask[positions] = True
        self.demand_bytes(v, mask)


def _live_lanes(live: np.ndarray, value: IRValue) -> np.ndarray:
    return live.reshape(value.length, value.elem.size_bytes).any(axis=1)


def remove_dead_vectors(module: IRModule) -> IRModule:
    state = _Liveness()
    keep = [False] * len(module.instructions)
    bypass: Dict[int, IRValue] = {}
    defs = module.definitions()

    for pos in range(len(module.instructions) - 1, -1, -1):
        inst: IRInstruction = module.instructions[pos]
        op = inst.opcode
        res = inst.result
        if op in SIDE_EFFECT_OPCODES or op in SIMD_MARKERS:
            keep[pos] = True
            for v in inst.operands:
                state.demand_all(v)
            continue
        live = state.of(res) if res is not None else None
        if live is None or not live.any():
            continue

        if op == "wrregion":
            old, new = inst.operands[:2]
            size = new.elem.size_bytes
            idx = inst.region.indices(size)
            written = np.zeros(res.size_bytes, dtype=bool)
            written[(idx[:, None] * size + np.arange(size)[None, :]).reshape(-1)] = True
            lanes = live.reshape(-1)[(idx[:, None] * size + np.arange(size)[None, :])].any(axis=1)
            if not lanes.any():
                bypass[res.id] = old
                state.demand_bytes(old, live)
                continue
            keep[pos] = True
            partial = inst.is_masked or inst.is_predicated
            rest = live if partial else live & ~written
            if not rest.any() and defs[old.id].opcode == "const":
                state.demand_all(old)
            else:
                state.demand_bytes(old, rest)
            state.demand_lanes(new, lanes)
            if inst.is_predicated:
                state.demand_lanes(inst.operands[2], lanes)
            continue

        keep[pos] = True
        if op == "rdregion":
            size = res.elem.size_bytes
            lanes = _live_lanes(live, res)
            state.demand_elements(inst.operands[0], inst.region.indices(size)[lanes], size)
        elif op in LANEWISE:
            lanes = _live_lanes(live, res)
            for v in inst.operands:
                state.demand_lanes(v, lanes)
        elif op == "iselect_gather":
            state.demand_all(inst.operands[0])
            state.demand_lanes(inst.operands[1], _live_lanes(live, res))
        elif op in MEMORY_READS or op in ("mask_any", "mask_all"):
            for v in inst.operands:
                state.demand_all(v)

    kept = [inst for inst, k in zip(module.instructions, keep) if k]
    removed = len(module.instructions) - len(kept)
    if removed:
        logger.debug(f"dead: {removed} instruction(s) removed from {module.name}")
    if bypass:
        kept = substitute(kept, bypass)
    return _fill_unobserved(module, kept)


def _fill_unobserved(module: IRModule, kept) -> IRModule:
    defined = {inst.result.id for inst in kept if inst.result is not None}
    b = IRBuilder.continuing(module)
    out = []
    for inst in kept:
        old = inst.operands[0] if inst.opcode == "wrregion" else None
        if old is not None and old.id not in defined:
            blank = b.value(old.elem, old.length, old.name)
            out.append(b.make("const", (), blank, const=bytes(old.size_bytes), line=inst.line))
            inst = inst.with_operands((blank,) + inst.operands[1:])
        out.append(inst)
    return module.with_instructions(out, b)
