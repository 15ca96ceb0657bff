"""
Reference evaluator for region-IR modules.

This is the semantic oracle every later stage is checked against. Arithmetic
is evaluated on every lane; inside a simd-if region only masked wrregions,
scattered accesses and atomics observe the execution mask.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from elemtypes import D, MASK_TYPE, UD, binary_op, compare, convert, select_lanes
from emulator import memory
from emulator.surfaces import Surface
from errors import SurfaceError
from regionir.ir import ARITH_OPCODES, IRInstruction, IRModule
from regionir.regions import rdregion_eval, wrregion_eval

logger = logging.getLogger(__name__)

PURE_OPCODES = ARITH_OPCODES | {"const", "mov", "cmp", "sel", "mask_any", "mask_all", "rdregion", "wrregion", "iselect_gather"}


def _fit(values: np.ndarray, length: int) -> np.ndarray:
    values = np.asarray(values).reshape(-1)
    if values.size == length:
        return values
    return np.broadcast_to(values, (length,)).copy()


def lanes_of(word: int, length: int) -> np.ndarray:
    return ((word >> np.arange(length, dtype=np.int64)) & 1).astype(bool)


def word_of(values: np.ndarray) -> int:
    bits = np.flatnonzero(np.asarray(values).reshape(-1) != 0)
    return int(sum(1 << int(b) for b in bits))


def evaluate_pure(inst: IRInstruction, operands: Sequence[np.ndarray], lanes: Optional[np.ndarray] = None) -> np.ndarray:
    """Compute the result of a side-effect-free instruction from its operand values."""
    op = inst.opcode
    res = inst.result
    if op == "const":
        return inst.const_values()
    if op == "mov":
        return _fit(convert(operands[0], res.elem), res.length)
    if op in ARITH_OPCODES:
        a, b = (convert(x, res.elem) for x in operands)
        return _fit(binary_op(op, res.elem, a, b), res.length)
    if op == "cmp":
        et = inst.operands[0].elem
        a, b = (convert(x, et) for x in operands)
        return _fit(compare(inst.attrs["rel"], et, a, b), res.length)
    if op == "sel":
        pred, a, b = operands
        length = res.length
        return select_lanes(_fit(pred, length), _fit(convert(a, res.elem), length), _fit(convert(b, res.elem), length)).astype(
            res.elem.dtype
        )
    if op in ("mask_any", "mask_all"):
        nz = np.asarray(operands[0]) != 0
        hit = nz.any() if op == "mask_any" else nz.all()
        return np.array([1 if hit else 0], dtype=MASK_TYPE.dtype)
    if op == "rdregion":
        return rdregion_eval(operands[0], inst.region, res.elem)
    if op == "wrregion":
        pred = operands[2] if len(operands) == 3 else None
        return wrregion_eval(operands[0], operands[1], inst.region, pred, lanes if inst.is_masked else None)
    if op == "iselect_gather":
        base = np.asarray(operands[0]).reshape(-1)
        idx = np.asarray(operands[1]).astype(np.int64).reshape(-1)
        return base[np.mod(idx, base.size)].copy()
    raise ValueError(f"'{op}' is not a pure instruction")


@dataclass
class _MaskFrame:
    parent: int
    cond: int
    current: int
    length: int


class ModuleEvaluator:
    """Runs one thread of a module over shared surfaces."""

    def __init__(
        self,
        module: IRModule,
        surfaces: Mapping[str, Surface],
        thread: Tuple[int, int] = (0, 0),
        args: Optional[Mapping[str, object]] = None,
    ):
        self.module = module
        self.surfaces = surfaces
        self.thread = thread
        self.args = dict(args or {})
        self.values: Dict[int, np.ndarray] = {}
        self.frames: List[_MaskFrame] = []
        self._jumps = _jump_table(module.instructions)

    def _surface(self, inst: IRInstruction) -> Surface:
        name = inst.attrs["surface"]
        if name not in self.surfaces:
            raise SurfaceError(f"surface '{name}' is not bound")
        return self.surfaces[name]

    def _lanes(self, length: int) -> Optional[np.ndarray]:
        if not self.frames:
            return None
        return lanes_of(self.frames[-1].current, length)

    def _scalar(self, value) -> int:
        return int(np.asarray(value).reshape(-1)[0])

    def run(self) -> Mapping[str, Surface]:
        insts = self.module.instructions
        pc = 0
        while pc < len(insts):
            inst = insts[pc]
            jump = self._step(inst, pc)
            if jump is not None:
                self._skip(pc + 1, jump)
            pc = jump if jump is not None else pc + 1
        return self.surfaces

    def _skip(self, start: int, stop: int):
        """Pass over a region whose mask is empty.

        A write with no active lane leaves its old value unchanged, so each
        skipped wrregion forwards its old operand. Constants are bound so
        that forwarded chains rooted in a region-local declaration resolve.
        """
        for inst in self.module.instructions[start:stop]:
            if inst.opcode == "const":
                self.values[inst.result.id] = inst.const_values()
            elif inst.opcode == "wrregion" and inst.operands[0].id in self.values:
                self.values[inst.result.id] = self.values[inst.operands[0].id]

    def _step(self, inst: IRInstruction, pc: int) -> Optional[int]:
        op = inst.opcode
        ops = [self.values[v.id] for v in inst.operands]

        if op == "simd_if_begin":
            cond = word_of(ops[0])
            length = inst.operands[0].length
            parent = self.frames[-1].current if self.frames else (1 << 32) - 1
            frame = _MaskFrame(parent, cond, parent & cond & ((1 << length) - 1), length)
            self.frames.append(frame)
            return self._jumps[pc] if frame.current == 0 else None
        if op == "simd_else":
            frame = self.frames[-1]
            frame.current = frame.parent & ~frame.cond & ((1 << frame.length) - 1)
            return self._jumps[pc] if frame.current == 0 else None
        if op == "simd_if_end":
            self.frames.pop()
            return None

        if op in PURE_OPCODES:
            lanes = self._lanes(inst.region.length) if op == "wrregion" and inst.is_masked else None
            self.values[inst.result.id] = evaluate_pure(inst, ops, lanes)
            return None
        if op == "param":
            name = inst.attrs["name"]
            self.values[inst.result.id] = convert(np.array([self.args.get(name, 0)]), inst.result.elem)
            return None
        if op in ("thread_x", "thread_y"):
            coord = self.thread[0] if op == "thread_x" else self.thread[1]
            self.values[inst.result.id] = np.array([coord], dtype=D.dtype)
            return None

        surface = self._surface(inst)
        if op == "media_read":
            x, y = self._scalar(ops[0]), self._scalar(ops[1])
            raw = memory.media_read_rows(surface, x, y, inst.attrs["width"], inst.attrs["rows"])
            self.values[inst.result.id] = raw.view(inst.result.elem.dtype).copy()
        elif op == "media_write":
            x, y = self._scalar(ops[0]), self._scalar(ops[1])
            memory.media_write_rows(surface, x, y, inst.attrs["width"], inst.attrs["rows"], ops[2])
        elif op == "oword_read":
            raw = memory.oword_read_bytes(surface, self._scalar(ops[0]), inst.result.size_bytes)
            self.values[inst.result.id] = raw.view(inst.result.elem.dtype).copy()
        elif op == "oword_write":
            memory.oword_write_bytes(surface, self._scalar(ops[0]), ops[1])
        elif op == "scatter_read":
            goff = self._scalar(ops[0])
            offsets = convert(ops[1], UD)
            self.values[inst.result.id] = memory.scatter_read(
                surface, goff, offsets, inst.result.elem, self._lanes(offsets.size)
            )
        elif op == "scatter_write":
            goff = self._scalar(ops[0])
            offsets = convert(ops[1], UD)
            data = _fit(ops[2], offsets.size)
            memory.scatter_write(surface, goff, offsets, data, self._lanes(offsets.size))
        elif op == "atomic":
            offsets = convert(ops[0], UD)
            src0 = ops[1] if len(ops) > 1 else None
            src1 = ops[2] if len(ops) > 2 else None
            old = memory.atomic(surface, inst.attrs["op"], offsets, src0, src1, self._lanes(offsets.size))
            if inst.result is not None:
                self.values[inst.result.id] = old
        else:
            raise ValueError(f"instruction {inst.iid}: unknown opcode '{op}'")
        return None


def _jump_table(instructions: Sequence[IRInstruction]) -> Dict[int, int]:
    """Map each simd_if_begin to its else (or end) and each else to its end."""
    jumps: Dict[int, int] = {}
    stack: List[int] = []
    for pc, inst in enumerate(instructions):
        if inst.opcode == "simd_if_begin":
            stack.append(pc)
        elif inst.opcode == "simd_else":
            jumps[stack[-1]] = pc
            stack[-1] = pc
        elif inst.opcode == "simd_if_end":
            jumps[stack.pop()] = pc
    return jumps


def eval_module(
    module: IRModule,
    surfaces: Mapping[str, Surface],
    thread: Tuple[int, int] = (0, 0),
    args: Optional[Mapping[str, object]] = None,
) -> Mapping[str, Surface]:
    """Run one thread; surfaces are updated in place and returned."""
    return ModuleEvaluator(module, surfaces, thread, args).run()


def eval_grid(
    module: IRModule,
    surfaces: Mapping[str, Surface],
    grid: Tuple[int, int],
    args: Optional[Mapping[str, object]] = None,
    order: Optional[Iterable[Tuple[int, int]]] = None,
) -> Mapping[str, Surface]:
    """Run every thread of a grid (row-major, y outer) over shared surfaces."""
    coords = list(order) if order is not None else [(x, y) for y in range(grid[1]) for x in range(grid[0])]
    for thread in coords:
        eval_module(module, surfaces, thread, args)
    return surfaces
