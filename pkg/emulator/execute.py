"""
Instruction semantics for one thread.

Sources are converted to the computation type (the destination type for
arithmetic and sel, the first source type for cmp), the operation is applied
on every lane, and the result is written under the execution mask and the
optional predicate. Messages (block, scattered and atomic accesses) go
through the same surface primitives as the region-IR evaluator.
"""

from __future__ import annotations

import logging
from collections import Counter
from typing import Callable, Dict, List, Mapping, Optional

import numpy as np

from backend.emit import Source, VISAInstruction, VISAProgram
from backend.machine import Immediate, RegionDesc, Special
from elemtypes import MASK_TYPE, UD, binary_op, compare, convert
from emulator import memory
from emulator.surfaces import Surface
from emulator.thread import MaskFrame, ThreadState, read_bytes, region_read, region_write, write_bytes
from errors import EmulatorFault, SurfaceError
from regionir.ir import ARITH_OPCODES

logger = logging.getLogger(__name__)


def read_source(state: ThreadState, src: Source, exec_size: int) -> np.ndarray:
    if isinstance(src, RegionDesc):
        return region_read(state, src, exec_size)
    if isinstance(src, Immediate):
        return np.full(exec_size, src.value, dtype=src.elem.dtype)
    if isinstance(src, Special):
        if src.name == "thread_x":
            value = state.thread_x
        elif src.name == "thread_y":
            value = state.thread_y
        elif src.name.startswith("arg."):
            value = state.args.get(src.name[4:], 0)
        else:
            raise EmulatorFault(f"unknown special register %{src.name}")
        return np.full(exec_size, convert(np.array([value]), src.elem)[0], dtype=src.elem.dtype)
    raise EmulatorFault(f"bad source operand {src!r}")


def scalar(state: ThreadState, src: Source) -> int:
    return int(read_source(state, src, 1)[0])


def active_lanes(state: ThreadState, inst: VISAInstruction) -> np.ndarray:
    """Lanes the instruction may write: the mask slice it names, narrowed by its predicate."""
    lanes = np.ones(inst.exec_size, dtype=bool) if inst.mask is None else state.lanes(inst.mask, inst.exec_size)
    if inst.pred is not None:
        lanes &= region_read(state, inst.pred, inst.exec_size) != 0
    return lanes


def exec_arith(state: ThreadState, inst: VISAInstruction):
    """Lane-wise instructions: mov, the ALU ops, cmp, sel, gather and the any/all reductions."""
    op = inst.base_opcode
    n = inst.exec_size
    srcs = [read_source(state, s, n) for s in inst.srcs]
    dst = inst.dst
    if op == "mov":
        values = convert(srcs[0], dst.elem)
    elif op in ARITH_OPCODES:
        a, b = (convert(s, dst.elem) for s in srcs)
        values = binary_op(op, dst.elem, a, b)
    elif op == "cmp":
        et = inst.srcs[0].elem
        a, b = (convert(s, et) for s in srcs)
        values = convert(compare(inst.opcode.split(".", 1)[1], et, a, b), dst.elem)
    elif op == "sel":
        values = np.where(srcs[0] != 0, convert(srcs[1], dst.elem), convert(srcs[2], dst.elem))
    elif op == "gather":
        base_rd = inst.srcs[0]
        length = int(inst.srcs[2].value)
        base = read_bytes(state, base_rd.base, length * base_rd.elem.size_bytes).view(base_rd.elem.dtype)
        values = convert(base[np.mod(srcs[1].astype(np.int64), length)], dst.elem)
    elif op in ("any", "all"):
        nz = srcs[0] != 0
        hit = bool(nz.any()) if op == "any" else bool(nz.all())
        if len(srcs) > 1:
            acc = bool(srcs[1][0] != 0)
            hit = hit or acc if op == "any" else hit and acc
        region_write(state, dst, 1, np.array([1 if hit else 0], dtype=MASK_TYPE.dtype), active_lanes(state, inst)[:1])
        return
    else:
        raise EmulatorFault(f"unknown opcode '{inst.opcode}'")
    region_write(state, dst, n, values, active_lanes(state, inst))


class ThreadExecutor:
    """Runs a program for one thread over shared surfaces."""

    def __init__(self, program: VISAProgram, surfaces: Mapping[str, Surface], state: ThreadState, stats: Optional[Counter] = None):
        self.program = program
        self.surfaces = surfaces
        self.state = state
        self.stats = stats if stats is not None else Counter()
        self.jumps = jump_table(program.instructions)
        self.handlers: Dict[str, Callable[[VISAInstruction], None]] = {
            "media_read": self._media_read,
            "media_write": self._media_write,
            "oword_read": self._oword_read,
            "oword_write": self._oword_write,
            "scatter_read": self._scatter_read,
            "scatter_write": self._scatter_write,
            "atomic": self._atomic,
        }

    def surface(self, inst: VISAInstruction) -> Surface:
        if inst.surface not in self.surfaces:
            raise SurfaceError(f"surface '{inst.surface}' is not bound")
        return self.surfaces[inst.surface]

    def run(self) -> ThreadState:
        insts = self.program.instructions
        pc = 0
        while pc < len(insts):
            inst = insts[pc]
            try:
                target = self.step(inst, pc)
            except (EmulatorFault, SurfaceError) as e:
                message = str(e) if isinstance(e, SurfaceError) else e.args[0]
                raise EmulatorFault(message, (self.state.thread_x, self.state.thread_y), pc) from None
            self.stats["instructions"] += 1
            pc = target if target is not None else pc + 1
        if len(self.state.mask_stack) != 1:
            raise EmulatorFault("mask stack unbalanced at kernel exit", (self.state.thread_x, self.state.thread_y))
        return self.state

    def step(self, inst: VISAInstruction, pc: int) -> Optional[int]:
        op = inst.base_opcode
        if op.startswith("simd_"):
            return simd_flow(self.state, inst, self.jumps.get(pc), self.stats)
        handler = self.handlers.get(op)
        if handler is None:
            exec_arith(self.state, inst)
        else:
            handler(inst)
        return None

    # -- messages ----------------------------------------------------------

    def _media_read(self, inst: VISAInstruction):
        x, y, rowoff, rows, width = (scalar(self.state, s) for s in inst.srcs)
        data = memory.media_read_rows(self.surface(inst), x, y + rowoff, width, rows)
        write_bytes(self.state, inst.dst.base, data)
        self.stats["memory.block_reads"] += 1

    def _media_write(self, inst: VISAInstruction):
        x, y, rowoff, rows, width = (scalar(self.state, s) for s in inst.srcs[:5])
        payload = read_bytes(self.state, inst.srcs[5].base, rows * width)
        memory.media_write_rows(self.surface(inst), x, y + rowoff, width, rows, payload)
        self.stats["memory.block_writes"] += 1

    def _oword_read(self, inst: VISAInstruction):
        offset, start, nbytes = (scalar(self.state, s) for s in inst.srcs)
        write_bytes(self.state, inst.dst.base, memory.oword_read(self.surface(inst), offset + start, nbytes))
        self.stats["memory.block_reads"] += 1

    def _oword_write(self, inst: VISAInstruction):
        offset, start, nbytes = (scalar(self.state, s) for s in inst.srcs[:3])
        memory.oword_write(self.surface(inst), offset + start, read_bytes(self.state, inst.srcs[3].base, nbytes))
        self.stats["memory.block_writes"] += 1

    def _mask(self, inst: VISAInstruction) -> np.ndarray:
        if inst.mask is None:
            return np.ones(inst.exec_size, dtype=bool)
        return self.state.lanes(inst.mask, inst.exec_size)

    def _scatter_read(self, inst: VISAInstruction):
        n = inst.exec_size
        goff = scalar(self.state, inst.srcs[0])
        offsets = convert(read_source(self.state, inst.srcs[1], n), UD)
        values = memory.scatter_read(self.surface(inst), goff, offsets, inst.dst.elem, self._mask(inst))
        region_write(self.state, inst.dst, n, values)
        self.stats["memory.scattered_reads"] += 1

    def _scatter_write(self, inst: VISAInstruction):
        n = inst.exec_size
        goff = scalar(self.state, inst.srcs[0])
        offsets = convert(read_source(self.state, inst.srcs[1], n), UD)
        data = read_source(self.state, inst.srcs[2], n)
        memory.scatter_write(self.surface(inst), goff, offsets, data, self._mask(inst))
        self.stats["memory.scattered_writes"] += 1

    def _atomic(self, inst: VISAInstruction):
        n = inst.exec_size
        offsets = convert(read_source(self.state, inst.srcs[0], n), UD)
        operands: List[Optional[np.ndarray]] = [read_source(self.state, s, n) for s in inst.srcs[1:]]
        operands += [None] * (2 - len(operands))
        old = memory.atomic(self.surface(inst), inst.opcode.split(".", 1)[1], offsets, operands[0], operands[1], self._mask(inst))
        if inst.dst is not None:
            region_write(self.state, inst.dst, n, old)
        self.stats["memory.atomics"] += 1


def simd_flow(state: ThreadState, inst: VISAInstruction, target: Optional[int], stats: Counter) -> Optional[int]:
    """Structured mask control flow; returns the jump target when the new mask is empty."""
    op = inst.opcode
    if op == "simd_if":
        cond = read_source(state, inst.srcs[0], inst.exec_size) != 0
        word = int(sum(1 << int(b) for b in np.flatnonzero(cond)))
        lanes = (1 << inst.exec_size) - 1
        state.frames.append(MaskFrame(state.mask, word, inst.exec_size))
        state.mask_stack.append(state.mask & word & lanes)
    elif op == "simd_else":
        frame = state.frames[-1]
        state.mask_stack[-1] = frame.parent & ~frame.cond & ((1 << frame.lanes) - 1)
    elif op == "simd_endif":
        if not state.frames:
            raise EmulatorFault("simd_endif without simd_if")
        state.frames.pop()
        state.mask_stack.pop()
        return None
    else:
        raise EmulatorFault(f"unknown opcode '{op}'")
    if state.mask == 0:
        stats["simd.skipped"] += 1
        return target
    return None


def jump_table(instructions) -> Dict[int, int]:
    """Map each simd_if to its simd_else (or simd_endif) and each simd_else to its simd_endif."""
    jumps: Dict[int, int] = {}
    stack: List[int] = []
    for pc, inst in enumerate(instructions):
        if inst.opcode == "simd_if":
            stack.append(pc)
        elif inst.opcode == "simd_else":
            jumps[stack[-1]] = pc
            stack[-1] = pc
        elif inst.opcode == "simd_endif":
            jumps[stack.pop()] = pc
    return jumps


def run_thread(
    program: VISAProgram,
    surfaces: Mapping[str, Surface],
    thread=(0, 0),
    args: Optional[Mapping[str, object]] = None,
    stats: Optional[Counter] = None,
) -> ThreadState:
    state = ThreadState(thread[0], thread[1], dict(args or {}))
    return ThreadExecutor(program, surfaces, state, stats).run()
