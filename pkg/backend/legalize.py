"""
Legalization: turning bales into machine-sized pieces.

Each lane-wise bale is split, in lane order, into pieces whose execution
size is the largest one for which every operand slice is expressible as a
``<V;W,H>`` region within two registers. Before splitting, byte arithmetic
is promoted to 16 bits, regions that would force single-lane pieces are
un-baled into contiguous temporaries, and region writes are coalesced with
the registers of the value they update.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Set, Tuple, Union

import numpy as np

from backend.baling import LANE_OPS, Bale, BaleProgram, Operand, whole
from backend.machine import DEFAULT_MACHINE, Immediate, MachineConfig, Special, fit_dst_stride, fit_src_region
from elemtypes import MASK_TYPE, UB, UW, W, ElemType
from emulator.memory import MEDIA_MAX_ROWS
from errors import LegalizationError
from regionir.ir import ARITH_OPCODES, IRModule, IRValue

logger = logging.getLogger(__name__)

LANE_MEMORY_OPS = {"scatter_read", "scatter_write", "atomic"}
BLOCK_OPS = {"media_read", "media_write", "oword_read", "oword_write"}
OWORD_CHUNKS = (64, 32, 16)


@dataclass(frozen=True)
class VSrc:
    """Register source: ``value`` viewed as ``elem`` from byte ``offset`` with region ``<v;w,h>``."""

    value: IRValue
    offset: int
    v: int
    w: int
    h: int
    elem: ElemType


@dataclass(frozen=True)
class VDst:
    value: IRValue
    offset: int
    h: int
    elem: ElemType


SourceOperand = Union[VSrc, Immediate, Special]


@dataclass
class Piece:
    opcode: str
    exec_size: int
    mask: Optional[int]  # None = NoMask; otherwise the first lane of the execution mask
    dst: Optional[VDst]
    srcs: Tuple[SourceOperand, ...] = ()
    pred: Optional[VSrc] = None
    surface: Optional[str] = None
    position: int = 0
    line: int = 0


@dataclass
class LegalProgram:
    module: IRModule
    pieces: List[Piece]
    groups: Dict[int, int]
    aligned: Set[int]
    stats: Dict[str, int] = field(default_factory=dict)

    def group_of(self, value: IRValue) -> int:
        return self.groups.get(value.id, value.id)


class _UnionFind:
    def __init__(self):
        self.parent: Dict[int, int] = {}

    def find(self, x: int) -> int:
        root = x
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        self.parent[x] = root
        return root

    def union(self, keep: int, other: int):
        self.parent[self.find(other)] = self.find(keep)


def _is_uniform(values: np.ndarray) -> bool:
    return bool(np.all(values == values[0]))


def _byte_set(offsets: np.ndarray, size: int) -> Set[int]:
    return {int(o) + b for o in offsets for b in range(size)}


class Legalizer:
    def __init__(self, program: BaleProgram, cfg: MachineConfig = DEFAULT_MACHINE):
        self.program = program
        self.cfg = cfg
        self.next_value = program.next_value
        self.uf = _UnionFind()
        self.aligned: Set[int] = set()
        self.stats = {"bales": len(program.bales), "promoted": 0, "unbaled": 0, "copies": 0, "coalesced": 0}
        for view, source in program.views.items():
            self.uf.union(source, view)

    def temp(self, elem: ElemType, length: int) -> IRValue:
        v = IRValue(self.next_value, elem, length, "tmp")
        self.next_value += 1
        return v

    @staticmethod
    def plain_mode(depth: int) -> str:
        return "NM" if depth > 0 else "M"

    # -- operand legality ------------------------------------------------

    def lane_offsets(self, op: Operand, start: int, size: int) -> np.ndarray:
        if op.lanes == 1:
            return np.repeat(op.offsets, size)
        return op.offsets[start : start + size]

    def immediate(self, op: Operand, start: int, size: int) -> bool:
        if op.const is None:
            return False
        values = op.const if len(op.const) == 1 else op.const[start : start + size]
        return _is_uniform(values)

    def fits(self, value: IRValue, first: int, span: int) -> bool:
        if span > self.cfg.max_operand_bytes:
            return False
        if value.size_bytes >= self.cfg.grf_bytes:
            return first % self.cfg.grf_bytes + span <= self.cfg.max_operand_bytes
        return True

    def src_ok(self, op: Operand, start: int, size: int) -> bool:
        if op.special is not None or self.immediate(op, start, size):
            return True
        if op.value is None:
            return False
        offs = self.lane_offsets(op, start, size)
        if fit_src_region(offs, op.elem.size_bytes, self.cfg) is None:
            return False
        return self.fits(op.value, int(offs.min()), int(offs.max() - offs.min()) + op.elem.size_bytes)

    def dst_ok(self, op: Operand, start: int, size: int) -> bool:
        offs = self.lane_offsets(op, start, size)
        if fit_dst_stride(offs, op.elem.size_bytes, self.cfg) is None:
            return False
        return self.fits(op.value, int(offs[0]), int(offs[-1] - offs[0]) + op.elem.size_bytes)

    def legal(self, bale: Bale, start: int, size: int) -> bool:
        srcs = bale.srcs
        if bale.opcode == "gather":
            srcs = srcs[1:]
        if not all(self.src_ok(op, start, size) for op in srcs):
            return False
        if bale.pred is not None and not self.src_ok(bale.pred, start, size):
            return False
        if bale.dst is not None and bale.opcode not in ("any", "all"):
            return self.dst_ok(bale.dst, start, size)
        return True

    def plan(self, bale: Bale) -> List[Tuple[int, int]]:
        """Greedy lane split: at each start take the largest legal execution size."""
        cap = self.cfg.max_message_lanes if bale.opcode in LANE_MEMORY_OPS else max(self.cfg.exec_sizes)
        out = []
        start = 0
        while start < bale.lanes:
            for size in self.cfg.exec_sizes:
                if size <= cap and start + size <= bale.lanes and self.legal(bale, start, size):
                    break
            else:
                raise LegalizationError(f"instruction {bale.iid}: lane {start} of '{bale.opcode}' has no legal region")
            out.append((start, size))
            start += size
        return out

    # -- bale rewrites ---------------------------------------------------

    def copy_bale(self, src: Operand, lanes: int, like: Bale) -> Tuple[Bale, Operand]:
        tmp = self.temp(src.elem, lanes)
        copy = Bale("mov", lanes, whole(tmp), [src], mode=self.plain_mode(like.depth), iid=like.iid, line=like.line, depth=like.depth)
        return copy, whole(tmp)

    def promote(self, bale: Bale) -> List[Bale]:
        if bale.opcode not in ARITH_OPCODES | {"sel"} or bale.dst is None or bale.dst.elem.size_bytes != 1:
            return [bale]
        self.stats["promoted"] += 1
        tmp = self.temp(W if bale.dst.elem.signed else UW, bale.lanes)
        main = replace(bale, dst=whole(tmp), pred=None, mode=self.plain_mode(bale.depth), old=None)
        back = Bale("mov", bale.lanes, bale.dst, [whole(tmp)], bale.pred, bale.mode, {}, bale.old, bale.iid, bale.line, bale.depth)
        return [main, back]

    def normalize_mask(self, bale: Bale) -> List[Bale]:
        if bale.opcode != "simd_if":
            return [bale]
        mask = bale.srcs[0]
        if mask.elem.size_bytes * bale.lanes <= self.cfg.max_operand_bytes:
            return [bale]
        tmp = self.temp(MASK_TYPE, bale.lanes)
        zero = Operand(None, mask.elem, np.zeros(bale.lanes, dtype=np.int64), np.zeros(bale.lanes, dtype=mask.elem.dtype))
        test = Bale("cmp", bale.lanes, whole(tmp), [mask, zero], mode=self.plain_mode(bale.depth - 1), attrs={"rel": "ne"}, iid=bale.iid, line=bale.line, depth=bale.depth - 1)
        return [test, replace(bale, srcs=[whole(tmp)])]

    def unbale_narrow(self, bale: Bale) -> List[Bale]:
        """Move irregular regions into temporaries when they would force single-lane pieces."""
        if bale.opcode not in LANE_OPS or bale.lanes < 4 or bale.attrs.get("materialize"):
            return [bale]
        before: List[Bale] = []
        after: List[Bale] = []
        while min(size for _, size in self.plan(bale)) == 1:
            best = None
            for k, src in enumerate(bale.srcs):
                if src.value is None or src.is_whole() or src.lanes == 1 or self.immediate(src, 0, bale.lanes):
                    continue
                candidate = whole(IRValue(-1, src.elem, bale.lanes))
                trial = replace(bale, srcs=[candidate if j == k else s for j, s in enumerate(bale.srcs)])
                count = len(self.plan(trial))
                if best is None or count < best[0]:
                    best = (count, k)
            if best is not None and best[0] < len(self.plan(bale)):
                k = best[1]
                copy, operand = self.copy_bale(bale.srcs[k], bale.lanes, bale)
                before.append(copy)
                bale = replace(bale, srcs=[operand if j == k else s for j, s in enumerate(bale.srcs)])
                self.stats["unbaled"] += 1
                continue
            if bale.dst is not None and not bale.dst.is_whole():
                candidate = replace(bale, dst=whole(IRValue(-1, bale.dst.elem, bale.lanes)), pred=None)
                if len(self.plan(candidate)) < len(self.plan(bale)):
                    tmp = self.temp(bale.dst.elem, bale.lanes)
                    trial = replace(bale, dst=whole(tmp), pred=None, mode=self.plain_mode(bale.depth), old=None)
                    after.append(Bale("mov", bale.lanes, bale.dst, [whole(tmp)], bale.pred, bale.mode, {}, bale.old, bale.iid, bale.line, bale.depth))
                    bale = trial
                    self.stats["unbaled"] += 1
                    continue
            break
        return before + [bale] + after

    # -- register coalescing -----------------------------------------------

    @staticmethod
    def reads(bale: Bale) -> List[Operand]:
        ops = [op for op in bale.srcs if op.value is not None and not (op.const is not None and _is_uniform(op.const))]
        if bale.pred is not None:
            ops.append(bale.pred)
        return ops

    def coalesce(self, bales: List[Bale]) -> List[Bale]:
        # liveness is per view class: a value and every view of it
        views = {vid: self.uf.find(vid) for vid in list(self.uf.parent)}
        last_read: Dict[int, int] = {}
        defined: Dict[int, int] = {}
        for i, bale in enumerate(bales):
            for op in self.reads(bale):
                last_read[views.get(op.value.id, op.value.id)] = i
            if bale.old is not None:
                last_read[views.get(bale.old.id, bale.old.id)] = i
            if bale.dst is not None:
                defined.setdefault(views.get(bale.dst.value.id, bale.dst.value.id), i)
        inserts: Dict[int, List[Bale]] = {}
        for i, bale in enumerate(bales):
            if bale.old is None:
                continue
            old = views.get(bale.old.id, bale.old.id)
            if last_read.get(old, -1) <= i:
                self.uf.union(bale.old.id, bale.dst.value.id)
                self.stats["coalesced"] += 1
                continue
            at = self.hoist_point(bales, i, defined.get(old, -1))
            copy = Bale("mov", bale.old.length, whole(bale.dst.value), [whole(bale.old)], mode="NM", iid=bale.iid, line=bale.line)
            inserts.setdefault(at, []).append(copy)
            self.stats["copies"] += 1
        out: List[Bale] = []
        for i, bale in enumerate(bales):
            out.extend(inserts.get(i, ()))
            out.append(bale)
        return out

    @staticmethod
    def hoist_point(bales: List[Bale], at: int, def_pos: int) -> int:
        """Outermost simd_if enclosing ``at`` that opens after ``def_pos``, else ``at`` itself."""
        stack: List[int] = []
        for i in range(at):
            if bales[i].opcode == "simd_if":
                stack.append(i)
            elif bales[i].opcode == "simd_endif":
                stack.pop()
        for begin in stack:
            if begin > def_pos:
                return begin
        return at

    def break_hazards(self, bales: List[Bale]) -> List[Bale]:
        """Copy sources a multi-piece in-place write would overwrite before a later piece reads them."""
        out: List[Bale] = []
        for bale in bales:
            if bale.old is None or bale.dst is None or self.uf.find(bale.old.id) != self.uf.find(bale.dst.value.id):
                out.append(bale)
                continue
            plan = self.plan(bale)
            if len(plan) == 1:
                out.append(bale)
                continue
            group = self.uf.find(bale.old.id)
            hazards: Set[int] = set()
            written: Set[int] = set()
            for start, size in plan:
                for k, src in enumerate(bale.srcs):
                    if src.value is not None and self.uf.find(src.value.id) == group and not self.immediate(src, start, size):
                        if _byte_set(self.lane_offsets(src, start, size), src.elem.size_bytes) & written:
                            hazards.add(k)
                written |= _byte_set(self.lane_offsets(bale.dst, start, size), bale.dst.elem.size_bytes)
            srcs = list(bale.srcs)
            for k in sorted(hazards):
                copy, srcs[k] = self.copy_bale(srcs[k], bale.lanes, bale)
                out.append(copy)
                self.stats["unbaled"] += 1
            out.append(replace(bale, srcs=srcs))
        return out

    # -- pieces --------------------------------------------------------------

    def vsrc(self, op: Operand, start: int, size: int) -> SourceOperand:
        if op.special is not None:
            return Special(op.special, op.elem)
        if self.immediate(op, start, size):
            return Immediate.of(op.const[0 if len(op.const) == 1 else start], op.elem)
        offs = self.lane_offsets(op, start, size)
        v, w, h = fit_src_region(offs, op.elem.size_bytes, self.cfg)
        return VSrc(op.value, int(offs[0]), v, w, h, op.elem)

    def vdst(self, op: Operand, start: int, size: int) -> VDst:
        offs = self.lane_offsets(op, start, size)
        return VDst(op.value, int(offs[0]), fit_dst_stride(offs, op.elem.size_bytes, self.cfg), op.elem)

    @staticmethod
    def mask(bale: Bale, start: int) -> Optional[int]:
        if bale.mode == "NM":
            return None
        return start if bale.mode == "Mc" else 0

    def pieces(self, bale: Bale, position: int) -> List[Piece]:
        op = bale.opcode
        surface = bale.attrs.get("surface")
        common = {"position": position, "line": bale.line}
        if op in ("simd_if", "simd_else", "simd_endif"):
            srcs = (self.vsrc(bale.srcs[0], 0, bale.lanes),) if bale.srcs else ()
            return [Piece(op, bale.lanes, 0, None, srcs, **common)]
        if op in BLOCK_OPS:
            return self.block_pieces(bale, common)
        out = []
        for start, size in self.plan(bale):
            if op == "gather":
                base = bale.srcs[0].value
                srcs = (VSrc(base, 0, 1, 1, 0, base.elem), self.vsrc(bale.srcs[1], start, size), Immediate.of(bale.attrs["len"], UW))
                dst = self.vdst(bale.dst, start, size)
            elif op in ("any", "all"):
                srcs = (self.vsrc(bale.srcs[0], start, size),)
                if start:
                    srcs += (VSrc(bale.dst.value, 0, 0, 1, 0, MASK_TYPE),)
                dst = VDst(bale.dst.value, 0, 1, MASK_TYPE)
            else:
                srcs = tuple(self.vsrc(s, start, size) for s in bale.srcs)
                dst = self.vdst(bale.dst, start, size) if bale.dst is not None else None
            pred = self.vsrc(bale.pred, start, size) if bale.pred is not None else None
            name = op
            if op == "cmp":
                name = f"cmp.{bale.attrs['rel']}"
            elif op == "atomic":
                name = f"atomic.{bale.attrs['op']}"
            out.append(Piece(name, size, self.mask(bale, start), dst, srcs, pred, surface, **common))
        return out

    def block_pieces(self, bale: Bale, common: dict) -> List[Piece]:
        op = bale.opcode
        surface = bale.attrs["surface"]
        writes = op.endswith("write")
        payload = bale.srcs[-1].value if writes else bale.dst.value
        self.aligned.add(payload.id)
        scalars = tuple(self.vsrc(s, 0, 1) for s in bale.srcs[: 2 if op.startswith("media") else 1])
        chunks: List[Tuple[Tuple[SourceOperand, ...], int, int]] = []
        if op.startswith("media"):
            width, rows = bale.attrs["width"], bale.attrs["rows"]
            step = max(1, min(MEDIA_MAX_ROWS, self.cfg.max_operand_bytes // width))
            for r in range(0, rows, step):
                n = min(step, rows - r)
                imms = (Immediate.of(r, UW), Immediate.of(n, UW), Immediate.of(width, UW))
                chunks.append((imms, r * width, n * width))
        else:
            start, total = 0, payload.size_bytes
            while start < total:
                size = next(c for c in OWORD_CHUNKS if c <= total - start)
                chunks.append(((Immediate.of(start, UW), Immediate.of(size, UW)), start, size))
                start += size
        out = []
        for imms, offset, nbytes in chunks:
            if writes:
                srcs = scalars + imms + (VSrc(payload, offset, 1, 1, 0, UB),)
                dst = None
            else:
                srcs = scalars + imms
                dst = VDst(payload, offset, 1, UB)
            out.append(Piece(op, 1, None, dst, srcs, None, surface, **common))
        return out

    def run(self) -> LegalProgram:
        bales: List[Bale] = []
        for bale in self.program.bales:
            for b in self.normalize_mask(bale):
                for p in self.promote(b):
                    bales.extend(self.unbale_narrow(p))
        bales = self.coalesce(bales)
        bales = self.break_hazards(bales)
        pieces: List[Piece] = []
        for position, bale in enumerate(bales):
            pieces.extend(self.pieces(bale, position))
        for piece in pieces:
            if piece.opcode.split(".")[0] in LANE_MEMORY_OPS:
                operands = [s for s in piece.srcs if isinstance(s, VSrc)] + ([piece.dst] if piece.dst is not None else [])
                self.aligned.update(op.value.id for op in operands)
        groups = {vid: self.uf.find(vid) for vid in self.uf.parent}
        aligned = {groups.get(vid, vid) for vid in self.aligned}
        self.stats["pieces"] = len(pieces)
        logger.debug(f"Legalized {self.program.module.name}: " + ", ".join(f"{k}={v}" for k, v in self.stats.items()))
        return LegalProgram(self.program.module, pieces, groups, aligned, self.stats)


def legalize(program: BaleProgram, cfg: MachineConfig = DEFAULT_MACHINE) -> LegalProgram:
    """Split bales into legal pieces and decide in-place register reuse."""
    return Legalizer(program, cfg).run()
