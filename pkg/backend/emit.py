"""
Assembly emission: allocated pieces become VISAInstructions with concrete
``rN.S`` operands, and programs print to the textual form documented in
docs/visa.md.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

from backend.legalize import LegalProgram, Piece, VDst, VSrc
from backend.machine import DEFAULT_MACHINE, DstDesc, Immediate, MachineConfig, RegionDesc, Special
from backend.regalloc import Allocation
from elemtypes import ElemType

logger = logging.getLogger(__name__)

Source = Union[RegionDesc, Immediate, Special]


@dataclass(frozen=True)
class VISAInstruction:
    opcode: str
    exec_size: int
    mask: Optional[int]
    dst: Optional[DstDesc] = None
    srcs: Tuple[Source, ...] = ()
    pred: Optional[RegionDesc] = None
    surface: Optional[str] = None
    line: int = field(default=0, compare=False)

    @property
    def mask_text(self) -> str:
        return "NM" if self.mask is None else f"M{self.mask}"

    @property
    def base_opcode(self) -> str:
        return self.opcode.split(".")[0]

    def text(self) -> str:
        parts = []
        if self.pred is not None:
            parts.append(f"({self.pred})")
        parts.append(self.opcode)
        parts.append(f"({self.exec_size}|{self.mask_text})")
        if self.surface is not None:
            parts.append(f"@{self.surface}")
        if not self.base_opcode.startswith("simd_"):
            parts.append(str(self.dst) if self.dst is not None else "null")
        parts.extend(str(s) for s in self.srcs)
        return " ".join(parts)

    def __str__(self) -> str:
        return self.text()


@dataclass(frozen=True)
class VISAProgram:
    name: str
    surfaces: Tuple[Tuple[str, str], ...]
    args: Tuple[Tuple[str, ElemType], ...]
    grf_used: int
    instructions: Tuple[VISAInstruction, ...]

    def text(self) -> str:
        lines = [f".kernel {self.name}"]
        lines += [f".surface {name} {kind}" for name, kind in self.surfaces]
        lines += [f".arg {name} {elem}" for name, elem in self.args]
        lines.append(f".grf {self.grf_used}")
        lines += [f"    {inst.text()}" for inst in self.instructions]
        return "\n".join(lines) + "\n"

    def count(self, opcode: Optional[str] = None) -> int:
        if opcode is None:
            return len(self.instructions)
        return sum(1 for inst in self.instructions if inst.base_opcode == opcode)


class _Emitter:
    def __init__(self, allocation: Allocation, cfg: MachineConfig):
        self.allocation = allocation
        self.cfg = cfg

    def address(self, value, offset: int) -> Tuple[int, int]:
        addr = self.allocation.base[value.id] + offset
        return divmod(addr, self.cfg.grf_bytes)

    def src(self, op) -> Source:
        if isinstance(op, VSrc):
            reg, sub = self.address(op.value, op.offset)
            return RegionDesc(reg, sub, op.v, op.w, op.h, op.elem)
        return op

    def dst(self, op: Optional[VDst]) -> Optional[DstDesc]:
        if op is None:
            return None
        reg, sub = self.address(op.value, op.offset)
        return DstDesc(reg, sub, op.h, op.elem)

    def instruction(self, piece: Piece) -> VISAInstruction:
        pred = self.src(piece.pred) if piece.pred is not None else None
        return VISAInstruction(
            piece.opcode,
            piece.exec_size,
            piece.mask,
            self.dst(piece.dst),
            tuple(self.src(s) for s in piece.srcs),
            pred,
            piece.surface,
            piece.line,
        )


def emit_visa(program: LegalProgram, allocation: Allocation, cfg: MachineConfig = DEFAULT_MACHINE) -> VISAProgram:
    """Attach register numbers to every piece, one instruction per piece."""
    emitter = _Emitter(allocation, cfg)
    module = program.module
    instructions = tuple(emitter.instruction(p) for p in program.pieces)
    surfaces = tuple((p.name, p.surface_kind or "buffer") for p in module.surfaces)
    args = tuple((p.name, p.elem) for p in module.scalar_params)
    logger.debug(f"Emitted {len(instructions)} instructions for {module.name}")
    return VISAProgram(module.name, surfaces, args, allocation.grf_used, instructions)


_REGISTER = re.compile(r"\br(\d+)\.")


def normalize_registers(text: str) -> str:
    """Renumber registers by order of first appearance, so goldens ignore allocation accidents."""
    seen = {}

    def rename(m: "re.Match[str]") -> str:
        reg = m.group(1)
        if reg not in seen:
            seen[reg] = len(seen)
        return f"r{seen[reg]}."

    return _REGISTER.sub(rename, text)
