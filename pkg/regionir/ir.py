"""
SSA region-IR data structures.

A module is a linear list of instructions; structured SIMD control flow is
expressed with ``simd_if_begin`` / ``simd_else`` / ``simd_if_end`` markers.
Every value is defined exactly once and is typed as element type x length.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from elemtypes import ElemType
from regionir.regions import RegionSpec

ARITH_OPCODES = {"add", "sub", "mul", "div", "rem", "min", "max", "and", "or", "xor", "shl", "shr"}
ELEMENTWISE_OPCODES = ARITH_OPCODES | {"mov", "cmp", "sel"}
MEMORY_READS = {"media_read", "oword_read", "scatter_read"}
MEMORY_WRITES = {"media_write", "oword_write", "scatter_write"}
SIDE_EFFECT_OPCODES = MEMORY_WRITES | {"atomic"}
SIMD_MARKERS = {"simd_if_begin", "simd_else", "simd_if_end"}
OPCODES = (
    ELEMENTWISE_OPCODES
    | MEMORY_READS
    | SIDE_EFFECT_OPCODES
    | SIMD_MARKERS
    | {"const", "param", "thread_x", "thread_y", "mask_any", "mask_all", "rdregion", "wrregion", "iselect_gather"}
)


@dataclass(frozen=True)
class IRValue:
    id: int
    elem: ElemType
    length: int
    name: str = field(default="", compare=False)

    @property
    def size_bytes(self) -> int:
        return self.elem.size_bytes * self.length

    @property
    def label(self) -> str:
        return f"%{self.id}" + (f"({self.name})" if self.name else "")

    def __str__(self) -> str:
        return f"%{self.id}"


@dataclass(frozen=True)
class KernelParam:
    name: str
    kind: str  # "surface" | "scalar"
    elem: Optional[ElemType] = None
    surface_kind: Optional[str] = None  # "image" | "buffer"


@dataclass(frozen=True)
class IRInstruction:
    iid: int
    opcode: str
    result: Optional[IRValue] = None
    operands: Tuple[IRValue, ...] = ()
    region: Optional[RegionSpec] = None
    const: Optional[bytes] = None
    attrs: Mapping[str, Any] = field(default_factory=dict)
    line: int = field(default=0, compare=False)

    def attr(self, key: str, default: Any = None) -> Any:
        return self.attrs.get(key, default)

    def const_values(self) -> np.ndarray:
        return np.frombuffer(self.const, dtype=self.result.elem.dtype).copy()

    @property
    def is_predicated(self) -> bool:
        return self.opcode == "wrregion" and len(self.operands) == 3

    @property
    def is_masked(self) -> bool:
        return bool(self.attrs.get("masked", False))

    def with_operands(self, operands: Iterable[IRValue]) -> "IRInstruction":
        return replace(self, operands=tuple(operands))


@dataclass(frozen=True)
class IRModule:
    name: str
    params: Tuple[KernelParam, ...]
    instructions: Tuple[IRInstruction, ...]
    next_value: int = 0
    next_iid: int = 0

    @property
    def surfaces(self) -> List[KernelParam]:
        return [p for p in self.params if p.kind == "surface"]

    @property
    def scalar_params(self) -> List[KernelParam]:
        return [p for p in self.params if p.kind == "scalar"]

    def definitions(self) -> Dict[int, IRInstruction]:
        return {inst.result.id: inst for inst in self.instructions if inst.result is not None}

    def uses(self) -> Dict[int, List[Tuple[IRInstruction, int]]]:
        table: Dict[int, List[Tuple[IRInstruction, int]]] = {}
        for inst in self.instructions:
            for pos, operand in enumerate(inst.operands):
                table.setdefault(operand.id, []).append((inst, pos))
        return table

    def simd_depths(self) -> List[int]:
        """Nesting depth of every instruction; markers count as inside their region."""
        depths = []
        depth = 0
        for inst in self.instructions:
            if inst.opcode == "simd_if_begin":
                depth += 1
            depths.append(depth)
            if inst.opcode == "simd_if_end":
                depth -= 1
        return depths

    def with_instructions(self, instructions: Sequence[IRInstruction], builder: Optional["IRBuilder"] = None) -> "IRModule":
        next_value = builder.next_value if builder else self.next_value
        next_iid = builder.next_iid if builder else self.next_iid
        return replace(self, instructions=tuple(instructions), next_value=next_value, next_iid=next_iid)


class IRBuilder:
    """Allocates values and instruction ids, and collects instructions in order."""

    def __init__(self, name: str = "", params: Sequence[KernelParam] = (), next_value: int = 0, next_iid: int = 0):
        self.name = name
        self.params = tuple(params)
        self.next_value = next_value
        self.next_iid = next_iid
        self.instructions: List[IRInstruction] = []

    @classmethod
    def continuing(cls, module: IRModule) -> "IRBuilder":
        return cls(module.name, module.params, module.next_value, module.next_iid)

    def value(self, elem: ElemType, length: int, name: str = "") -> IRValue:
        v = IRValue(self.next_value, elem, length, name)
        self.next_value += 1
        return v

    def new_iid(self) -> int:
        iid = self.next_iid
        self.next_iid += 1
        return iid

    def make(
        self,
        opcode: str,
        operands: Sequence[IRValue] = (),
        result: Optional[IRValue] = None,
        region: Optional[RegionSpec] = None,
        const: Optional[bytes] = None,
        attrs: Optional[Mapping[str, Any]] = None,
        line: int = 0,
    ) -> IRInstruction:
        return IRInstruction(self.new_iid(), opcode, result, tuple(operands), region, const, dict(attrs or {}), line)

    def emit(self, opcode: str, operands: Sequence[IRValue] = (), result: Optional[IRValue] = None, **kwargs) -> IRInstruction:
        inst = self.make(opcode, operands, result, **kwargs)
        self.instructions.append(inst)
        return inst

    def op(self, opcode: str, operands: Sequence[IRValue], elem: ElemType, length: int, name: str = "", **kwargs) -> IRValue:
        result = self.value(elem, length, name)
        self.emit(opcode, operands, result, **kwargs)
        return result

    def const(self, elem: ElemType, values, name: str = "", line: int = 0) -> IRValue:
        data = np.asarray(values).astype(elem.dtype).reshape(-1)
        result = self.value(elem, int(data.size), name)
        self.emit("const", (), result, const=data.tobytes(), line=line)
        return result

    def build(self) -> IRModule:
        return IRModule(self.name, self.params, tuple(self.instructions), self.next_value, self.next_iid)


def substitute(instructions: Iterable[IRInstruction], mapping: Mapping[int, IRValue]) -> List[IRInstruction]:
    """Rewrite operands through ``mapping`` (followed transitively)."""

    def resolve(v: IRValue) -> IRValue:
        seen = 0
        while v.id in mapping and seen < 10_000:
            v = mapping[v.id]
            seen += 1
        return v

    out = []
    for inst in instructions:
        if any(op.id in mapping for op in inst.operands):
            inst = inst.with_operands(resolve(op) for op in inst.operands)
        out.append(inst)
    return out
