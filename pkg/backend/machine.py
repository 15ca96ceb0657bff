"""
Machine description and operand descriptors of the target register file.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from elemtypes import ElemType, from_bits, to_bits


@dataclass(frozen=True)
class MachineConfig:
    grf_bytes: int = 32
    grf_count: int = 128
    max_operand_grfs: int = 2
    exec_sizes: Tuple[int, ...] = (32, 16, 8, 4, 2, 1)
    region_widths: Tuple[int, ...] = (1, 2, 4, 8, 16)
    src_strides: Tuple[int, ...] = (0, 1, 2, 4, 8, 16, 32)
    dst_strides: Tuple[int, ...] = (1, 2, 4)
    max_message_lanes: int = 16

    @property
    def file_bytes(self) -> int:
        return self.grf_bytes * self.grf_count

    @property
    def max_operand_bytes(self) -> int:
        return self.grf_bytes * self.max_operand_grfs


DEFAULT_MACHINE = MachineConfig()


@dataclass(frozen=True)
class RegionDesc:
    """Source operand ``rR.S<V;W,H>:t``; lane k reads byte S + ((k//W)*V + (k%W)*H) * size of register R."""

    reg: int
    subreg: int
    v: int
    w: int
    h: int
    elem: ElemType

    @property
    def base(self) -> int:
        return self.reg * DEFAULT_MACHINE.grf_bytes + self.subreg

    def offsets(self, exec_size: int) -> np.ndarray:
        k = np.arange(exec_size, dtype=np.int64)
        return self.base + ((k // self.w) * self.v + (k % self.w) * self.h) * self.elem.size_bytes

    def span(self, exec_size: int) -> int:
        offs = self.offsets(exec_size)
        return int(offs.max() - offs.min()) + self.elem.size_bytes

    def __str__(self) -> str:
        return f"r{self.reg}.{self.subreg}<{self.v};{self.w},{self.h}>:{self.elem}"


@dataclass(frozen=True)
class DstDesc:
    """Destination operand ``rR.S<H>:t``."""

    reg: int
    subreg: int
    h: int
    elem: ElemType

    @property
    def base(self) -> int:
        return self.reg * DEFAULT_MACHINE.grf_bytes + self.subreg

    def offsets(self, exec_size: int) -> np.ndarray:
        return self.base + np.arange(exec_size, dtype=np.int64) * self.h * self.elem.size_bytes

    def span(self, exec_size: int) -> int:
        return (exec_size - 1) * self.h * self.elem.size_bytes + self.elem.size_bytes

    def __str__(self) -> str:
        return f"r{self.reg}.{self.subreg}<{self.h}>:{self.elem}"


@dataclass(frozen=True)
class Immediate:
    bits: int
    elem: ElemType

    @classmethod
    def of(cls, value, elem: ElemType) -> "Immediate":
        return cls(to_bits(value, elem), elem)

    @property
    def value(self):
        return from_bits(self.bits, self.elem)

    def __str__(self) -> str:
        return f"0x{self.bits:X}:{self.elem}"


@dataclass(frozen=True)
class Special:
    """Thread-invariant sources: ``%thread_x``, ``%thread_y`` and ``%arg.NAME``."""

    name: str
    elem: ElemType

    def __str__(self) -> str:
        return f"%{self.name}:{self.elem}"


def fit_src_region(offsets: Sequence[int], elem_size: int, cfg: MachineConfig = DEFAULT_MACHINE) -> Optional[Tuple[int, int, int]]:
    """Find ``(v, w, h)`` reproducing the lane byte offsets, relative to lane 0, with legal strides."""
    offs = np.asarray(offsets, dtype=np.int64)
    n = len(offs)
    if (offs - offs[0]).min() < 0 or np.any((offs - offs[0]) % elem_size):
        return None
    rel = (offs - offs[0]) // elem_size
    if not rel.any():
        return (0, 1, 0)
    k = np.arange(n)
    widths = [min(8, n)] + [w for w in (16, 4, 2, 1) if w != min(8, n)]
    for w in widths:
        if w > n or n % w or w not in cfg.region_widths:
            continue
        h = int(rel[1]) if w > 1 else 0
        if n > w:
            v = int(rel[w])
        else:
            v = w * h if w * h in cfg.src_strides else 0
        if h not in cfg.src_strides or v not in cfg.src_strides:
            continue
        if np.array_equal((k // w) * v + (k % w) * h, rel):
            return (v, w, h)
    return None


def fit_dst_stride(offsets: Sequence[int], elem_size: int, cfg: MachineConfig = DEFAULT_MACHINE) -> Optional[int]:
    offs = np.asarray(offsets, dtype=np.int64)
    if len(offs) == 1:
        return 1
    step = int(offs[1] - offs[0])
    if step <= 0 or step % elem_size or step // elem_size not in cfg.dst_strides:
        return None
    if not np.array_equal(offs - offs[0], np.arange(len(offs)) * step):
        return None
    return step // elem_size
