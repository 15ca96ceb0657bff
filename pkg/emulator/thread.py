"""
Per-thread machine state: the byte-addressable register file and the
execution-mask stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from backend.machine import DEFAULT_MACHINE, DstDesc, RegionDesc
from errors import EmulatorFault

FULL_MASK = (1 << 32) - 1


@dataclass
class MaskFrame:
    parent: int
    cond: int
    lanes: int


@dataclass
class ThreadState:
    thread_x: int = 0
    thread_y: int = 0
    args: Dict[str, object] = field(default_factory=dict)
    grf: np.ndarray = field(default_factory=lambda: np.zeros(DEFAULT_MACHINE.file_bytes, dtype=np.uint8))
    mask_stack: List[int] = field(default_factory=lambda: [FULL_MASK])
    frames: List[MaskFrame] = field(default_factory=list)

    @property
    def mask(self) -> int:
        return self.mask_stack[-1]

    def lanes(self, first: int, count: int) -> np.ndarray:
        word = self.mask >> first
        return ((word >> np.arange(count, dtype=np.int64)) & 1).astype(bool)


def _byte_index(state: ThreadState, offsets: np.ndarray, size: int) -> np.ndarray:
    if offsets.min() < 0 or offsets.max() + size > state.grf.size:
        last = state.grf.size // DEFAULT_MACHINE.grf_bytes - 1
        raise EmulatorFault(f"register access reaches past r{last}")
    return (offsets[:, None] + np.arange(size)[None, :]).reshape(-1)


def region_read(state: ThreadState, rd: RegionDesc, exec_size: int) -> np.ndarray:
    """Gather ``exec_size`` elements through a ``<V;W,H>`` region."""
    size = rd.elem.size_bytes
    raw = state.grf[_byte_index(state, rd.offsets(exec_size), size)]
    return raw.view(rd.elem.dtype).copy()


def region_write(state: ThreadState, dst: DstDesc, exec_size: int, values: np.ndarray, active: Optional[np.ndarray] = None):
    """Scatter lane values to a strided destination; lanes with ``active`` false are left alone."""
    size = dst.elem.size_bytes
    values = np.ascontiguousarray(np.asarray(values, dtype=dst.elem.dtype).reshape(-1))
    offsets = dst.offsets(exec_size)
    if active is not None:
        keep = np.asarray(active, dtype=bool)
        offsets, values = offsets[keep], values[keep]
        if not offsets.size:
            return
    state.grf[_byte_index(state, offsets, size)] = values.view(np.uint8)


def read_bytes(state: ThreadState, base: int, nbytes: int) -> np.ndarray:
    return state.grf[_byte_index(state, np.array([base]), nbytes)].copy()


def write_bytes(state: ThreadState, base: int, data: np.ndarray):
    data = np.ascontiguousarray(data).view(np.uint8).reshape(-1)
    state.grf[_byte_index(state, np.array([base]), data.size)] = data
