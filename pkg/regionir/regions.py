"""
Region descriptors and the three region evaluators.

A region is read as ``<vstride;width,hstride>`` plus a byte offset: lane k of
the region addresses element

    offset_bytes / elem_size + (k // width) * vstride + (k % width) * hstride

of the source, where the source is viewed as an array of the region's
element type. Viewing the source through a different element type is how
``format`` reinterpretation reaches the IR without an extra instruction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from elemtypes import ElemType, elem_of_dtype, reinterpret


@dataclass(frozen=True)
class RegionSpec:
    vstride: int
    width: int
    hstride: int
    offset_bytes: int
    length: int

    def indices(self, elem_size: int) -> np.ndarray:
        k = np.arange(self.length, dtype=np.int64)
        base = self.offset_bytes // elem_size
        return base + (k // self.width) * self.vstride + (k % self.width) * self.hstride

    def byte_interval(self, elem_size: int) -> tuple[int, int]:
        idx = self.indices(elem_size)
        return int(idx.min()) * elem_size, (int(idx.max()) + 1) * elem_size

    def rebased(self, delta_bytes: int) -> "RegionSpec":
        return RegionSpec(self.vstride, self.width, self.hstride, self.offset_bytes - delta_bytes, self.length)

    @classmethod
    def identity(cls, length: int) -> "RegionSpec":
        return cls(0, length, 1, 0, length)

    def is_identity(self, source_length: int, elem_size: int) -> bool:
        if self.length != source_length:
            return False
        return bool(np.array_equal(self.indices(elem_size), np.arange(source_length)))

    def __str__(self) -> str:
        return f"<{self.vstride};{self.width},{self.hstride}>@{self.offset_bytes}"


def check_region(spec: RegionSpec, elem_size: int, source_length: int, write: bool = False) -> List[str]:
    """Return a list of problems; empty when the region is in bounds for the source."""
    problems = []
    if spec.width < 1:
        problems.append(f"region width {spec.width} must be at least 1")
        return problems
    if spec.length < 1 or spec.length % spec.width:
        problems.append(f"region length {spec.length} is not a positive multiple of width {spec.width}")
        return problems
    if spec.offset_bytes < 0 or spec.offset_bytes % elem_size:
        problems.append(f"region offset {spec.offset_bytes} is not a non-negative multiple of {elem_size}")
        return problems
    idx = spec.indices(elem_size)
    if idx.min() < 0 or idx.max() >= source_length:
        problems.append(
            f"region {spec} x{spec.length} reaches element {int(idx.max())} of a {source_length}-element source"
        )
    elif write and len(np.unique(idx)) != len(idx):
        problems.append(f"write region {spec} x{spec.length} has repeated destination indices")
    return problems


def _view(values: np.ndarray, elem: Optional[ElemType]) -> np.ndarray:
    if elem is None or values.dtype == elem.dtype:
        return values
    return reinterpret(values, elem)


def rdregion_eval(src: np.ndarray, spec: RegionSpec, elem: Optional[ElemType] = None) -> np.ndarray:
    """Gather ``spec.length`` elements of ``src`` (viewed as ``elem`` when given)."""
    view = _view(np.asarray(src), elem)
    problems = check_region(spec, view.itemsize, view.size)
    if problems:
        raise ValueError(problems[0])
    return view[spec.indices(view.itemsize)].copy()


def wrregion_eval(
    old: np.ndarray,
    new_vals: np.ndarray,
    spec: RegionSpec,
    predicate: Optional[np.ndarray] = None,
    lanes: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Return a copy of ``old`` with the region positions replaced by ``new_vals``.

    ``predicate`` (non-zero = write) and ``lanes`` (boolean execution mask)
    both gate individual region lanes.
    """
    old = np.asarray(old)
    new_vals = np.asarray(new_vals)
    result = old.copy()
    view = _view(result, elem_of_dtype(new_vals.dtype))
    problems = check_region(spec, view.itemsize, view.size, write=True)
    if problems:
        raise ValueError(problems[0])
    if new_vals.size == 1:
        new_vals = np.broadcast_to(new_vals.reshape(-1), (spec.length,))
    if new_vals.size != spec.length:
        raise ValueError(f"wrregion new value has {new_vals.size} elements, region needs {spec.length}")
    active = np.ones(spec.length, dtype=bool)
    if predicate is not None:
        predicate = np.asarray(predicate).reshape(-1)
        if predicate.size == 1:
            predicate = np.broadcast_to(predicate, (spec.length,))
        if predicate.size != spec.length:
            raise ValueError(f"wrregion predicate has {predicate.size} lanes, region needs {spec.length}")
        active &= predicate != 0
    if lanes is not None:
        active &= np.asarray(lanes, dtype=bool)[: spec.length]
    idx = spec.indices(view.itemsize)
    view[idx[active]] = new_vals[active]
    return result


@dataclass(frozen=True)
class SelectSpec:
    """``select<vsize,vstride,hsize,hstride>(origin_row, origin_col)`` in element units."""

    vsize: int
    vstride: int
    hsize: int
    hstride: int
    origin_row: int = 0
    origin_col: int = 0

    def fits(self, rows: int, cols: int) -> bool:
        if min(self.vsize, self.hsize) < 1 or min(self.vstride, self.hstride, self.origin_row, self.origin_col) < 0:
            return False
        return (
            self.origin_row + (self.vsize - 1) * self.vstride < rows
            and self.origin_col + (self.hsize - 1) * self.hstride < cols
        )

    def to_region(self, cols: int, elem_size: int) -> RegionSpec:
        vstride = self.vstride * cols if self.vsize > 1 else 0
        offset = (self.origin_row * cols + self.origin_col) * elem_size
        return RegionSpec(vstride, self.hsize, self.hstride, offset, self.vsize * self.hsize)

    @classmethod
    def vector(cls, size: int, stride: int, origin: int) -> "SelectSpec":
        return cls(1, 0, size, stride, 0, origin)


@dataclass(frozen=True)
class ReplicateSpec:
    """``replicate<k,vs,w,hs>(start)``: block b, lane j reads ``start + b*vs + j*hs``."""

    k: int
    vs: int
    w: int
    hs: int
    start: int = 0

    def fits(self, count: int) -> bool:
        if self.k < 1 or self.w < 1 or min(self.vs, self.hs, self.start) < 0:
            return False
        return self.start + (self.k - 1) * self.vs + (self.w - 1) * self.hs < count

    def to_region(self, elem_size: int) -> RegionSpec:
        return RegionSpec(self.vs, self.w, self.hs, self.start * elem_size, self.k * self.w)


def replicate_eval(src: np.ndarray, spec: ReplicateSpec) -> np.ndarray:
    src = np.asarray(src)
    if not spec.fits(src.size):
        raise ValueError(f"replicate<{spec.k},{spec.vs},{spec.w},{spec.hs}>({spec.start}) is out of bounds")
    return rdregion_eval(src, spec.to_region(src.itemsize))


def compose_indices(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    """Index map of reading ``outer`` positions out of a value gathered by ``inner``."""
    return inner[outer]


def find_region(indices: np.ndarray, elem_size: int) -> Optional[RegionSpec]:
    """Find a single region with non-negative strides reproducing ``indices``."""
    indices = np.asarray(indices, dtype=np.int64)
    n = len(indices)
    if n == 0 or indices[0] < 0:
        return None
    k = np.arange(n)
    for width in range(n, 0, -1):
        if n % width:
            continue
        hstride = int(indices[1] - indices[0]) if width > 1 else 0
        vstride = int(indices[width] - indices[0]) if n > width else 0
        if hstride < 0 or vstride < 0:
            continue
        candidate = indices[0] + (k // width) * vstride + (k % width) * hstride
        if np.array_equal(candidate, indices):
            return RegionSpec(vstride, width, hstride, int(indices[0]) * elem_size, n)
    return None
