"""
Surface access semantics shared by the region-IR evaluator and the emulator.

Media blocks clamp reads to the image edge and clip writes. Oword blocks
are 16-byte aligned. Scattered accesses and atomics are per lane; inactive
lanes read as zero and duplicate addresses resolve in ascending lane order.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from elemtypes import UD, ElemType, binary_op, convert
from emulator.surfaces import Surface
from errors import SurfaceError

MEDIA_MAX_WIDTH = 64
MEDIA_MAX_ROWS = 16
OWORD_SIZES = (16, 32, 64, 128)

ATOMIC_ARITY = {
    "inc": 0,
    "dec": 0,
    "add": 1,
    "sub": 1,
    "min": 1,
    "max": 1,
    "imin": 1,
    "imax": 1,
    "and": 1,
    "or": 1,
    "xor": 1,
    "xchg": 1,
    "cmpxchg": 2,
}


def _require(surface: Surface, kind: str, what: str):
    if surface.kind != kind:
        raise SurfaceError(f"{what} needs an {kind} surface, '{surface.name}' is a {surface.kind}")


def media_block_read(surface: Surface, x: int, y: int, width: int, rows: int) -> np.ndarray:
    """Read ``rows`` x ``width`` bytes at byte column ``x``, row ``y``, clamping to the edges."""
    _require(surface, "image", "media block read")
    if not (1 <= width <= MEDIA_MAX_WIDTH and 1 <= rows <= MEDIA_MAX_ROWS):
        raise SurfaceError(f"media block {width}x{rows} exceeds {MEDIA_MAX_WIDTH} bytes x {MEDIA_MAX_ROWS} rows")
    cols = np.clip(int(x) + np.arange(width), 0, surface.width_bytes - 1)
    rr = np.clip(int(y) + np.arange(rows), 0, surface.height - 1)
    return surface.data[np.ix_(rr, cols)].reshape(-1).copy()


def media_block_write(surface: Surface, x: int, y: int, width: int, rows: int, data: np.ndarray) -> None:
    """Write a block; bytes falling outside the image are dropped."""
    _require(surface, "image", "media block write")
    if not (1 <= width <= MEDIA_MAX_WIDTH and 1 <= rows <= MEDIA_MAX_ROWS):
        raise SurfaceError(f"media block {width}x{rows} exceeds {MEDIA_MAX_WIDTH} bytes x {MEDIA_MAX_ROWS} rows")
    block = np.asarray(data, dtype=np.uint8).reshape(rows, width)
    cols = int(x) + np.arange(width)
    rr = int(y) + np.arange(rows)
    keep_c = (cols >= 0) & (cols < surface.width_bytes)
    keep_r = (rr >= 0) & (rr < surface.height)
    if keep_c.any() and keep_r.any():
        surface.data[np.ix_(rr[keep_r], cols[keep_c])] = block[np.ix_(keep_r, keep_c)]


def _check_oword(surface: Surface, offset: int, nbytes: int):
    _require(surface, "buffer", "oword block access")
    if nbytes not in OWORD_SIZES:
        raise SurfaceError(f"oword block of {nbytes} bytes; sizes are {OWORD_SIZES}")
    if offset % 16:
        raise SurfaceError(f"oword offset {offset} on '{surface.name}' is not 16-byte aligned")
    if offset < 0 or offset + nbytes > surface.nbytes:
        raise SurfaceError(f"oword access [{offset}, {offset + nbytes}) is outside '{surface.name}' ({surface.nbytes} bytes)")


def oword_read(surface: Surface, offset: int, nbytes: int) -> np.ndarray:
    _check_oword(surface, int(offset), nbytes)
    return surface.data[int(offset) : int(offset) + nbytes].copy()


def oword_write(surface: Surface, offset: int, data: np.ndarray) -> None:
    data = np.asarray(data, dtype=np.uint8).reshape(-1)
    _check_oword(surface, int(offset), data.size)
    surface.data[int(offset) : int(offset) + data.size] = data


def _lane_addresses(surface: Surface, global_offset: int, offsets, size: int, active: np.ndarray) -> np.ndarray:
    addr = int(global_offset) + np.asarray(offsets, dtype=np.int64).reshape(-1)
    bad = active & ((addr < 0) | (addr + size > surface.nbytes))
    if bad.any():
        lane = int(np.flatnonzero(bad)[0])
        raise SurfaceError(
            f"lane {lane} accesses byte {int(addr[lane])} outside '{surface.name}' ({surface.nbytes} bytes)"
        )
    return addr


def _active(lanes: int, mask: Optional[np.ndarray]) -> np.ndarray:
    if mask is None:
        return np.ones(lanes, dtype=bool)
    return np.asarray(mask, dtype=bool).reshape(-1)[:lanes]


def scatter_read(surface: Surface, global_offset: int, offsets, elem: ElemType, mask=None) -> np.ndarray:
    """Per-lane element loads; inactive lanes produce 0."""
    _require(surface, "buffer", "scattered read")
    offsets = np.asarray(offsets).reshape(-1)
    active = _active(offsets.size, mask)
    addr = _lane_addresses(surface, global_offset, offsets, elem.size_bytes, active)
    out = np.zeros(offsets.size, dtype=elem.dtype)
    raw = out.view(np.uint8).reshape(offsets.size, elem.size_bytes)
    for lane in np.flatnonzero(active):
        a = int(addr[lane])
        raw[lane] = surface.data[a : a + elem.size_bytes]
    return out


def scatter_write(surface: Surface, global_offset: int, offsets, values: np.ndarray, mask=None) -> None:
    """Per-lane element stores in ascending lane order (highest lane wins)."""
    _require(surface, "buffer", "scattered write")
    values = np.ascontiguousarray(values).reshape(-1)
    offsets = np.asarray(offsets).reshape(-1)
    active = _active(offsets.size, mask)
    size = values.itemsize
    addr = _lane_addresses(surface, global_offset, offsets, size, active)
    raw = values.view(np.uint8).reshape(values.size, size)
    for lane in np.flatnonzero(active):
        a = int(addr[lane])
        surface.data[a : a + size] = raw[lane]


def _apply_atomic(op: str, old: np.uint32, src0, src1) -> np.uint32:
    o = np.array([old], dtype=np.uint32)
    if op == "inc":
        return binary_op("add", UD, o, 1)[0]
    if op == "dec":
        return binary_op("sub", UD, o, 1)[0]
    if op == "xchg":
        return np.uint32(src0)
    if op == "cmpxchg":
        return np.uint32(src1) if old == np.uint32(src0) else old
    if op in ("imin", "imax"):
        signed = o.view(np.int32)
        s = np.array([src0], dtype=np.uint32).view(np.int32)
        r = np.minimum(signed, s) if op == "imin" else np.maximum(signed, s)
        return r.view(np.uint32)[0]
    return binary_op(op, UD, o, np.array([src0], dtype=np.uint32))[0]


def atomic(surface: Surface, op: str, offsets, src0=None, src1=None, mask=None) -> np.ndarray:
    """Apply ``op`` to 32-bit words lane by lane; returns the pre-op values (0 for inactive lanes)."""
    _require(surface, "buffer", "atomic")
    if op not in ATOMIC_ARITY:
        raise SurfaceError(f"unknown atomic operation '{op}'")
    offsets = np.asarray(offsets).reshape(-1)
    lanes = offsets.size
    active = _active(lanes, mask)
    addr = _lane_addresses(surface, 0, offsets, 4, active)
    s0 = convert(np.broadcast_to(np.asarray(src0 if src0 is not None else 0).reshape(-1), (lanes,)), UD)
    s1 = convert(np.broadcast_to(np.asarray(src1 if src1 is not None else 0).reshape(-1), (lanes,)), UD)
    words = surface.data.reshape(-1)
    result = np.zeros(lanes, dtype=np.uint32)
    for lane in np.flatnonzero(active):
        a = int(addr[lane])
        if a % 4:
            raise SurfaceError(f"lane {int(lane)}: atomic address {a} is not 4-byte aligned")
        old = words[a : a + 4].view(np.uint32)[0]
        result[lane] = old
        new = _apply_atomic(op, old, s0[lane], s1[lane])
        words[a : a + 4] = np.array([new], dtype=np.uint32).view(np.uint8)
    return result


def media_read_rows(surface: Surface, x: int, y: int, width: int, rows: int) -> np.ndarray:
    """Media read of any row count, issued as blocks of at most MEDIA_MAX_ROWS rows."""
    chunks = [
        media_block_read(surface, x, y + r, width, min(MEDIA_MAX_ROWS, rows - r)) for r in range(0, rows, MEDIA_MAX_ROWS)
    ]
    return np.concatenate(chunks)


def media_write_rows(surface: Surface, x: int, y: int, width: int, rows: int, data: np.ndarray) -> None:
    data = np.ascontiguousarray(data).view(np.uint8).reshape(-1)
    for r in range(0, rows, MEDIA_MAX_ROWS):
        n = min(MEDIA_MAX_ROWS, rows - r)
        media_block_write(surface, x, y + r, width, n, data[r * width : (r + n) * width])


def oword_pieces(nbytes: int):
    """Split an access into legal oword blocks: 128-byte chunks, then a sized tail or single owords."""
    step = OWORD_SIZES[-1]
    for start in range(0, nbytes, step):
        size = min(step, nbytes - start)
        if size in OWORD_SIZES:
            yield start, size
        else:
            for i in range(0, size, 16):
                yield start + i, 16


def oword_read_bytes(surface: Surface, offset: int, nbytes: int) -> np.ndarray:
    return np.concatenate([oword_read(surface, offset + start, size) for start, size in oword_pieces(nbytes)])


def oword_write_bytes(surface: Surface, offset: int, data: np.ndarray) -> None:
    data = np.ascontiguousarray(data).view(np.uint8).reshape(-1)
    for start, size in oword_pieces(data.size):
        oword_write(surface, offset + start, data[start : start + size])
