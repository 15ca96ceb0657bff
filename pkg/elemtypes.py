"""
Element types and the arithmetic every stage shares.

The region-IR evaluator, the constant folder and the vISA emulator all
compute through the functions in this module, so a value produced by one
stage is bit-identical to the value produced by another.
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np


@dataclass(frozen=True)
class ElemType:
    kind: str
    size_bytes: int
    numpy_name: str
    c_name: str
    signed: bool
    is_float: bool

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(self.numpy_name)

    @property
    def is_integer(self) -> bool:
        return not self.is_float

    def __str__(self) -> str:
        return self.kind


B = ElemType("b", 1, "int8", "char", True, False)
UB = ElemType("ub", 1, "uint8", "uchar", False, False)
W = ElemType("w", 2, "int16", "short", True, False)
UW = ElemType("uw", 2, "uint16", "ushort", False, False)
D = ElemType("d", 4, "int32", "int", True, False)
UD = ElemType("ud", 4, "uint32", "uint", False, False)
F = ElemType("f", 4, "float32", "float", True, True)
DF = ElemType("df", 8, "float64", "double", True, True)

ELEM_TYPES: Dict[str, ElemType] = {t.kind: t for t in (B, UB, W, UW, D, UD, F, DF)}
C_NAMES: Dict[str, ElemType] = {t.c_name: t for t in ELEM_TYPES.values()}

MASK_TYPE = UW

_UINT_OF_SIZE = {1: np.uint8, 2: np.uint16, 4: np.uint32, 8: np.uint64}

INTEGER_OPS = {"and", "or", "xor", "shl", "shr"}
BINARY_OPS = {"add", "sub", "mul", "div", "rem", "min", "max"} | INTEGER_OPS
RELATIONS = {"lt", "le", "gt", "ge", "eq", "ne"}


def elem(kind: str) -> ElemType:
    try:
        return ELEM_TYPES[kind]
    except KeyError:
        raise ValueError(f"unknown element type '{kind}'") from None


def promote(a: ElemType, b: ElemType) -> ElemType:
    """C usual arithmetic conversions restricted to the eight element types."""
    if DF in (a, b):
        return DF
    if F in (a, b):
        return F
    if UD in (a, b):
        return UD
    return D


def promote_unary(a: ElemType) -> ElemType:
    if a.is_float or a in (D, UD):
        return a
    return D


def convert(values, dst: ElemType) -> np.ndarray:
    """Convert to ``dst``: float->int truncates toward zero (NaN/inf -> 0) and wraps."""
    arr = np.asarray(values)
    if dst.is_float:
        return arr.astype(dst.dtype)
    if arr.dtype.kind == "f":
        with np.errstate(invalid="ignore", over="ignore"):
            t = np.trunc(arr.astype(np.float64))
            t = np.where(np.isfinite(t), t, 0.0)
            t = np.fmod(t, 2.0 ** 64)
            t = np.where(t >= 2.0 ** 63, t - 2.0 ** 64, t)
            t = np.where(t < -(2.0 ** 63), t + 2.0 ** 64, t)
        return t.astype(np.int64).astype(dst.dtype)
    return arr.astype(np.int64).astype(dst.dtype)


def _int_div(a: np.ndarray, b: np.ndarray):
    safe = np.where(b == 0, 1, b)
    q = np.abs(a) // np.abs(safe)
    q = np.where((a < 0) != (safe < 0), -q, q)
    q = np.where(b == 0, 0, q)
    r = np.where(b == 0, 0, a - q * safe)
    return q, r


def binary_op(op: str, et: ElemType, a, b) -> np.ndarray:
    """Apply ``op`` to operands already held in ``et``; the result wraps to ``et``."""
    if op not in BINARY_OPS:
        raise ValueError(f"unknown binary op '{op}'")
    a = np.asarray(a, dtype=et.dtype)
    b = np.asarray(b, dtype=et.dtype)
    if et.is_float:
        if op in INTEGER_OPS:
            raise ValueError(f"'{op}' requires integer operands")
        with np.errstate(all="ignore"):
            if op == "add":
                r = a + b
            elif op == "sub":
                r = a - b
            elif op == "mul":
                r = a * b
            elif op == "div":
                r = a / b
            elif op == "rem":
                r = np.fmod(a, b)
            elif op == "min":
                r = np.minimum(a, b)
            else:
                r = np.maximum(a, b)
        return np.asarray(r, dtype=et.dtype)

    x = a.astype(np.int64)
    y = b.astype(np.int64)
    with np.errstate(over="ignore"):
        if op == "add":
            r = x + y
        elif op == "sub":
            r = x - y
        elif op == "mul":
            r = x * y
        elif op == "div":
            r = _int_div(x, y)[0]
        elif op == "rem":
            r = _int_div(x, y)[1]
        elif op == "min":
            r = np.minimum(x, y)
        elif op == "max":
            r = np.maximum(x, y)
        elif op == "and":
            r = x & y
        elif op == "or":
            r = x | y
        elif op == "xor":
            r = x ^ y
        elif op == "shl":
            r = x << (y & 31)
        else:
            r = x >> (y & 31)
    return np.asarray(r).astype(et.dtype)


def compare(rel: str, et: ElemType, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=et.dtype)
    b = np.asarray(b, dtype=et.dtype)
    with np.errstate(invalid="ignore"):
        if rel == "lt":
            r = a < b
        elif rel == "le":
            r = a <= b
        elif rel == "gt":
            r = a > b
        elif rel == "ge":
            r = a >= b
        elif rel == "eq":
            r = a == b
        elif rel == "ne":
            r = a != b
        else:
            raise ValueError(f"unknown relation '{rel}'")
    return np.asarray(r).astype(MASK_TYPE.dtype)


def select_lanes(pred, a, b) -> np.ndarray:
    return np.where(np.asarray(pred) != 0, a, b)


def to_bits(value, et: ElemType) -> int:
    arr = np.asarray([value]).astype(et.dtype) if not isinstance(value, np.ndarray) else value.astype(et.dtype)
    return int(arr.reshape(-1)[:1].view(_UINT_OF_SIZE[et.size_bytes])[0])


def from_bits(bits: int, et: ElemType):
    raw = np.array([bits & ((1 << (8 * et.size_bytes)) - 1)], dtype=_UINT_OF_SIZE[et.size_bytes])
    return raw.view(et.dtype)[0]


def reinterpret(values: np.ndarray, et: ElemType) -> np.ndarray:
    """View the bytes of ``values`` as ``et`` elements (format / retype)."""
    raw = np.ascontiguousarray(values).view(np.uint8)
    if raw.size % et.size_bytes:
        raise ValueError(f"{raw.size} bytes cannot be viewed as {et}")
    return raw.view(et.dtype)


def elem_of_dtype(dtype) -> ElemType:
    dtype = np.dtype(dtype)
    for et in ELEM_TYPES.values():
        if et.dtype == dtype:
            return et
    raise ValueError(f"no element type for dtype {dtype}")
