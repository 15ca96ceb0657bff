"""
Direct interpreter over checked kernels.

Variables are kept as raw byte arrays and every lvalue resolves to the list
of byte positions it covers, so select/format chains are evaluated without
going through region descriptors. This gives an oracle for the lowering that
shares nothing with it but the element arithmetic and surface semantics.
"""

from __future__ import annotations

from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from elemtypes import D, MASK_TYPE, UD, ElemType, binary_op, compare, convert
from emulator import memory
from emulator.surfaces import Surface
from errors import SurfaceError
from frontend.ast_nodes import (
    Assign,
    Binary,
    Call,
    Cast,
    Decl,
    Expr,
    ExprStmt,
    FloatLit,
    IntLit,
    Method,
    Name,
    SimdIf,
    Stmt,
    Symbol,
    Unary,
)
from frontend.typecheck import ARITH_OPS, COMPARE_OPS, SHIFT_OPS, CheckedKernel, MemoryAccess, MergeInfo


def _fit(values: np.ndarray, n: int) -> np.ndarray:
    values = np.asarray(values).reshape(-1)
    return values if values.size == n else np.broadcast_to(values, (n,)).copy()


class KernelInterpreter:
    def __init__(
        self,
        kernel: CheckedKernel,
        surfaces: Mapping[str, Surface],
        thread: Tuple[int, int] = (0, 0),
        args: Optional[Mapping[str, object]] = None,
    ):
        self.kernel = kernel
        self.surfaces = surfaces
        self.thread = thread
        self.args = dict(args or {})
        self.storage: Dict[int, np.ndarray] = {}
        self.masks: List[np.ndarray] = []

    def run(self) -> Mapping[str, Surface]:
        for sym in self.kernel.params:
            if sym.kind == "scalar_param":
                value = convert(np.array([self.args.get(sym.name, 0)]), sym.shape.elem)
                self.storage[id(sym)] = value.view(np.uint8).copy()
        self.block(self.kernel.body)
        return self.surfaces

    def surface(self, sym: Symbol) -> Surface:
        if sym.name not in self.surfaces:
            raise SurfaceError(f"surface '{sym.name}' is not bound")
        return self.surfaces[sym.name]

    @property
    def mask(self) -> Optional[np.ndarray]:
        return self.masks[-1] if self.masks else None

    # -- statements ----------------------------------------------------------

    def block(self, body: List[Stmt]):
        for s in body:
            self.stmt(s)

    def stmt(self, s: Stmt):
        if isinstance(s, Decl):
            self.storage[id(s.symbol)] = np.zeros(s.symbol.shape.size_bytes, dtype=np.uint8)
            if s.init is not None:
                self.store(Name(s.name, symbol=s.symbol, shape=s.symbol.shape), self.value(s.init))
        elif isinstance(s, Assign):
            self.store(s.target, self.value(s.value))
        elif isinstance(s, ExprStmt):
            self.effect(s.expr)
        elif isinstance(s, SimdIf):
            cond = self.value(s.cond) != 0
            parent = self.mask[: cond.size] if self.mask is not None else np.ones(cond.size, dtype=bool)
            self.masks.append(parent & cond)
            if self.masks[-1].any():
                self.block(s.then_body)
            if s.else_body is not None:
                self.masks[-1] = parent & ~cond
                if self.masks[-1].any():
                    self.block(s.else_body)
            self.masks.pop()
        else:
            raise TypeError(f"cannot interpret {type(s).__name__}")

    def lref(self, e: Expr) -> Tuple[Symbol, np.ndarray]:
        """Root symbol and the byte positions an lvalue covers, in element order."""
        if isinstance(e, Name):
            return e.symbol, np.arange(e.symbol.shape.size_bytes)
        sym, positions = self.lref(e.target)
        if e.name == "format":
            return sym, positions
        base = e.target.shape
        size = base.elem.size_bytes
        spec = e.info
        rows = np.arange(spec.vsize)[:, None] * spec.vstride + spec.origin_row
        cols = np.arange(spec.hsize)[None, :] * spec.hstride + spec.origin_col
        picked = (rows * base.cols + cols).reshape(-1)
        return sym, positions.reshape(-1, size)[picked].reshape(-1)

    def store(self, target: Expr, values: np.ndarray, pred: Optional[np.ndarray] = None):
        sym, positions = self.lref(target)
        elem = target.shape.elem
        n = target.shape.count
        values = _fit(convert(values, elem), n)
        active = np.ones(n, dtype=bool)
        if pred is not None:
            active &= _fit(pred, n) != 0
        if self.mask is not None:
            active &= self.mask[:n]
        raw = np.ascontiguousarray(values).view(np.uint8).reshape(n, elem.size_bytes)
        slots = positions.reshape(n, elem.size_bytes)
        self.storage[id(sym)][slots[active].reshape(-1)] = raw[active].reshape(-1)

    def effect(self, e: Expr):
        if isinstance(e, Method):  # merge
            info: MergeInfo = e.info
            n = e.shape.count
            values = e.args if info.bits is not None else e.args[:-1]
            pred = self.merge_bits(info, None if info.bits is not None else e.args[-1], n)
            if len(values) == 2:
                x, y = (_fit(self.value(v), n) for v in values)
                self.store(e.target, np.where(pred != 0, x, y))
            else:
                self.store(e.target, self.value(values[0]), pred)
            return
        access: MemoryAccess = e.info
        if e.name == "write_atomic":
            self.atomic(e)
            return
        surface = self.surface(access.surface)
        data = e.args[-1]
        elem = data.shape.elem
        if e.name == "read":
            if access.form == "media":
                raw = memory.media_read_rows(surface, self.scalar(e.args[1]), self.scalar(e.args[2]), access.width, access.rows)
                self.store(data, raw.view(elem.dtype))
            elif access.form == "oword":
                raw = memory.oword_read_bytes(surface, self.scalar(e.args[1]), data.shape.size_bytes)
                self.store(data, raw.view(elem.dtype))
            else:
                offsets = convert(self.value(e.args[2]), UD)
                got = memory.scatter_read(surface, self.scalar(e.args[1]), offsets, elem, self.lanes(offsets.size))
                self.store(data, got)
            return
        values = self.value(data)
        if access.form == "media":
            memory.media_write_rows(surface, self.scalar(e.args[1]), self.scalar(e.args[2]), access.width, access.rows, values)
        elif access.form == "oword":
            memory.oword_write_bytes(surface, self.scalar(e.args[1]), values)
        else:
            offsets = convert(self.value(e.args[2]), UD)
            memory.scatter_write(surface, self.scalar(e.args[1]), offsets, _fit(values, offsets.size), self.lanes(offsets.size))

    def lanes(self, n: int) -> Optional[np.ndarray]:
        return None if self.mask is None else self.mask[:n]

    def atomic(self, e: Call) -> np.ndarray:
        access: MemoryAccess = e.info
        offsets = convert(self.value(e.args[1]), UD)
        srcs = [self.value(a) for a in e.args[2:]] + [None, None]
        return memory.atomic(self.surface(access.surface), access.op, offsets, srcs[0], srcs[1], self.lanes(offsets.size))

    # -- expressions -----------------------------------------------------------

    def scalar(self, e: Expr) -> int:
        return int(self.value(e).reshape(-1)[0])

    def merge_bits(self, info: MergeInfo, mask: Optional[Expr], n: int) -> np.ndarray:
        if info.bits is not None:
            return ((info.bits >> np.arange(n)) & 1).astype(MASK_TYPE.dtype)
        return self.value(mask)

    def value(self, e: Expr) -> np.ndarray:
        shape = e.shape
        elem: ElemType = shape.elem
        if isinstance(e, (IntLit, FloatLit)):
            return np.array([e.value]).astype(elem.dtype)
        if isinstance(e, Name):
            return self.storage[id(e.symbol)].view(elem.dtype).copy()
        if isinstance(e, Unary):
            x = self.value(e.operand)
            if e.op == "-":
                return binary_op("sub", elem, np.zeros(1, dtype=elem.dtype), x)
            return binary_op("xor", elem, x, np.array([-1]).astype(elem.dtype))
        if isinstance(e, Binary):
            a, b = self.value(e.lhs), self.value(e.rhs)
            if e.op in COMPARE_OPS:
                return _fit(compare(COMPARE_OPS[e.op], e.lhs.shape.elem, a, b), shape.count)
            opcode = ARITH_OPS.get(e.op) or SHIFT_OPS.get(e.op) or e.op
            return _fit(binary_op(opcode, elem, a, b), shape.count)
        if isinstance(e, Cast):
            return _fit(convert(self.value(e.operand), elem), shape.count)
        if isinstance(e, Method):
            return self.method(e)
        if isinstance(e, Call):
            if e.name == "thread_x":
                return np.array([self.thread[0]], dtype=D.dtype)
            if e.name == "thread_y":
                return np.array([self.thread[1]], dtype=D.dtype)
            if e.name == "write_atomic":
                return self.atomic(e)
            if e.name == "merge":
                n = shape.count
                x, y = (_fit(self.value(a), n) for a in e.args[:2])
                pred = self.merge_bits(e.info, e.args[2] if e.info.bits is None else None, n)
                return np.where(_fit(pred, n) != 0, x, y).astype(elem.dtype)
        raise TypeError(f"cannot interpret {type(e).__name__}")

    def method(self, m: Method) -> np.ndarray:
        if m.name in ("select", "format"):
            if not self._is_lvalue(m):
                return self._rvalue_view(m)
            sym, positions = self.lref(m)
            return self.storage[id(sym)][positions].view(m.shape.elem.dtype).copy()
        base = self.value(m.target)
        if m.name == "replicate":
            spec = m.info
            idx = spec.start + np.arange(spec.k)[:, None] * spec.vs + np.arange(spec.w)[None, :] * spec.hs
            return base[idx.reshape(-1)].copy()
        if m.name == "iselect":
            idx = self.value(m.args[0]).astype(np.int64)
            return base[np.mod(idx, base.size)].copy()
        hit = (base != 0).any() if m.name == "any" else (base != 0).all()
        return np.array([1 if hit else 0], dtype=MASK_TYPE.dtype)

    def _is_lvalue(self, e: Expr) -> bool:
        if isinstance(e, Name):
            return e.symbol is not None and e.symbol.kind == "var"
        return isinstance(e, Method) and e.name in ("select", "format") and self._is_lvalue(e.target)

    def _rvalue_view(self, m: Method) -> np.ndarray:
        """select/format applied to a computed value rather than a variable."""
        base = self.value(m.target)
        if m.name == "format":
            return np.ascontiguousarray(base).view(m.shape.elem.dtype).copy()
        spec = m.info
        rows = np.arange(spec.vsize)[:, None] * spec.vstride + spec.origin_row
        cols = np.arange(spec.hsize)[None, :] * spec.hstride + spec.origin_col
        return base[(rows * m.target.shape.cols + cols).reshape(-1)].copy()


def interpret(
    kernel: CheckedKernel,
    surfaces: Mapping[str, Surface],
    grid: Tuple[int, int] = (1, 1),
    args: Optional[Mapping[str, object]] = None,
) -> Mapping[str, Surface]:
    """Run every thread of ``grid`` (row-major, y outer) directly on the checked kernel."""
    for y in range(grid[1]):
        for x in range(grid[0]):
            KernelInterpreter(kernel, surfaces, (x, y), args).run()
    return surfaces
