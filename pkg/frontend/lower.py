"""
Lowering of checked kernels into region IR.

Every variable maps to its current SSA value. Outside simd-if regions a
whole-variable assignment simply rebinds the name; partial writes through
select chains become nested wrregions, of which only the innermost
observes the execution mask inside a simd-if body. A format is a retype of
the same bytes and adds no region write of its own.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional

import numpy as np

from elemtypes import MASK_TYPE, UD
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
from regionir.ir import IRBuilder, IRModule, IRValue, KernelParam
from regionir.regions import RegionSpec

logger = logging.getLogger(__name__)


class Lowerer:
    def __init__(self, kernel: CheckedKernel):
        self.kernel = kernel
        params = []
        for sym in kernel.params:
            if sym.kind == "surface":
                params.append(KernelParam(sym.name, "surface", surface_kind=sym.surface_kind or "buffer"))
            else:
                params.append(KernelParam(sym.name, "scalar", sym.shape.elem))
        self.b = IRBuilder(kernel.name, params)
        self.env: Dict[int, IRValue] = {}
        self.depth = 0
        self.line = 0

    def lower(self) -> IRModule:
        for sym in self.kernel.params:
            if sym.kind == "scalar_param":
                self.env[id(sym)] = self.b.op("param", (), sym.shape.elem, 1, sym.name, attrs={"name": sym.name})
        for stmt in self.kernel.body:
            self.stmt(stmt)
        module = self.b.build()
        logger.debug(f"Lowered {module.name} to {len(module.instructions)} instructions")
        return module

    # -- helpers ---------------------------------------------------------

    def op(self, opcode: str, operands, elem, length: int, name: str = "", **kw) -> IRValue:
        return self.b.op(opcode, operands, elem, length, name, line=self.line, **kw)

    def emit(self, opcode: str, operands, **kw):
        return self.b.emit(opcode, operands, line=self.line, **kw)

    def broadcast(self, v: IRValue, length: int) -> IRValue:
        if v.length == length:
            return v
        return self.op("mov", (v,), v.elem, length)

    def retype(self, v: IRValue, elem, length: int) -> IRValue:
        """The same bytes seen as ``length`` elements of ``elem``; free in registers."""
        if v.elem == elem and v.length == length:
            return v
        return self.op("rdregion", (v,), elem, length, region=RegionSpec.identity(length))

    @property
    def in_simd(self) -> bool:
        return self.depth > 0

    # -- statements --------------------------------------------------------

    def stmt(self, s: Stmt):
        self.line = s.line
        if isinstance(s, Decl):
            shape = s.symbol.shape
            if s.init is None or self.in_simd:
                zeros = self.b.const(shape.elem, np.zeros(shape.count), s.name, line=s.line)
                self.env[id(s.symbol)] = zeros
                if s.init is not None:
                    self.write_into(Name(s.name, symbol=s.symbol, shape=shape), self.rvalue(s.init))
            else:
                self.env[id(s.symbol)] = self.broadcast(self.rvalue(s.init), shape.count)
        elif isinstance(s, Assign):
            self.write_into(s.target, self.rvalue(s.value))
        elif isinstance(s, ExprStmt):
            self.expr_stmt(s.expr)
        elif isinstance(s, SimdIf):
            cond = self.rvalue(s.cond)
            self.emit("simd_if_begin", (cond,))
            self.depth += 1
            for inner in s.then_body:
                self.stmt(inner)
            if s.else_body is not None:
                self.line = s.line
                self.emit("simd_else", ())
                for inner in s.else_body:
                    self.stmt(inner)
            self.depth -= 1
            self.line = s.line
            self.emit("simd_if_end", ())
        else:
            raise TypeError(f"cannot lower {type(s).__name__}")

    def write_into(self, target: Expr, new: IRValue, pred: Optional[IRValue] = None, innermost: bool = True):
        """Store ``new`` through an lvalue chain, rebinding the root variable."""
        masked = innermost and self.in_simd
        if isinstance(target, Name):
            count = target.shape.count
            if not masked and pred is None:
                self.env[id(target.symbol)] = self.broadcast(new, count)
                return
            old = self.env[id(target.symbol)]
            operands = (old, new) if pred is None else (old, new, pred)
            attrs = {"masked": True} if masked else {}
            self.env[id(target.symbol)] = self.op(
                "wrregion", operands, old.elem, old.length, target.ident, region=RegionSpec.identity(count), attrs=attrs
            )
            return
        if isinstance(target, Method) and target.name == "format":
            base = target.target
            if masked or pred is not None:
                old = self.rvalue(target)
                operands = (old, new) if pred is None else (old, new, pred)
                attrs = {"masked": True} if masked else {}
                new = self.op("wrregion", operands, old.elem, old.length, region=RegionSpec.identity(old.length), attrs=attrs)
            else:
                new = self.broadcast(new, target.shape.count)
            back = self.retype(new, base.shape.elem, base.shape.count)
            if back is not new and self.in_simd:
                # only region writes may leave a simd-if body
                root = self.rvalue(base)
                back = self.op("wrregion", (root, back), root.elem, root.length, region=RegionSpec.identity(root.length))
            self.write_into(base, back, None, innermost=False)
            return
        if isinstance(target, Method):
            old = self.rvalue(target.target)
            region = self.method_region(target, target.target)
            operands = (old, new) if pred is None else (old, new, pred)
            attrs = {"masked": True} if masked else {}
            updated = self.op("wrregion", operands, old.elem, old.length, region=region, attrs=attrs)
            self.write_into(target.target, updated, None, innermost=False)
            return
        raise TypeError(f"cannot assign to {type(target).__name__}")

    def method_region(self, m: Method, base: Expr) -> RegionSpec:
        if m.name == "select":
            return m.info.to_region(base.shape.cols, base.shape.elem.size_bytes)
        raise TypeError(f"'{m.name}' is not an lvalue")

    def merge_pred(self, info: MergeInfo, mask_arg: Optional[Expr], count: int) -> IRValue:
        if info.bits is not None:
            bits = [(info.bits >> i) & 1 for i in range(count)]
            return self.b.const(MASK_TYPE, bits, line=self.line)
        return self.rvalue(mask_arg)

    def expr_stmt(self, e: Expr):
        if isinstance(e, Method) and e.name == "merge":
            info: MergeInfo = e.info
            count = e.shape.count
            n_values = len(e.args) - (0 if info.bits is not None else 1)
            mask_arg = e.args[-1] if info.bits is None else None
            pred = self.merge_pred(info, mask_arg, count)
            values = [self.rvalue(a) for a in e.args[:n_values]]
            if len(values) == 2:
                x, y = (self.broadcast(v, count) for v in values)
                self.write_into(e.target, self.op("sel", (pred, x, y), e.shape.elem, count))
            else:
                self.write_into(e.target, values[0], pred)
            return
        if isinstance(e, Call):
            access: MemoryAccess = e.info
            if e.name == "write_atomic":
                self.atomic(e, want_result=False)
            elif e.name == "read":
                self.read(e, access)
            else:
                self.write(e, access)
            return
        raise TypeError(f"cannot lower statement expression {type(e).__name__}")

    def read(self, e: Call, access: MemoryAccess):
        surf = {"surface": access.surface.name}
        data = e.args[-1]
        elem, count = data.shape.elem, data.shape.count
        if access.form == "media":
            x, y = self.rvalue(e.args[1]), self.rvalue(e.args[2])
            attrs = dict(surf, rows=access.rows, width=access.width)
            value = self.op("media_read", (x, y), elem, count, attrs=attrs)
        elif access.form == "oword":
            value = self.op("oword_read", (self.rvalue(e.args[1]),), elem, count, attrs=surf)
        else:
            goff, offsets = self.rvalue(e.args[1]), self.rvalue(e.args[2])
            value = self.op("scatter_read", (goff, offsets), elem, count, attrs=surf)
        self.write_into(data, value)

    def write(self, e: Call, access: MemoryAccess):
        surf = {"surface": access.surface.name}
        data = self.rvalue(e.args[-1])
        if access.form == "media":
            x, y = self.rvalue(e.args[1]), self.rvalue(e.args[2])
            self.emit("media_write", (x, y, data), attrs=dict(surf, rows=access.rows, width=access.width))
        elif access.form == "oword":
            self.emit("oword_write", (self.rvalue(e.args[1]), data), attrs=surf)
        else:
            goff, offsets = self.rvalue(e.args[1]), self.rvalue(e.args[2])
            self.emit("scatter_write", (goff, offsets, data), attrs=surf)

    def atomic(self, e: Call, want_result: bool) -> Optional[IRValue]:
        access: MemoryAccess = e.info
        operands = [self.rvalue(a) for a in e.args[1:]]
        attrs = {"surface": access.surface.name, "op": access.op}
        if want_result:
            return self.op("atomic", operands, UD, operands[0].length, attrs=attrs)
        self.emit("atomic", operands, attrs=attrs)
        return None

    # -- expressions -----------------------------------------------------------

    def rvalue(self, e: Expr) -> IRValue:
        shape = e.shape
        if isinstance(e, IntLit):
            return self.b.const(shape.elem, [e.value], line=self.line)
        if isinstance(e, FloatLit):
            return self.b.const(shape.elem, [e.value], line=self.line)
        if isinstance(e, Name):
            return self.env[id(e.symbol)]
        if isinstance(e, Unary):
            x = self.rvalue(e.operand)
            if e.op == "-":
                zero = self.b.const(shape.elem, [0], line=self.line)
                return self.op("sub", (zero, x), shape.elem, shape.count)
            ones = self.b.const(shape.elem, [-1], line=self.line)
            return self.op("xor", (x, ones), shape.elem, shape.count)
        if isinstance(e, Binary):
            a, b = self.rvalue(e.lhs), self.rvalue(e.rhs)
            if e.op in COMPARE_OPS:
                return self.op("cmp", (a, b), MASK_TYPE, shape.count, attrs={"rel": COMPARE_OPS[e.op]})
            opcode = ARITH_OPS.get(e.op) or SHIFT_OPS.get(e.op) or e.op
            return self.op(opcode, (a, b), shape.elem, shape.count)
        if isinstance(e, Cast):
            return self.op("mov", (self.rvalue(e.operand),), shape.elem, shape.count)
        if isinstance(e, Method):
            return self.method(e)
        if isinstance(e, Call):
            return self.call(e)
        raise TypeError(f"cannot lower {type(e).__name__}")

    def method(self, m: Method) -> IRValue:
        base = self.rvalue(m.target)
        shape = m.shape
        if m.name == "format":
            return self.retype(base, shape.elem, shape.count)
        if m.name == "select":
            return self.op("rdregion", (base,), shape.elem, shape.count, region=self.method_region(m, m.target))
        if m.name == "replicate":
            region = m.info.to_region(m.target.shape.elem.size_bytes)
            return self.op("rdregion", (base,), shape.elem, shape.count, region=region)
        if m.name == "iselect":
            return self.op("iselect_gather", (base, self.rvalue(m.args[0])), shape.elem, shape.count)
        if m.name in ("any", "all"):
            return self.op(f"mask_{m.name}", (base,), MASK_TYPE, 1)
        raise TypeError(f"cannot lower method '{m.name}'")

    def call(self, c: Call) -> IRValue:
        shape = c.shape
        if c.name in ("thread_x", "thread_y"):
            return self.op(c.name, (), shape.elem, 1)
        if c.name == "merge":
            info: MergeInfo = c.info
            x, y = (self.broadcast(self.rvalue(a), shape.count) for a in c.args[:2])
            pred = self.merge_pred(info, c.args[2] if info.bits is None else None, shape.count)
            return self.op("sel", (pred, x, y), shape.elem, shape.count)
        if c.name == "write_atomic":
            return self.atomic(c, want_result=True)
        raise TypeError(f"cannot lower call '{c.name}'")


def lower(kernel: CheckedKernel) -> IRModule:
    """Translate a checked kernel into a region-IR module."""
    return Lowerer(kernel).lower()
