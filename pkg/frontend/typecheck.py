"""
Shape and type checking.

The checker resolves names, evaluates template arguments, unrolls scalar
for-loops, inserts implicit conversions following C promotion rules and
enforces the simd-if body restrictions. Its output is a flat, fully typed
statement list ready for lowering.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from elemtypes import C_NAMES, D, DF, F, MASK_TYPE, UD, ElemType, promote, promote_unary
from emulator.memory import ATOMIC_ARITY, MEDIA_MAX_WIDTH
from errors import Diagnostic, TypeCheckError
from frontend.ast_nodes import (
    Assign,
    Binary,
    Call,
    Cast,
    Decl,
    Expr,
    ExprStmt,
    FloatLit,
    For,
    IntLit,
    Kernel,
    Method,
    Name,
    Node,
    SimdIf,
    Stmt,
    Symbol,
    TypeRef,
    Unary,
)
from frontend.shapes import GRF_FILE_BYTES, ShapeType
from regionir.regions import ReplicateSpec, SelectSpec

logger = logging.getLogger(__name__)

MAX_LOOP_TRIPS = 4096
MAX_MASK_LANES = 32
ISELECT_MAX_BYTES = 64

ARITH_OPS = {"+": "add", "-": "sub", "*": "mul", "/": "div", "%": "rem", "&": "and", "|": "or", "^": "xor"}
SHIFT_OPS = {"<<": "shl", ">>": "shr"}
COMPARE_OPS = {"<": "lt", "<=": "le", ">": "gt", ">=": "ge", "==": "eq", "!=": "ne"}
BITWISE = {"&", "|", "^", "<<", ">>"}


@dataclass
class MemoryAccess:
    """Checker annotation for read/write/write_atomic calls."""

    form: str  # media | oword | scatter | atomic
    surface: Symbol
    rows: int = 0
    width: int = 0
    op: str = ""


@dataclass
class MergeInfo:
    """A merge mask given as an integer constant (bit i enables lane i)."""

    bits: Optional[int] = None


@dataclass
class CheckedKernel:
    name: str
    params: List[Symbol]
    body: List[Stmt] = field(default_factory=list)


class _Failure(Exception):
    pass


def typeref_of(shape: ShapeType) -> TypeRef:
    if shape.is_scalar:
        return TypeRef("scalar", shape.elem.c_name, [])
    dims = [IntLit(shape.cols)] if shape.form == "vector" else [IntLit(shape.rows), IntLit(shape.cols)]
    return TypeRef(shape.form, shape.elem.c_name, dims)


def _c_div(a: int, b: int) -> int:
    if b == 0:
        return 0
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


class TypeChecker:
    def __init__(self, file: str = "<input>"):
        self.file = file
        self.scopes: List[Dict[str, Symbol]] = []
        self.loop_values: Dict[int, int] = {}
        self.masks: List[int] = []

    # -- helpers ---------------------------------------------------------

    def fail(self, node: Node, message: str):
        raise TypeCheckError([Diagnostic(message, node.line, node.col, self.file)])

    def lookup(self, node: Name) -> Symbol:
        for scope in reversed(self.scopes):
            if node.ident in scope:
                return scope[node.ident]
        self.fail(node, f"'{node.ident}' is not declared")

    def declare(self, node: Node, symbol: Symbol):
        for scope in self.scopes:
            if symbol.name in scope:
                self.fail(node, f"'{symbol.name}' is already declared")
        self.scopes[-1][symbol.name] = symbol

    @property
    def mask(self) -> Optional[int]:
        return self.masks[-1] if self.masks else None

    def in_body_size(self, node: Node, shape: ShapeType, what: str):
        if self.mask is not None and shape.count not in (self.mask, 1):
            self.fail(node, f"simd-if body {what} has {shape.count} elements but the mask has {self.mask}")

    def convert(self, e: Expr, elem: ElemType) -> Expr:
        if e.shape.elem == elem:
            return e
        shape = e.shape.with_elem(elem)
        return Cast(typeref_of(shape), e, True, shape=shape, line=e.line, col=e.col)

    def elem_of(self, node: Node, name: str) -> ElemType:
        if name not in C_NAMES:
            self.fail(node, f"unknown element type '{name}'")
        return C_NAMES[name]

    def const_int(self, e) -> int:
        """Evaluate a compile-time integer expression (literals and loop variables)."""
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, Name):
            for scope in reversed(self.scopes):
                if e.ident in scope:
                    sym = scope[e.ident]
                    if id(sym) in self.loop_values:
                        return self.loop_values[id(sym)]
                    break
            self.fail(e, f"'{e.ident}' is not a compile-time constant")
        if isinstance(e, Unary):
            v = self.const_int(e.operand)
            return -v if e.op == "-" else ~v
        if isinstance(e, Binary):
            a, b = self.const_int(e.lhs), self.const_int(e.rhs)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                return _c_div(a, b)
            if e.op == "%":
                return a - _c_div(a, b) * b if b else 0
            if e.op == "<<":
                return a << (b & 31)
            if e.op == ">>":
                return a >> (b & 31)
            if e.op == "&":
                return a & b
            if e.op == "|":
                return a | b
            if e.op == "^":
                return a ^ b
        self.fail(e, "expected a compile-time integer constant")

    def resolve_type(self, ty: TypeRef) -> ShapeType:
        elem = self.elem_of(ty, ty.elem)
        dims = [self.const_int(d) for d in ty.dims]
        if any(d < 1 for d in dims):
            self.fail(ty, "vector and matrix sizes must be positive")
        if ty.kind == "scalar":
            return ShapeType.scalar(elem)
        if ty.kind == "vector":
            return ShapeType.vector(elem, dims[0])
        return ShapeType.matrix(elem, dims[0], dims[1])

    # -- kernel ------------------------------------------------------------

    def check(self, kernel: Kernel) -> CheckedKernel:
        self.scopes = [{}]
        params = []
        for p in kernel.params:
            if p.kind == "surface":
                sym = Symbol(p.name, None, "surface")
            else:
                sym = Symbol(p.name, ShapeType.scalar(self.elem_of(p, p.elem)), "scalar_param")
            self.declare(p, sym)
            params.append(sym)
        out = CheckedKernel(kernel.name, params)
        out.body = self.check_block(kernel.body, new_scope=True)
        logger.debug(f"Checked kernel {kernel.name}: {len(out.body)} statements after unrolling")
        return out

    def check_block(self, body: List[Stmt], new_scope: bool) -> List[Stmt]:
        if new_scope:
            self.scopes.append({})
        out: List[Stmt] = []
        for stmt in body:
            out.extend(self.check_stmt(stmt))
        if new_scope:
            self.scopes.pop()
        return out

    # -- statements ----------------------------------------------------------

    def check_stmt(self, s: Stmt) -> List[Stmt]:
        if isinstance(s, Decl):
            return [self.check_decl(s)]
        if isinstance(s, Assign):
            return [self.check_assign(s)]
        if isinstance(s, ExprStmt):
            return [self.check_expr_stmt(s)]
        if isinstance(s, SimdIf):
            return [self.check_simd_if(s)]
        if isinstance(s, For):
            return self.unroll(s)
        self.fail(s, f"unsupported statement {type(s).__name__}")

    def check_decl(self, s: Decl) -> Decl:
        shape = self.resolve_type(s.type)
        if shape.size_bytes > GRF_FILE_BYTES:
            self.fail(s, f"'{s.name}' needs {shape.size_bytes} bytes, more than the {GRF_FILE_BYTES}-byte register file")
        init = None
        if s.init is not None:
            value = self.check_expr(s.init)
            init = self.assignable(s, shape, value)
            if self.mask is not None:
                if shape.is_scalar:
                    self.fail(s, "scalar assignment inside a simd-if body")
                self.in_body_size(s, shape, "assignment")
        sym = Symbol(s.name, shape, "var")
        self.declare(s, sym)
        return Decl(s.type, s.name, init, symbol=sym, line=s.line, col=s.col)

    def assignable(self, node: Node, target: ShapeType, value: Expr) -> Expr:
        if value.shape.is_scalar and not target.is_scalar:
            return self.convert(value, target.elem)
        if value.shape.count != target.count:
            self.fail(node, f"element-count mismatch: cannot assign {value.shape} to {target}")
        if target.is_scalar and not value.shape.is_scalar:
            self.fail(node, f"cannot assign {value.shape} to scalar {target}")
        return self.convert(value, target.elem)

    def check_assign(self, s: Assign) -> Assign:
        target = self.check_lvalue(s.target)
        value = self.check_expr(s.value)
        if s.op != "=":
            value = self.binary(s, s.op[:-1], self.check_lvalue(s.target), value)
        value = self.assignable(s, target.shape, value)
        if self.mask is not None:
            if target.shape.is_scalar:
                self.fail(s, "scalar assignment inside a simd-if body")
            self.in_body_size(s, target.shape, "assignment")
        return Assign(target, "=", value, line=s.line, col=s.col)

    def check_expr_stmt(self, s: ExprStmt) -> Stmt:
        e = s.expr
        if isinstance(e, Method) and e.name == "merge":
            return ExprStmt(self.check_merge_method(e), line=s.line, col=s.col)
        if isinstance(e, Call) and e.name in ("read", "write", "write_atomic"):
            return ExprStmt(self.check_memory(e, statement=True), line=s.line, col=s.col)
        self.fail(s, "expression statement has no effect")

    def check_simd_if(self, s: SimdIf) -> SimdIf:
        cond = self.check_expr(s.cond)
        n = cond.shape.count
        if cond.shape.is_scalar:
            self.fail(s.cond, "simd_if condition must be a vector or matrix")
        if n > MAX_MASK_LANES:
            self.fail(s.cond, f"simd_if mask has {n} lanes, at most {MAX_MASK_LANES} are supported")
        if self.mask is not None and n != self.mask:
            self.fail(s.cond, f"nested simd_if mask has {n} lanes inside a {self.mask}-lane region")
        self.masks.append(n)
        then_body = self.check_block(s.then_body, new_scope=True)
        else_body = self.check_block(s.else_body, new_scope=True) if s.else_body is not None else None
        self.masks.pop()
        return SimdIf(cond, then_body, else_body, line=s.line, col=s.col)

    def unroll(self, s: For) -> List[Stmt]:
        start, bound = self.const_int(s.start), self.const_int(s.bound)
        step = self.const_int(s.step) if s.step is not None else 1
        tests = {
            "<": lambda i: i < bound,
            "<=": lambda i: i <= bound,
            ">": lambda i: i > bound,
            ">=": lambda i: i >= bound,
            "==": lambda i: i == bound,
            "!=": lambda i: i != bound,
        }
        updates = {
            "++": lambda i: i + 1,
            "--": lambda i: i - 1,
            "+=": lambda i: i + step,
            "-=": lambda i: i - step,
            "*=": lambda i: i * step,
            "/=": lambda i: _c_div(i, step),
            "<<=": lambda i: i << (step & 31),
            ">>=": lambda i: i >> (step & 31),
        }
        out: List[Stmt] = []
        i, trips = start, 0
        while tests[s.cond_op](i):
            trips += 1
            if trips > MAX_LOOP_TRIPS:
                self.fail(s, f"for-loop runs more than {MAX_LOOP_TRIPS} iterations")
            sym = Symbol(s.var, ShapeType.scalar(D), "loop")
            self.scopes.append({s.var: sym})
            self.loop_values[id(sym)] = i
            out.extend(self.check_block(s.body, new_scope=True))
            self.scopes.pop()
            del self.loop_values[id(sym)]
            i = updates[s.update_op](i)
        return out

    # -- expressions -----------------------------------------------------------

    def check_lvalue(self, e: Expr) -> Expr:
        if isinstance(e, Name):
            sym = self.lookup(e)
            if sym.kind != "var":
                what = {"surface": "surface", "scalar_param": "kernel argument", "loop": "loop variable"}[sym.kind]
                self.fail(e, f"cannot assign to {what} '{e.ident}'")
            return Name(e.ident, symbol=sym, shape=sym.shape, line=e.line, col=e.col)
        if isinstance(e, Method) and e.name in ("select", "format"):
            target = self.check_lvalue(e.target)
            return self.check_method(e, target)
        self.fail(e, "assignment to an r-value")

    def check_expr(self, e: Expr) -> Expr:
        if isinstance(e, IntLit):
            if e.value >= 1 << 32:
                self.fail(e, f"integer literal {e.value} does not fit 32 bits")
            elem = UD if e.unsigned or e.value > 0x7FFFFFFF else D
            return IntLit(e.value, e.unsigned, shape=ShapeType.scalar(elem), line=e.line, col=e.col)
        if isinstance(e, FloatLit):
            return FloatLit(e.value, e.single, shape=ShapeType.scalar(F if e.single else DF), line=e.line, col=e.col)
        if isinstance(e, Name):
            sym = self.lookup(e)
            if sym.kind == "surface":
                self.fail(e, f"surface '{e.ident}' cannot be used as a value")
            if sym.kind == "loop":
                return IntLit(self.loop_values[id(sym)], shape=ShapeType.scalar(D), line=e.line, col=e.col)
            return Name(e.ident, symbol=sym, shape=sym.shape, line=e.line, col=e.col)
        if isinstance(e, Unary):
            operand = self.check_expr(e.operand)
            elem = promote_unary(operand.shape.elem)
            if e.op == "~" and elem.is_float:
                self.fail(e, "'~' needs an integer operand")
            operand = self.convert(operand, elem)
            self.in_body_size(e, operand.shape, "operation")
            return Unary(e.op, operand, shape=operand.shape.as_value(), line=e.line, col=e.col)
        if isinstance(e, Binary):
            return self.binary(e, e.op, self.check_expr(e.lhs), self.check_expr(e.rhs))
        if isinstance(e, Cast):
            return self.check_cast(e)
        if isinstance(e, Method):
            if e.name == "merge":
                self.fail(e, "the merge method is a statement; use merge(x, y, mask) in expressions")
            return self.check_method(e, self.check_expr(e.target))
        if isinstance(e, Call):
            return self.check_call(e)
        self.fail(e, f"unsupported expression {type(e).__name__}")

    def binary(self, node: Node, op: str, lhs: Expr, rhs: Expr) -> Expr:
        a, b = lhs.shape, rhs.shape
        if not a.is_scalar and not b.is_scalar and a.count != b.count:
            self.fail(node, f"element-count mismatch: {a} has {a.count} elements, {b} has {b.count}")
        shape = a.as_value() if not a.is_scalar else b.as_value()
        if op in BITWISE and (a.elem.is_float or b.elem.is_float):
            self.fail(node, f"'{op}' needs integer operands")
        if op in COMPARE_OPS:
            elem = promote(a.elem, b.elem)
            result = shape.with_elem(MASK_TYPE)
        elif op in SHIFT_OPS:
            elem = promote_unary(a.elem)
            result = shape.with_elem(elem)
        elif op in ARITH_OPS or op in ("min", "max"):
            elem = promote(a.elem, b.elem)
            result = shape.with_elem(elem)
        else:
            self.fail(node, f"unknown operator '{op}'")
        self.in_body_size(node, result, "operation")
        return Binary(op, self.convert(lhs, elem), self.convert(rhs, elem), shape=result, line=node.line, col=node.col)

    def check_cast(self, e: Cast) -> Cast:
        target = self.resolve_type(e.type)
        operand = self.check_expr(e.operand)
        if target.is_scalar and not operand.shape.is_scalar:
            self.fail(e, f"cannot convert {operand.shape} to scalar {target}")
        if not operand.shape.is_scalar and operand.shape.count != target.count:
            self.fail(e, f"element-count mismatch: cannot convert {operand.shape} to {target}")
        self.in_body_size(e, target, "conversion")
        return Cast(e.type, operand, False, shape=target, line=e.line, col=e.col)

    def check_method(self, e: Method, target: Expr) -> Expr:
        base = target.shape
        loc = {"line": e.line, "col": e.col}
        if base.is_scalar:
            self.fail(e, f"'{e.name}' needs a vector or matrix operand")
        if e.name == "select":
            targs = [self.const_int(t) for t in e.targs]
            args = [self.const_int(a) for a in e.args]
            if base.is_matrix:
                if len(targs) != 4 or len(args) != 2:
                    self.fail(e, "matrix select takes <vsize,vstride,hsize,hstride>(row, col)")
                spec = SelectSpec(*targs, *args)
            else:
                if len(targs) != 2 or len(args) != 1:
                    self.fail(e, "vector select takes <size,stride>(offset)")
                spec = SelectSpec.vector(targs[0], targs[1], args[0])
            if not spec.fits(base.rows, base.cols):
                self.fail(e, f"select {spec} is out of bounds for {base}")
            if base.is_matrix:
                shape = ShapeType.matrix(base.elem, spec.vsize, spec.hsize, is_ref=True)
            else:
                shape = ShapeType.vector(base.elem, spec.hsize, is_ref=True)
            return Method(target, "select", [], [], info=spec, shape=shape, **loc)
        if e.name == "format":
            elem = self.elem_of(e, e.targs[0].elem)
            if len(e.targs) == 3:
                rows, cols = self.const_int(e.targs[1]), self.const_int(e.targs[2])
                shape = ShapeType.matrix(elem, rows, cols, is_ref=True)
            else:
                if base.size_bytes % elem.size_bytes:
                    self.fail(e, f"format byte-size mismatch: {base.size_bytes} bytes are not a whole number of {elem.c_name}")
                shape = ShapeType.vector(elem, base.size_bytes // elem.size_bytes, is_ref=True)
            if shape.size_bytes != base.size_bytes:
                self.fail(e, f"format byte-size mismatch: {base} is {base.size_bytes} bytes, {shape} is {shape.size_bytes}")
            return Method(target, "format", [], [], info=shape, shape=shape, **loc)
        if e.name == "iselect":
            if len(e.args) != 1:
                self.fail(e, "iselect takes one index vector")
            idx = self.check_expr(e.args[0])
            if idx.shape.elem.is_float:
                self.fail(e, "iselect indices must be integers")
            if base.size_bytes > ISELECT_MAX_BYTES:
                self.fail(e, f"iselect source is {base.size_bytes} bytes; at most {ISELECT_MAX_BYTES} are supported")
            shape = ShapeType.vector(base.elem, idx.shape.count)
            self.in_body_size(e, shape, "operation")
            return Method(target, "iselect", [], [idx], shape=shape, **loc)
        if e.name == "replicate":
            if len(e.targs) == 1 and not e.args:
                spec = ReplicateSpec(self.const_int(e.targs[0]), 0, base.count, 1, 0)
            elif len(e.targs) == 4 and len(e.args) == 1:
                spec = ReplicateSpec(*[self.const_int(t) for t in e.targs], self.const_int(e.args[0]))
            else:
                self.fail(e, "replicate takes <K>() or <K,VS,W,HS>(start)")
            if not spec.fits(base.count):
                self.fail(e, f"replicate {spec} is out of bounds for {base}")
            shape = ShapeType.vector(base.elem, spec.k * spec.w)
            return Method(target, "replicate", [], [], info=spec, shape=shape, **loc)
        if e.name in ("any", "all"):
            if e.args or e.targs:
                self.fail(e, f"'{e.name}' takes no arguments")
            if self.mask is not None:
                self.fail(e, f"'{e.name}' is not allowed inside a simd-if body")
            return Method(target, e.name, [], [], shape=ShapeType.scalar(MASK_TYPE), **loc)
        self.fail(e, f"unknown method '{e.name}'")

    def merge_mask(self, e: Expr, count: int):
        if isinstance(e, (IntLit, Unary, Binary, Name)):
            try:
                bits = self.const_int(e)
                return None, MergeInfo(bits & ((1 << count) - 1) if count < 64 else bits)
            except TypeCheckError:
                pass
        mask = self.check_expr(e)
        if mask.shape.is_scalar:
            self.fail(e, "merge mask must be a vector or an integer constant")
        if mask.shape.count != count:
            self.fail(e, f"merge mask has {mask.shape.count} lanes, operands have {count}")
        return mask, MergeInfo()

    def check_merge_method(self, e: Method) -> Method:
        target = self.check_lvalue(e.target)
        shape = target.shape
        if shape.is_scalar:
            self.fail(e, "merge needs a vector or matrix")
        if len(e.args) not in (2, 3):
            self.fail(e, "merge takes (x, mask) or (x, y, mask)")
        values = []
        for a in e.args[:-1]:
            v = self.check_expr(a)
            if not v.shape.is_scalar and v.shape.count != shape.count:
                self.fail(a, f"element-count mismatch: merge into {shape} from {v.shape}")
            values.append(self.convert(v, shape.elem))
        mask, info = self.merge_mask(e.args[-1], shape.count)
        if self.mask is not None:
            self.in_body_size(e, shape, "assignment")
        args = values + ([mask] if mask is not None else [])
        return Method(target, "merge", [], args, info=info, shape=shape, line=e.line, col=e.col)

    def check_call(self, e: Call) -> Expr:
        loc = {"line": e.line, "col": e.col}
        if e.name in ("thread_x", "thread_y"):
            if e.args:
                self.fail(e, f"{e.name}() takes no arguments")
            return Call(e.name, [], [], shape=ShapeType.scalar(D), **loc)
        if e.name in ("min", "max"):
            if len(e.args) != 2:
                self.fail(e, f"{e.name} takes two arguments")
            return self.binary(e, e.name, self.check_expr(e.args[0]), self.check_expr(e.args[1]))
        if e.name == "merge":
            if len(e.args) != 3:
                self.fail(e, "merge(x, y, mask) takes three arguments")
            x, y = self.check_expr(e.args[0]), self.check_expr(e.args[1])
            if x.shape.is_scalar and y.shape.is_scalar:
                self.fail(e, "merge needs vector operands")
            if not x.shape.is_scalar and not y.shape.is_scalar and x.shape.count != y.shape.count:
                self.fail(e, f"element-count mismatch: {x.shape} and {y.shape}")
            shape = (x.shape if not x.shape.is_scalar else y.shape).as_value()
            elem = x.shape.elem if x.shape.elem == y.shape.elem else promote(x.shape.elem, y.shape.elem)
            shape = shape.with_elem(elem)
            mask, info = self.merge_mask(e.args[2], shape.count)
            self.in_body_size(e, shape, "operation")
            args = [self.convert(x, elem), self.convert(y, elem)] + ([mask] if mask is not None else [])
            return Call("merge", [], args, info=info, shape=shape, **loc)
        if e.name == "write_atomic":
            return self.check_memory(e, statement=False)
        if e.name in ("read", "write"):
            self.fail(e, f"{e.name}() is a statement")
        self.fail(e, f"unknown intrinsic '{e.name}'")

    def surface_arg(self, e: Expr, kind: str) -> Symbol:
        if not isinstance(e, Name):
            self.fail(e, "expected a surface parameter")
        sym = self.lookup(e)
        if sym.kind != "surface":
            self.fail(e, f"'{e.ident}' is not a surface")
        if sym.surface_kind not in (None, kind):
            self.fail(e, f"surface '{e.ident}' is used as both {sym.surface_kind} and {kind}")
        sym.surface_kind = kind
        return sym

    def int_scalar(self, e: Expr) -> Expr:
        v = self.check_expr(e)
        if not v.shape.is_scalar or v.shape.elem.is_float:
            self.fail(e, "expected an integer scalar")
        return self.convert(v, D)

    def offsets(self, e: Expr) -> Expr:
        v = self.check_expr(e)
        if v.shape.is_scalar or v.shape.elem.is_float:
            self.fail(e, "offsets must be an integer vector")
        self.in_body_size(e, v.shape, "access")
        return self.convert(v, UD)

    def check_memory(self, e: Call, statement: bool) -> Call:
        loc = {"line": e.line, "col": e.col}
        args = e.args
        if e.name == "write_atomic":
            op = e.targs[0]
            if op not in ATOMIC_ARITY:
                self.fail(e, f"unknown atomic operation '{op}'")
            if len(args) != 2 + ATOMIC_ARITY[op]:
                self.fail(e, f"write_atomic<{op}> takes a surface, offsets and {ATOMIC_ARITY[op]} source operand(s)")
            surf = self.surface_arg(args[0], "buffer")
            offsets = self.offsets(args[1])
            srcs = []
            for a in args[2:]:
                v = self.check_expr(a)
                if not v.shape.is_scalar and v.shape.count != offsets.shape.count:
                    self.fail(a, "atomic source must match the offsets or be a scalar")
                srcs.append(self.convert(v, UD))
            shape = ShapeType.vector(UD, offsets.shape.count)
            info = MemoryAccess("atomic", surf, op=op)
            return Call("write_atomic", [op], [Name(surf.name, symbol=surf, **loc), offsets] + srcs, info=info, shape=shape, **loc)

        reading = e.name == "read"
        if len(args) == 4:
            third = self.check_expr(args[2])
            if third.shape.is_scalar:
                return self.media(e, reading)
            surf = self.surface_arg(args[0], "buffer")
            goff = self.int_scalar(args[1])
            offsets = self.offsets(args[2])
            data = self.check_lvalue(args[3]) if reading else self.check_expr(args[3])
            if data.shape.is_scalar or data.shape.count != offsets.shape.count:
                self.fail(args[3], "scattered access needs one element per offset")
            if data.shape.elem.size_bytes > 4:
                self.fail(args[3], "scattered access moves 1, 2 or 4-byte elements")
            self.in_body_size(e, data.shape, "access")
            info = MemoryAccess("scatter", surf)
            return Call(e.name, [], [Name(surf.name, symbol=surf, **loc), goff, offsets, data], info=info, **loc)
        if len(args) == 3:
            if self.mask is not None:
                self.fail(e, "block memory access inside a simd-if body")
            surf = self.surface_arg(args[0], "buffer")
            offset = self.int_scalar(args[1])
            data = self.check_lvalue(args[2]) if reading else self.check_expr(args[2])
            if data.shape.is_scalar or data.shape.size_bytes % 16:
                self.fail(args[2], f"oword access moves whole 16-byte owords; {data.shape} is {data.shape.size_bytes} bytes")
            info = MemoryAccess("oword", surf)
            return Call(e.name, [], [Name(surf.name, symbol=surf, **loc), offset, data], info=info, **loc)
        self.fail(e, f"{e.name} takes (surface, x, y, block), (surface, offset, data) or (surface, offset, offsets, data)")

    def media(self, e: Call, reading: bool) -> Call:
        loc = {"line": e.line, "col": e.col}
        args = e.args
        if self.mask is not None:
            self.fail(e, "block memory access inside a simd-if body")
        surf = self.surface_arg(args[0], "image")
        x, y = self.int_scalar(args[1]), self.int_scalar(args[2])
        data = self.check_lvalue(args[3]) if reading else self.check_expr(args[3])
        shape = data.shape
        if shape.is_scalar:
            self.fail(args[3], "media block access needs a vector or matrix")
        rows = shape.rows if shape.is_matrix else 1
        width = shape.size_bytes // rows
        if width > MEDIA_MAX_WIDTH:
            self.fail(args[3], f"media block rows are {width} bytes wide; at most {MEDIA_MAX_WIDTH} are supported")
        info = MemoryAccess("media", surf, rows=rows, width=width)
        return Call(e.name, [], [Name(surf.name, symbol=surf, **loc), x, y, data], info=info, **loc)


def typecheck(kernel: Kernel, file: str = "<input>") -> CheckedKernel:
    """Check a parsed kernel; raises TypeCheckError with located diagnostics."""
    return TypeChecker(file).check(kernel)
