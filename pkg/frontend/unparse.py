"""
Pretty-printer from syntax tree back to kernel source.
"""

from __future__ import annotations

from typing import List

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
    SimdIf,
    Stmt,
    TypeRef,
    Unary,
)

INDENT = "    "


def unparse_type(ty: TypeRef) -> str:
    if ty.kind == "scalar":
        return ty.elem
    return f"{ty.kind}<{', '.join([ty.elem] + [unparse_expr(d) for d in ty.dims])}>"


def _targ(arg) -> str:
    if isinstance(arg, str):
        return arg
    if isinstance(arg, TypeRef):
        return unparse_type(arg)
    return unparse_expr(arg)


def _targs(targs) -> str:
    return f"<{', '.join(_targ(a) for a in targs)}>" if targs else ""


def unparse_expr(e: Expr) -> str:
    if isinstance(e, IntLit):
        return f"{e.value}u" if e.unsigned else str(e.value)
    if isinstance(e, FloatLit):
        text = repr(float(e.value))
        if "e" not in text and "." not in text:
            text += ".0"
        if text in ("inf", "nan"):
            raise ValueError(f"float literal {text} has no source spelling")
        return text + ("f" if e.single else "")
    if isinstance(e, Name):
        return e.ident
    if isinstance(e, Unary):
        return f"{e.op}({unparse_expr(e.operand)})"
    if isinstance(e, Binary):
        return f"({unparse_expr(e.lhs)} {e.op} {unparse_expr(e.rhs)})"
    if isinstance(e, Cast):
        return f"{unparse_type(e.type)}({unparse_expr(e.operand)})"
    if isinstance(e, Method):
        args = ", ".join(unparse_expr(a) for a in e.args)
        return f"{unparse_expr(e.target)}.{e.name}{_targs(e.targs)}({args})"
    if isinstance(e, Call):
        args = ", ".join(unparse_expr(a) for a in e.args)
        return f"{e.name}{_targs(e.targs)}({args})"
    raise TypeError(f"cannot unparse {type(e).__name__}")


def _stmts(body: List[Stmt], depth: int) -> List[str]:
    lines: List[str] = []
    pad = INDENT * depth
    for s in body:
        if isinstance(s, Decl):
            init = f" = {unparse_expr(s.init)}" if s.init is not None else ""
            lines.append(f"{pad}{unparse_type(s.type)} {s.name}{init};")
        elif isinstance(s, Assign):
            lines.append(f"{pad}{unparse_expr(s.target)} {s.op} {unparse_expr(s.value)};")
        elif isinstance(s, ExprStmt):
            lines.append(f"{pad}{unparse_expr(s.expr)};")
        elif isinstance(s, SimdIf):
            lines.append(f"{pad}simd_if ({unparse_expr(s.cond)}) {{")
            lines.extend(_stmts(s.then_body, depth + 1))
            if s.else_body is not None:
                lines.append(f"{pad}}} simd_else {{")
                lines.extend(_stmts(s.else_body, depth + 1))
            lines.append(f"{pad}}}")
        elif isinstance(s, For):
            if s.step is None:
                update = f"{s.var}{s.update_op}"
            else:
                update = f"{s.var} {s.update_op} {unparse_expr(s.step)}"
            lines.append(
                f"{pad}for (int {s.var} = {unparse_expr(s.start)}; "
                f"{s.var} {s.cond_op} {unparse_expr(s.bound)}; {update}) {{"
            )
            lines.extend(_stmts(s.body, depth + 1))
            lines.append(f"{pad}}}")
        else:
            raise TypeError(f"cannot unparse {type(s).__name__}")
    return lines


def unparse(kernel: Kernel) -> str:
    params = ", ".join(f"surface {p.name}" if p.kind == "surface" else f"{p.elem} {p.name}" for p in kernel.params)
    lines = [f"kernel {kernel.name}({params}) {{"]
    lines.extend(_stmts(kernel.body, 1))
    lines.append("}")
    return "\n".join(lines) + "\n"
