"""
Syntax tree of the kernel language.

Source locations, resolved shapes and checker annotations are excluded
from equality so that two parses of equivalent text compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, List, Optional, Union

from frontend.shapes import ShapeType


@dataclass(eq=False)
class Symbol:
    name: str
    shape: Optional[ShapeType]
    kind: str  # var | scalar_param | surface
    surface_kind: Optional[str] = None

    def __repr__(self) -> str:
        return f"Symbol({self.name}, {self.kind})"


@dataclass
class Node:
    line: int = field(default=0, compare=False, kw_only=True, repr=False)
    col: int = field(default=0, compare=False, kw_only=True, repr=False)


@dataclass
class TypeRef(Node):
    kind: str  # scalar | vector | matrix
    elem: str  # C spelling of the element type
    dims: List["Expr"] = field(default_factory=list)


@dataclass
class Expr(Node):
    shape: Optional[ShapeType] = field(default=None, compare=False, kw_only=True, repr=False)


@dataclass
class IntLit(Expr):
    value: int
    unsigned: bool = False


@dataclass
class FloatLit(Expr):
    value: float
    single: bool = False


@dataclass
class Name(Expr):
    ident: str
    symbol: Optional[Symbol] = field(default=None, compare=False, kw_only=True, repr=False)


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr


@dataclass
class Cast(Expr):
    type: TypeRef
    operand: Expr
    implicit: bool = field(default=False, compare=False)


TemplateArg = Union[Expr, TypeRef, str]


@dataclass
class Method(Expr):
    target: Expr
    name: str
    targs: List[TemplateArg] = field(default_factory=list)
    args: List[Expr] = field(default_factory=list)
    info: Any = field(default=None, compare=False, kw_only=True, repr=False)


@dataclass
class Call(Expr):
    name: str
    targs: List[TemplateArg] = field(default_factory=list)
    args: List[Expr] = field(default_factory=list)
    info: Any = field(default=None, compare=False, kw_only=True, repr=False)


@dataclass
class Stmt(Node):
    pass


@dataclass
class Decl(Stmt):
    type: TypeRef
    name: str
    init: Optional[Expr] = None
    symbol: Optional[Symbol] = field(default=None, compare=False, kw_only=True, repr=False)


@dataclass
class Assign(Stmt):
    target: Expr
    op: str
    value: Expr


@dataclass
class ExprStmt(Stmt):
    expr: Expr


@dataclass
class SimdIf(Stmt):
    cond: Expr
    then_body: List[Stmt]
    else_body: Optional[List[Stmt]] = None


@dataclass
class For(Stmt):
    var: str
    start: Expr
    cond_op: str
    bound: Expr
    update_op: str
    step: Optional[Expr]
    body: List[Stmt]


@dataclass
class Param(Node):
    kind: str  # surface | scalar
    name: str
    elem: Optional[str] = None
    symbol: Optional[Symbol] = field(default=None, compare=False, kw_only=True, repr=False)


@dataclass
class Kernel(Node):
    name: str
    params: List[Param]
    body: List[Stmt]
