"""
Recursive-descent parser producing a Kernel syntax tree.
"""

from __future__ import annotations

import logging
from typing import Callable, List, Optional

from errors import Diagnostic, ParseError
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
    Param,
    SimdIf,
    Stmt,
    TypeRef,
    Unary,
)
from frontend.lexer import Token, int_value, tokenize

logger = logging.getLogger(__name__)

SCALAR_TYPES = {"char", "uchar", "short", "ushort", "int", "uint", "float", "double"}
METHODS = {"select", "iselect", "replicate", "format", "any", "all", "merge"}
FUNCTIONS = {"merge", "min", "max", "thread_x", "thread_y", "read", "write", "write_atomic"}
ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="}
FOR_UPDATE_OPS = {"+=", "-=", "*=", "/=", "<<=", ">>="}
RELATIONAL = {"<", "<=", ">", ">=", "==", "!="}

METHOD_TEMPLATE_ARITY = {"select": (2, 4), "replicate": (1, 4), "format": (1, 3)}

BINARY_LEVELS = [
    {"|"},
    {"^"},
    {"&"},
    {"==", "!="},
    {"<", "<=", ">", ">="},
    {"<<", ">>"},
    {"+", "-"},
    {"*", "/", "%"},
]


class Parser:
    def __init__(self, source: str, file: str = "<input>"):
        self.file = file
        self.tokens = tokenize(source, file)
        self.pos = 0

    # -- token helpers -------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError([Diagnostic(message, tok.line, tok.col, self.file)])

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.tok.is_(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.tok.is_(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected '{text}' but found '{found}'")
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected an identifier but found '{self.tok.text or 'end of input'}'")
        return self.advance()

    def loc(self, tok: Token) -> dict:
        return {"line": tok.line, "col": tok.col}

    # -- kernel / statements -------------------------------------------

    def parse_kernel(self) -> Kernel:
        start = self.expect("kernel")
        name = self.expect_ident().text
        self.expect("(")
        params: List[Param] = []
        if not self.tok.is_(")"):
            while True:
                params.append(self.parse_param())
                if not self.accept(","):
                    break
        self.expect(")")
        body = self.parse_block()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected '{self.tok.text}' after the kernel body")
        return Kernel(name, params, body, **self.loc(start))

    def parse_param(self) -> Param:
        tok = self.tok
        if self.accept("surface"):
            return Param("surface", self.expect_ident().text, **self.loc(tok))
        if tok.kind == "keyword" and tok.text in SCALAR_TYPES:
            self.advance()
            return Param("scalar", self.expect_ident().text, tok.text, **self.loc(tok))
        raise self.error("kernel parameters are 'surface NAME' or a scalar type followed by a name")

    def parse_block(self) -> List[Stmt]:
        self.expect("{")
        body: List[Stmt] = []
        while not self.tok.is_("}"):
            if self.tok.kind == "eof":
                raise self.error("expected '}' but found end of input")
            body.append(self.parse_stmt())
        self.expect("}")
        return body

    def starts_type(self) -> bool:
        tok = self.tok
        return tok.kind == "keyword" and (tok.text in SCALAR_TYPES or tok.text in ("vector", "matrix"))

    def parse_stmt(self) -> Stmt:
        tok = self.tok
        if tok.is_("simd_if"):
            return self.parse_simd_if()
        if tok.is_("for"):
            return self.parse_for()
        if self.starts_type():
            saved = self.pos
            ty = self.parse_type()
            if self.tok.kind == "ident":
                name = self.advance().text
                init = self.parse_expr() if self.accept("=") else None
                self.expect(";")
                return Decl(ty, name, init, **self.loc(tok))
            self.pos = saved
        expr = self.parse_expr()
        if self.tok.kind == "punct" and self.tok.text in ASSIGN_OPS:
            op = self.advance().text
            value = self.parse_expr()
            self.expect(";")
            return Assign(expr, op, value, **self.loc(tok))
        self.expect(";")
        return ExprStmt(expr, **self.loc(tok))

    def parse_simd_if(self) -> SimdIf:
        tok = self.expect("simd_if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then_body = self.parse_block()
        else_body = self.parse_block() if self.accept("simd_else") else None
        return SimdIf(cond, then_body, else_body, **self.loc(tok))

    def parse_for(self) -> For:
        tok = self.expect("for")
        self.expect("(")
        self.expect("int")
        var_tok = self.expect_ident()
        self.expect("=")
        start = self.parse_expr()
        self.expect(";")
        self._expect_loop_var(var_tok.text)
        if not (self.tok.kind == "punct" and self.tok.text in RELATIONAL):
            raise self.error("for-loop condition must compare the loop variable")
        cond_op = self.advance().text
        bound = self.parse_expr()
        self.expect(";")
        self._expect_loop_var(var_tok.text)
        if self.tok.is_("++") or self.tok.is_("--"):
            update_op, step = self.advance().text, None
        elif self.tok.kind == "punct" and self.tok.text in FOR_UPDATE_OPS:
            update_op = self.advance().text
            step = self.parse_expr()
        else:
            raise self.error("for-loop update must be ++, -- or a compound assignment")
        self.expect(")")
        body = self.parse_block()
        return For(var_tok.text, start, cond_op, bound, update_op, step, body, **self.loc(tok))

    def _expect_loop_var(self, name: str):
        tok = self.expect_ident()
        if tok.text != name:
            raise self.error(f"for-loop must test and update '{name}'", tok)

    # -- types ---------------------------------------------------------

    def parse_scalar_type(self) -> str:
        tok = self.tok
        if tok.kind == "keyword" and tok.text in SCALAR_TYPES:
            self.advance()
            return tok.text
        raise self.error(f"expected an element type but found '{tok.text or 'end of input'}'")

    def parse_type(self) -> TypeRef:
        tok = self.tok
        if self.accept("vector") or self.accept("matrix"):
            kind = tok.text
            self.expect("<")
            elem = self.parse_scalar_type()
            dims = []
            while self.accept(","):
                dims.append(self.parse_template_expr())
            close = self.expect(">")
            wanted = 1 if kind == "vector" else 2
            if len(dims) != wanted:
                raise self.error(f"{kind} takes {wanted + 1} template arguments, got {len(dims) + 1}", close)
            return TypeRef(kind, elem, dims, **self.loc(tok))
        return TypeRef("scalar", self.parse_scalar_type(), [], **self.loc(tok))

    def parse_template_expr(self) -> Expr:
        # additive level keeps '>' free to close the argument list
        return self.parse_binary(6)

    # -- expressions ---------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_binary(0)

    def parse_binary(self, level: int) -> Expr:
        if level == len(BINARY_LEVELS):
            return self.parse_unary()
        lhs = self.parse_binary(level + 1)
        while self.tok.kind == "punct" and self.tok.text in BINARY_LEVELS[level]:
            op_tok = self.advance()
            rhs = self.parse_binary(level + 1)
            lhs = Binary(op_tok.text, lhs, rhs, **self.loc(op_tok))
        return lhs

    def parse_unary(self) -> Expr:
        tok = self.tok
        if tok.is_("-") or tok.is_("~"):
            self.advance()
            return Unary(tok.text, self.parse_unary(), **self.loc(tok))
        if tok.is_("+"):
            self.advance()
            return self.parse_unary()
        return self.parse_postfix(self.parse_primary())

    def parse_postfix(self, expr: Expr) -> Expr:
        while self.accept("."):
            name_tok = self.expect_ident()
            name = name_tok.text
            if name not in METHODS:
                raise self.error(f"unknown intrinsic method '{name}'", name_tok)
            targs = []
            if self.tok.is_("<"):
                targs = self.parse_template_args(name, name_tok)
            elif name in ("select", "replicate", "format"):
                raise self.error(f"'{name}' needs a template argument list", name_tok)
            args = self.parse_call_args()
            expr = Method(expr, name, targs, args, **self.loc(name_tok))
        return expr

    def parse_template_args(self, name: str, name_tok: Token) -> list:
        self.expect("<")
        targs: list = []
        if name == "format":
            targs.append(TypeRef("scalar", self.parse_scalar_type(), [], **self.loc(self.tok)))
            while self.accept(","):
                targs.append(self.parse_template_expr())
        elif name == "write_atomic":
            targs.append(self.expect_ident().text)
        else:
            targs.append(self.parse_template_expr())
            while self.accept(","):
                targs.append(self.parse_template_expr())
        close = self.expect(">")
        allowed = METHOD_TEMPLATE_ARITY.get(name)
        if allowed and len(targs) not in allowed:
            raise self.error(
                f"malformed template argument list: '{name}' takes {' or '.join(map(str, allowed))} arguments, got {len(targs)}",
                close,
            )
        if name not in METHOD_TEMPLATE_ARITY and name != "write_atomic":
            raise self.error(f"'{name}' does not take template arguments", name_tok)
        return targs

    def parse_call_args(self) -> List[Expr]:
        self.expect("(")
        args: List[Expr] = []
        if not self.tok.is_(")"):
            while True:
                args.append(self.parse_expr())
                if not self.accept(","):
                    break
        self.expect(")")
        return args

    def parse_primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "int":
            self.advance()
            value, unsigned = int_value(tok.text)
            return IntLit(value, unsigned, **self.loc(tok))
        if tok.kind == "float":
            self.advance()
            single = tok.text[-1] in "fF"
            return FloatLit(float(tok.text.rstrip("fF")), single, **self.loc(tok))
        if tok.is_("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if self.starts_type():
            ty = self.parse_type()
            if not self.tok.is_("("):
                raise self.error(f"expected '(' after type in a conversion")
            self.advance()
            operand = self.parse_expr()
            self.expect(")")
            return Cast(ty, operand, **self.loc(tok))
        if tok.kind == "ident":
            self.advance()
            if self.tok.is_("(") or (tok.text == "write_atomic" and self.tok.is_("<")):
                if tok.text not in FUNCTIONS:
                    raise self.error(f"unknown intrinsic '{tok.text}'", tok)
                targs = self.parse_template_args(tok.text, tok) if self.tok.is_("<") else []
                if tok.text == "write_atomic" and not targs:
                    raise self.error("write_atomic needs an operation, as in write_atomic<add>(...)", tok)
                return Call(tok.text, targs, self.parse_call_args(), **self.loc(tok))
            return Name(tok.text, **self.loc(tok))
        raise self.error(f"unexpected '{tok.text or 'end of input'}'")


def parse(source: str, file: str = "<input>") -> Kernel:
    """Parse kernel source into a syntax tree; raises ParseError with located diagnostics."""
    kernel = Parser(source, file).parse_kernel()
    logger.debug(f"Parsed kernel {kernel.name} with {len(kernel.body)} statements")
    return kernel
