"""
Tokenizer for the kernel language.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List

from errors import Diagnostic, ParseError

KEYWORDS = {
    "kernel",
    "surface",
    "vector",
    "matrix",
    "simd_if",
    "simd_else",
    "for",
    "char",
    "uchar",
    "short",
    "ushort",
    "int",
    "uint",
    "float",
    "double",
}

PUNCTUATION = [
    "<<=", ">>=",
    "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "<<", ">>", "<=", ">=", "==", "!=",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "<", ">", "=",
    "(", ")", "{", "}", ",", ";", ".",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<float>(\d+\.\d*([eE][+-]?\d+)?|\d+[eE][+-]?\d+|\.\d+([eE][+-]?\d+)?)[fF]?)
  | (?P<int>(0[xX][0-9a-fA-F]+|0[bB][01]+|\d+)[uU]?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>"""
    + "|".join(re.escape(p) for p in PUNCTUATION)
    + r""")
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, int, float, punct, eof
    text: str
    line: int
    col: int

    def is_(self, text: str) -> bool:
        return self.kind in ("punct", "keyword") and self.text == text


def tokenize(source: str, file: str = "<input>") -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            col = pos - line_start + 1
            raise ParseError([Diagnostic(f"unexpected character {source[pos]!r}", line, col, file)])
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "ident" and text in KEYWORDS:
            kind = "keyword"
        if kind not in ("ws", "line_comment", "block_comment"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def int_value(text: str) -> tuple[int, bool]:
    """Value and unsigned flag of an integer literal."""
    unsigned = text[-1] in "uU"
    body = text[:-1] if unsigned else text
    if body[:2].lower() == "0x":
        return int(body, 16), unsigned
    if body[:2].lower() == "0b":
        return int(body[2:], 2), unsigned
    return int(body, 10), unsigned
