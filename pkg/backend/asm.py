"""
Parser for the textual assembly, the input of ``cmsimd run``.
"""

from __future__ import annotations

import re
from typing import List, Optional, Tuple

from backend.emit import Source, VISAInstruction, VISAProgram
from backend.machine import DstDesc, Immediate, RegionDesc, Special
from elemtypes import elem
from errors import Diagnostic, ParseError

_SRC_REGION = re.compile(r"r(\d+)\.(\d+)<(\d+);(\d+),(\d+)>:(\w+)$")
_DST_REGION = re.compile(r"r(\d+)\.(\d+)<(\d+)>:(\w+)$")
_IMMEDIATE = re.compile(r"0x([0-9A-Fa-f]+):(\w+)$")
_SPECIAL = re.compile(r"%([\w.]+):(\w+)$")
_EXEC = re.compile(r"\((\d+)\|(NM|M\d+)\)$")


class _AsmError(Exception):
    pass


def _src(token: str) -> Source:
    m = _SRC_REGION.match(token)
    if m:
        reg, sub, v, w, h, t = m.groups()
        return RegionDesc(int(reg), int(sub), int(v), int(w), int(h), elem(t))
    m = _IMMEDIATE.match(token)
    if m:
        return Immediate(int(m.group(1), 16), elem(m.group(2)))
    m = _SPECIAL.match(token)
    if m:
        return Special(m.group(1), elem(m.group(2)))
    raise _AsmError(f"bad source operand '{token}'")


def _dst(token: str) -> Optional[DstDesc]:
    if token == "null":
        return None
    m = _DST_REGION.match(token)
    if not m:
        raise _AsmError(f"bad destination operand '{token}'")
    reg, sub, h, t = m.groups()
    return DstDesc(int(reg), int(sub), int(h), elem(t))


def _instruction(tokens: List[str], line: int) -> VISAInstruction:
    pred = None
    if tokens[0].startswith("("):
        region = _src(tokens.pop(0)[1:-1])
        if not isinstance(region, RegionDesc):
            raise _AsmError("predicate must be a register region")
        pred = region
    if len(tokens) < 2:
        raise _AsmError("expected an opcode and an execution size")
    opcode = tokens.pop(0)
    m = _EXEC.match(tokens.pop(0))
    if not m:
        raise _AsmError(f"bad execution size after '{opcode}'")
    exec_size = int(m.group(1))
    mask = None if m.group(2) == "NM" else int(m.group(2)[1:])
    surface = None
    if tokens and tokens[0].startswith("@"):
        surface = tokens.pop(0)[1:]
    dst = None
    if not opcode.startswith("simd_"):
        if not tokens:
            raise _AsmError(f"'{opcode}' needs a destination")
        dst = _dst(tokens.pop(0))
    srcs = tuple(_src(t) for t in tokens)
    return VISAInstruction(opcode, exec_size, mask, dst, srcs, pred, surface, line)


def parse_visa(text: str, file: str = "<input>") -> VISAProgram:
    """Parse assembly text back into a VISAProgram; errors carry the line number."""
    name = ""
    surfaces: List[Tuple[str, str]] = []
    args = []
    grf_used = 0
    insts: List[VISAInstruction] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//")[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if tokens[0] == ".kernel":
                name = tokens[1]
            elif tokens[0] == ".surface":
                if tokens[2] not in ("image", "buffer"):
                    raise _AsmError(f"unknown surface kind '{tokens[2]}'")
                surfaces.append((tokens[1], tokens[2]))
            elif tokens[0] == ".arg":
                args.append((tokens[1], elem(tokens[2])))
            elif tokens[0] == ".grf":
                grf_used = int(tokens[1])
            elif tokens[0].startswith("."):
                raise _AsmError(f"unknown directive '{tokens[0]}'")
            else:
                insts.append(_instruction(tokens, lineno))
        except (_AsmError, ValueError, IndexError) as e:
            raise ParseError([Diagnostic(str(e) or "malformed line", lineno, 1, file)]) from None
    if not name:
        raise ParseError([Diagnostic("missing .kernel directive", 1, 1, file)])
    return VISAProgram(name, tuple(surfaces), tuple(args), grf_used, tuple(insts))
