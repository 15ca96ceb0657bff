"""
Textual dump of region-IR modules, one instruction per line.
"""

from __future__ import annotations

from typing import List

import numpy as np

from regionir.ir import IRInstruction, IRModule

MAX_CONST_SHOWN = 16


def _const_text(inst: IRInstruction) -> str:
    values = inst.const_values()
    if np.all(values == values[0]) and values.size > 1:
        return f"splat({_scalar(values[0])})"
    shown = ", ".join(_scalar(v) for v in values[:MAX_CONST_SHOWN])
    if values.size > MAX_CONST_SHOWN:
        shown += f", ... {values.size - MAX_CONST_SHOWN} more"
    return f"[{shown}]"


def _scalar(v) -> str:
    if isinstance(v, np.floating):
        return repr(float(v))
    return str(int(v))


def format_instruction(inst: IRInstruction) -> str:
    parts: List[str] = []
    name = inst.opcode
    if inst.opcode == "cmp":
        name += "." + inst.attrs["rel"]
    elif inst.opcode == "atomic":
        name += "." + inst.attrs["op"]
    head = f"{inst.result} = {name}" if inst.result is not None else name
    if "surface" in inst.attrs:
        parts.append("@" + inst.attrs["surface"])
    if inst.opcode == "const":
        parts.append(_const_text(inst))
    elif inst.opcode == "param":
        parts.append(inst.attrs["name"])
    parts.extend(str(v) for v in inst.operands)
    text = head + (" " + ", ".join(parts) if parts else "")
    if inst.region is not None:
        text += f" {inst.region}"
    extras = []
    if inst.is_masked:
        extras.append("masked")
    if "rows" in inst.attrs:
        extras.append(f"rows={inst.attrs['rows']} width={inst.attrs['width']}")
    if extras:
        text += " " + " ".join(extras)
    if inst.result is not None:
        text += f" : {inst.result.elem}x{inst.result.length}"
    return text


def format_module(module: IRModule) -> str:
    lines = [f"kernel {module.name}"]
    for p in module.params:
        if p.kind == "surface":
            lines.append(f"  surface {p.name} {p.surface_kind or 'unknown'}")
        else:
            lines.append(f"  arg {p.name} {p.elem}")
    depth = 0
    for inst in module.instructions:
        if inst.opcode in ("simd_else", "simd_if_end"):
            depth -= 1
        lines.append("  " + "  " * depth + format_instruction(inst))
        if inst.opcode in ("simd_if_begin", "simd_else"):
            depth += 1
    return "\n".join(lines) + "\n"
