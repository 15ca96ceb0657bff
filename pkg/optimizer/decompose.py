"""
Vector decomposition.

A declared vector that is only ever touched through regions falling into
byte-disjoint segments is split into one smaller value per segment, so
that the register allocator sees independent live ranges.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Tuple

from regionir.ir import IRBuilder, IRInstruction, IRModule, IRValue

logger = logging.getLogger(__name__)


def _chain(root: IRInstruction, uses, depths) -> Optional[List[IRInstruction]]:
    """Versions of a constant-rooted value linked by wrregion old operands, or None if not splittable."""
    elem = root.result.elem
    versions = [root]
    v = root.result
    while True:
        next_version = None
        for user, pos in uses.get(v.id, []):
            if depths[user.iid] > 0:
                return None
            if user.opcode == "rdregion" and user.result.elem == elem:
                continue
            if user.opcode == "wrregion" and pos == 0 and user.operands[1].elem == elem and next_version is None:
                next_version = user
                continue
            return None
        if next_version is None:
            return versions
        versions.append(next_version)
        v = next_version.result


def _segments(chain: List[IRInstruction], uses) -> List[Tuple[int, int]]:
    size = chain[0].result.elem.size_bytes
    spans = []
    for inst in chain[1:]:
        spans.append(inst.region.byte_interval(size))
    for inst in chain:
        for user, _ in uses.get(inst.result.id, []):
            if user.opcode == "rdregion":
                spans.append(user.region.byte_interval(size))
    merged: List[Tuple[int, int]] = []
    for lo, hi in sorted(spans):
        if merged and lo < merged[-1][1]:
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))
    return merged


def decompose_vectors(module: IRModule) -> IRModule:
    uses = module.uses()
    depths = {inst.iid: d for inst, d in zip(module.instructions, module.simd_depths())}
    plans: Dict[int, Tuple[List[IRInstruction], List[Tuple[int, int]]]] = {}
    claimed = set()
    for inst in module.instructions:
        if inst.opcode != "const" or depths[inst.iid] > 0 or inst.result.length < 2:
            continue
        chain = _chain(inst, uses, depths)
        if chain is None:
            continue
        segments = _segments(chain, uses)
        if len(segments) < 2:
            continue
        plans[inst.iid] = (chain, segments)
        claimed.update(i.iid for i in chain)
    if not plans:
        return module

    b = IRBuilder.continuing(module)
    # per chain version: the value holding each segment
    parts: Dict[int, List[IRValue]] = {}
    seg_of: Dict[int, List[Tuple[int, int]]] = {}
    for chain, segments in plans.values():
        for inst in chain:
            seg_of[inst.result.id] = segments

    def locate(v: IRValue, lo: int, hi: int) -> int:
        for i, (s_lo, s_hi) in enumerate(seg_of[v.id]):
            if s_lo <= lo and hi <= s_hi:
                return i
        raise AssertionError("region outside every segment")

    out: List[IRInstruction] = []
    for inst in module.instructions:
        res = inst.result
        if inst.opcode == "const" and inst.iid in plans:
            elem = res.elem
            pieces = []
            for lo, hi in plans[inst.iid][1]:
                value = b.value(elem, (hi - lo) // elem.size_bytes, res.name)
                out.append(b.make("const", (), value, const=inst.const[lo:hi], line=inst.line))
                pieces.append(value)
            parts[res.id] = pieces
            continue
        if inst.opcode == "wrregion" and inst.iid in claimed:
            old = inst.operands[0]
            size = inst.operands[1].elem.size_bytes
            lo, hi = inst.region.byte_interval(size)
            i = locate(old, lo, hi)
            s_lo = seg_of[old.id][i][0]
            segment = parts[old.id][i]
            value = b.value(segment.elem, segment.length, res.name)
            operands = (segment,) + inst.operands[1:]
            out.append(b.make("wrregion", operands, value, region=inst.region.rebased(s_lo), attrs=inst.attrs, line=inst.line))
            pieces = list(parts[old.id])
            pieces[i] = value
            parts[res.id] = pieces
            continue
        if inst.opcode == "rdregion" and inst.operands[0].id in parts:
            src = inst.operands[0]
            size = res.elem.size_bytes
            lo, hi = inst.region.byte_interval(size)
            i = locate(src, lo, hi)
            s_lo = seg_of[src.id][i][0]
            out.append(b.make("rdregion", (parts[src.id][i],), res, region=inst.region.rebased(s_lo), line=inst.line))
            continue
        out.append(inst)

    logger.debug(f"decompose: split {len(plans)} vector(s) in {module.name}")
    return module.with_instructions(out, b)
