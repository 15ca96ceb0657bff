"""
Region combining.

Chains of region reads compose into a single read when the composed index
map is one ``<V;W,H>`` region, and nested writes that only re-insert a
sub-region of the value they were read from compose into one write. A
write that replaces every element is the written value itself.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Dict

from regionir.ir import IRInstruction, IRModule, IRValue
from regionir.regions import compose_indices, find_region

logger = logging.getLogger(__name__)


def _plain_write(inst: IRInstruction) -> bool:
    return inst.opcode == "wrregion" and not inst.is_predicated and not inst.is_masked


def collapse_regions(module: IRModule) -> IRModule:
    current: Dict[int, IRInstruction] = {}
    mapping: Dict[int, IRValue] = {}
    out = []
    combined = 0

    def resolve(v: IRValue) -> IRValue:
        while v.id in mapping:
            v = mapping[v.id]
        return v

    for inst, depth in zip(module.instructions, module.simd_depths()):
        if any(v.id in mapping for v in inst.operands):
            inst = inst.with_operands(resolve(v) for v in inst.operands)
        res = inst.result

        if inst.opcode == "rdregion":
            src = inst.operands[0]
            size = res.elem.size_bytes
            if src.elem == res.elem and inst.region.is_identity(src.length, size):
                mapping[res.id] = src
                combined += 1
                continue
            inner = current.get(src.id)
            if inner is not None and inner.opcode == "rdregion" and inner.result.elem == res.elem:
                composed = compose_indices(inst.region.indices(size), inner.region.indices(size))
                region = find_region(composed, size)
                if region is not None:
                    inst = replace(inst, operands=inner.operands, region=region)
                    combined += 1
            elif (
                inner is not None
                and depth == 0
                and _plain_write(inner)
                and inner.region == inst.region
                and inner.operands[1].elem == res.elem
                and inner.operands[1].length == res.length
            ):
                # reading back exactly what was just written
                mapping[res.id] = inner.operands[1]
                combined += 1
                continue

        elif _plain_write(inst) and depth == 0:
            old, new = inst.operands
            inner = current.get(new.id)
            write_elem = new.elem
            if inner is not None and _plain_write(inner) and inner.operands[1].elem == write_elem:
                read = current.get(inner.operands[0].id)
                if (
                    read is not None
                    and read.opcode == "rdregion"
                    and read.operands[0].id == old.id
                    and read.region == inst.region
                    and read.result.elem == write_elem
                ):
                    size = write_elem.size_bytes
                    composed = compose_indices(inner.region.indices(size), inst.region.indices(size))
                    region = find_region(composed, size)
                    if region is not None:
                        inst = replace(inst, operands=(old, inner.operands[1]), region=region)
                        combined += 1
            prev = current.get(old.id)
            if prev is not None and _plain_write(prev) and prev.region == inst.region and prev.operands[1].elem == write_elem:
                inst = replace(inst, operands=(prev.operands[0], inst.operands[1]))
                combined += 1
            old, new = inst.operands
            if new.elem == old.elem and new.length == old.length and inst.region.is_identity(old.length, write_elem.size_bytes):
                # every element is overwritten
                mapping[res.id] = new
                combined += 1
                continue

        if res is not None:
            current[res.id] = inst
        out.append(inst)

    if combined:
        logger.debug(f"collapse: {combined} region instruction(s) combined in {module.name}")
    return module.with_instructions(out)
