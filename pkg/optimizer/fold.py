"""
Constant folding and propagation over vector values.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Dict

import numpy as np

from regionir.evaluator import evaluate_pure
from regionir.ir import ARITH_OPCODES, IRModule

logger = logging.getLogger(__name__)

FOLDABLE = ARITH_OPCODES | {"mov", "cmp", "sel", "rdregion", "wrregion", "iselect_gather", "mask_any", "mask_all"}


def fold_constants(module: IRModule) -> IRModule:
    """Replace instructions whose operands are all constants by their constant result."""
    known: Dict[int, np.ndarray] = {}
    out = []
    folded = 0
    for inst, depth in zip(module.instructions, module.simd_depths()):
        if inst.opcode == "const":
            known[inst.result.id] = inst.const_values()
        elif (
            inst.opcode in FOLDABLE
            and all(v.id in known for v in inst.operands)
            and not (inst.opcode == "wrregion" and depth > 0)
        ):
            values = np.ascontiguousarray(evaluate_pure(inst, [known[v.id] for v in inst.operands]))
            values = values.astype(inst.result.elem.dtype, copy=False)
            known[inst.result.id] = values
            inst = replace(inst, opcode="const", operands=(), region=None, const=values.tobytes(), attrs={})
            folded += 1
        out.append(inst)
    if folded:
        logger.debug(f"fold: {folded} instruction(s) folded in {module.name}")
    return module.with_instructions(out)
