"""
Pass manager: fixed pass order iterated to a fixpoint.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from optimizer.collapse import collapse_regions
from optimizer.dead import remove_dead_vectors
from optimizer.decompose import decompose_vectors
from optimizer.fold import fold_constants
from regionir.ir import IRModule
from regionir.verify import verify

logger = logging.getLogger(__name__)

PASSES: Dict[str, Callable[[IRModule], IRModule]] = {
    "fold": fold_constants,
    "collapse": collapse_regions,
    "decompose": decompose_vectors,
    "dead": remove_dead_vectors,
}
PASS_ORDER = ("fold", "collapse", "decompose", "dead")
MAX_ITERATIONS = 10


@dataclass
class PassConfig:
    level: str = "O2"
    passes: List[str] = field(default_factory=lambda: list(PASS_ORDER))
    max_iterations: int = MAX_ITERATIONS
    verify_each: bool = False

    @classmethod
    def for_level(cls, level: str) -> "PassConfig":
        if level == "O0":
            return cls("O0", [])
        if level == "O2":
            return cls("O2")
        raise ValueError(f"unknown optimization level '{level}' (expected O0 or O2)")


@dataclass
class PassStats:
    runs: int = 0
    removed: int = 0
    changed: int = 0


@dataclass
class OptimizeStats:
    iterations: int = 0
    passes: Dict[str, PassStats] = field(default_factory=dict)

    def lines(self) -> List[str]:
        out = [f"opt.iterations={self.iterations}"]
        for name, s in self.passes.items():
            out.append(f"opt.{name}.runs={s.runs}")
            out.append(f"opt.{name}.removed={s.removed}")
            out.append(f"opt.{name}.changed={s.changed}")
        return out


def fingerprint(module: IRModule) -> tuple:
    return tuple(
        (
            inst.opcode,
            inst.result.id if inst.result else None,
            tuple(v.id for v in inst.operands),
            inst.region,
            inst.const,
            tuple(sorted(inst.attrs.items())),
        )
        for inst in module.instructions
    )


def optimize(
    module: IRModule,
    config: Optional[PassConfig] = None,
    stats: Optional[OptimizeStats] = None,
    print_after: Optional[str] = None,
    on_print: Optional[Callable[[str, IRModule], None]] = None,
) -> IRModule:
    """Run the configured passes until nothing changes or the iteration cap is hit."""
    config = config or PassConfig()
    stats = stats if stats is not None else OptimizeStats()
    for name in config.passes:
        if name not in PASSES:
            raise ValueError(f"unknown pass '{name}'")
        stats.passes.setdefault(name, PassStats())
    if not config.passes:
        return module

    for iteration in range(config.max_iterations):
        before = fingerprint(module)
        for name in config.passes:
            start = fingerprint(module)
            result = PASSES[name](module)
            after = fingerprint(result)
            s = stats.passes[name]
            s.runs += 1
            s.removed += len(start) - len(after)
            s.changed += len(set(after) - set(start))
            module = result
            if config.verify_each:
                verify(module)
            if on_print is not None and print_after == name:
                on_print(name, module)
        stats.iterations = iteration + 1
        if fingerprint(module) == before:
            break
    else:
        logger.info(f"Optimizer stopped after {config.max_iterations} iterations on {module.name}")
    logger.debug(f"Optimized {module.name}: {len(module.instructions)} instructions after {stats.iterations} iteration(s)")
    return module
