"""
Thread-grid dispatch: every thread runs to completion, in row-major order
(y outer) unless an explicit order is given, over one shared set of surfaces.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from backend.emit import VISAProgram
from emulator.execute import run_thread
from emulator.surfaces import Surface
from errors import SurfaceError

logger = logging.getLogger(__name__)


@dataclass
class DispatchSpec:
    grid: Tuple[int, int]
    surfaces: Dict[str, Surface]
    args: Dict[str, object] = field(default_factory=dict)
    order: Optional[List[Tuple[int, int]]] = None

    def threads(self) -> List[Tuple[int, int]]:
        if self.order is not None:
            return list(self.order)
        return [(x, y) for y in range(self.grid[1]) for x in range(self.grid[0])]

    def check(self, program: VISAProgram):
        if self.grid[0] < 1 or self.grid[1] < 1:
            raise SurfaceError(f"grid {self.grid[0]}x{self.grid[1]} is empty")
        for name, kind in program.surfaces:
            if name not in self.surfaces:
                raise SurfaceError(f"surface '{name}' is not bound")
            if self.surfaces[name].kind != kind:
                raise SurfaceError(f"surface '{name}' is bound to a {self.surfaces[name].kind}, the kernel needs an {kind}")
        declared = {name for name, _ in program.surfaces}
        extra = sorted(set(self.surfaces) - declared)
        if extra:
            raise SurfaceError(f"surface '{extra[0]}' is not a parameter of kernel {program.name}")


@dataclass
class DispatchStats:
    counters: Counter = field(default_factory=Counter)

    def lines(self) -> Iterable[str]:
        for key in sorted(self.counters):
            yield f"{key}={self.counters[key]}"

    def __getitem__(self, key: str) -> int:
        return self.counters[key]


def dispatch(program: VISAProgram, spec: DispatchSpec) -> Tuple[Mapping[str, Surface], DispatchStats]:
    """Run the whole grid; surfaces in ``spec`` are updated in place and returned."""
    spec.check(program)
    stats = DispatchStats()
    threads = spec.threads()
    for thread in threads:
        run_thread(program, spec.surfaces, thread, spec.args, stats.counters)
    stats.counters["threads"] = len(threads)
    logger.debug(f"Dispatched {program.name} over {len(threads)} threads: {stats.counters['instructions']} instructions")
    return spec.surfaces, stats
