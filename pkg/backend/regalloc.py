"""
Linear-scan register allocation over the byte-addressable register file.

Values that share registers through in-place region writes form one group
and are allocated as a unit. A group becomes live at its first piece and
its registers are reusable once the last piece touching it has passed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from backend.legalize import LegalProgram, VSrc
from backend.machine import DEFAULT_MACHINE, MachineConfig
from errors import RegisterPressureError

logger = logging.getLogger(__name__)


@dataclass
class _Group:
    root: int
    size: int = 0
    start: int = 0
    end: int = 0
    align: int = 1
    names: List[str] = field(default_factory=list)


@dataclass
class Allocation:
    base: Dict[int, int]  # value id -> byte address
    grf_used: int
    peak_bytes: int


def _align_for(size: int, cfg: MachineConfig) -> int:
    if size >= cfg.grf_bytes:
        return cfg.grf_bytes
    align = 1
    while align < size:
        align *= 2
    return align


def live_ranges(program: LegalProgram) -> Dict[int, _Group]:
    groups: Dict[int, _Group] = {}
    members: Dict[int, int] = {}
    for piece in program.pieces:
        operands = [s for s in piece.srcs if isinstance(s, VSrc)]
        if piece.pred is not None:
            operands.append(piece.pred)
        if piece.dst is not None:
            operands.append(piece.dst)
        for op in operands:
            value = op.value
            root = program.group_of(value)
            group = groups.get(root)
            if group is None:
                group = groups[root] = _Group(root, start=piece.position, end=piece.position)
            group.start = min(group.start, piece.position)
            group.end = max(group.end, piece.position)
            if value.id not in members:
                members[value.id] = root
                group.size = max(group.size, value.size_bytes)
                group.names.append(value.label)
    return groups


def allocate_registers(program: LegalProgram, cfg: MachineConfig = DEFAULT_MACHINE) -> Allocation:
    """First-fit linear scan; raises RegisterPressureError when the file is exhausted."""
    groups = live_ranges(program)
    for group in groups.values():
        group.align = cfg.grf_bytes if group.root in program.aligned else _align_for(group.size, cfg)
    order = sorted(groups.values(), key=lambda g: (g.start, g.root))
    active: List[Tuple[int, _Group]] = []
    addresses: Dict[int, int] = {}
    peak = 0
    for group in order:
        active = [(addr, g) for addr, g in active if g.end >= group.start]
        active.sort(key=lambda item: item[0])
        addr = 0
        for used, g in active:
            if addr + group.size <= used:
                break
            addr = max(addr, used + g.size)
            addr = -(-addr // group.align) * group.align
        live = sum(g.size for _, g in active) + group.size
        if addr + group.size > cfg.file_bytes:
            names = [name for _, g in sorted(active, key=lambda item: -item[1].size) for name in g.names[:1]]
            raise RegisterPressureError(live, cfg.file_bytes, names + group.names[:1])
        peak = max(peak, live)
        addresses[group.root] = addr
        active.append((addr, group))

    base = {}
    for piece in program.pieces:
        for op in [s for s in piece.srcs if isinstance(s, VSrc)] + [piece.dst, piece.pred]:
            if op is not None:
                base[op.value.id] = addresses[program.group_of(op.value)]
    top = max((addresses[g.root] + g.size for g in groups.values()), default=0)
    grf_used = -(-top // cfg.grf_bytes)
    logger.debug(f"Allocated {len(groups)} register groups of {program.module.name}: peak {peak} bytes, {grf_used} GRFs")
    return Allocation(base, grf_used, peak)
