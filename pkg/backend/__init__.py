import logging
from dataclasses import dataclass

from backend.asm import parse_visa
from backend.baling import analyze_bales
from backend.emit import VISAInstruction, VISAProgram, emit_visa, normalize_registers
from backend.legalize import LegalProgram, legalize
from backend.machine import DEFAULT_MACHINE, MachineConfig
from backend.regalloc import Allocation, allocate_registers
from backend.validate import validate_program
from errors import LegalizationError
from regionir.ir import IRModule

logger = logging.getLogger(__name__)


@dataclass
class CodegenResult:
    program: VISAProgram
    legal: LegalProgram
    allocation: Allocation

    def stats_lines(self):
        yield f"backend.instructions={self.program.count()}"
        for key, value in self.legal.stats.items():
            yield f"backend.{key}={value}"
        yield f"backend.grf_used={self.allocation.grf_used}"
        yield f"backend.peak_bytes={self.allocation.peak_bytes}"


def codegen(module: IRModule, cfg: MachineConfig = DEFAULT_MACHINE) -> CodegenResult:
    """Bale, legalize, allocate and emit an optimized module, then validate the result."""
    legal = legalize(analyze_bales(module), cfg)
    allocation = allocate_registers(legal, cfg)
    program = emit_visa(legal, allocation, cfg)
    problems = validate_program(program, cfg)
    if problems:
        raise LegalizationError("; ".join(problems))
    logger.info(f"Generated {program.count()} instructions for {module.name} in {allocation.grf_used} registers")
    return CodegenResult(program, legal, allocation)


__all__ = [
    "CodegenResult",
    "DEFAULT_MACHINE",
    "MachineConfig",
    "VISAInstruction",
    "VISAProgram",
    "analyze_bales",
    "allocate_registers",
    "codegen",
    "emit_visa",
    "legalize",
    "normalize_registers",
    "parse_visa",
    "validate_program",
]
