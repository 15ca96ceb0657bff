"""
Exception hierarchy and diagnostics shared by every pipeline stage.
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional


@dataclass(frozen=True)
class Diagnostic:
    """A located compiler message, printed as ``file:line:col: error: message``."""

    message: str
    line: int = 0
    col: int = 0
    file: str = "<input>"

    def format(self, file: Optional[str] = None) -> str:
        return f"{file or self.file}:{self.line}:{self.col}: error: {self.message}"

    def __str__(self) -> str:
        return self.format()


class CmsimdError(Exception):
    """Base class for every error the tool reports to the user."""


class CompileError(CmsimdError):
    """One or more diagnostics produced while compiling a kernel."""

    def __init__(self, diagnostics: Iterable[Diagnostic]):
        self.diagnostics: List[Diagnostic] = list(diagnostics)
        super().__init__("\n".join(d.format() for d in self.diagnostics))

    def with_file(self, file: str) -> "CompileError":
        return type(self)(
            Diagnostic(d.message, d.line, d.col, file) for d in self.diagnostics
        )


class ParseError(CompileError):
    pass


class TypeCheckError(CompileError):
    pass


class IRVerifyError(CmsimdError):
    """Region-IR verifier failures; each message names the instruction id."""

    def __init__(self, problems: Iterable[str]):
        self.problems: List[str] = list(problems)
        super().__init__("; ".join(self.problems))


class BackendError(CmsimdError):
    pass


class LegalizationError(BackendError):
    pass


class RegisterPressureError(BackendError):
    def __init__(self, peak_bytes: int, capacity: int, live_values: List[str]):
        self.peak_bytes = peak_bytes
        self.capacity = capacity
        self.live_values = live_values
        super().__init__(
            f"register pressure {peak_bytes} bytes exceeds the {capacity}-byte register file "
            f"(live: {', '.join(live_values)})"
        )


class SurfaceError(CmsimdError):
    """Bad binding, geometry, alignment or out-of-bounds surface access."""


class EmulatorFault(CmsimdError):
    def __init__(self, message: str, thread: Optional[tuple] = None, index: Optional[int] = None):
        self.thread = thread
        self.index = index
        where = []
        if thread is not None:
            where.append(f"thread ({thread[0]},{thread[1]})")
        if index is not None:
            where.append(f"instruction {index}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")
