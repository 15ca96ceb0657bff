"""
Compile-and-run plumbing shared by ``cmsimd test`` and the corpus suites.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional

from backend import CodegenResult, codegen
from corpus.cases import CorpusCase, Surfaces
from emulator.dispatch import DispatchSpec, dispatch
from frontend import compile_source
from optimizer.pipeline import OptimizeStats, PassConfig, optimize
from regionir.evaluator import eval_grid
from regionir.ir import IRModule
from regionir.verify import verify

logger = logging.getLogger(__name__)


@dataclass
class KernelBuild:
    """One kernel taken through the whole pipeline at one optimization level."""

    name: str
    level: str
    lowered: IRModule
    optimized: IRModule
    opt_stats: OptimizeStats
    result: CodegenResult

    @property
    def program(self):
        return self.result.program


def build_kernel(
    source: str,
    file: str,
    level: str,
    print_after: Optional[str] = None,
    on_print: Optional[Callable[[str, IRModule], None]] = None,
) -> KernelBuild:
    lowered = compile_source(source, file)
    verify(lowered)
    stats = OptimizeStats()
    optimized = optimize(lowered, PassConfig.for_level(level), stats, print_after, on_print)
    verify(optimized)
    result = codegen(optimized)
    return KernelBuild(lowered.name, level, lowered, optimized, stats, result)


def build_file(path: Path, level: str) -> KernelBuild:
    return build_kernel(path.read_text(encoding="utf-8"), str(path), level)


def build_case(case: CorpusCase, corpus_dir: Path, level: str) -> Dict[str, KernelBuild]:
    return {name: build_file(corpus_dir / f"{name}.cmk", level) for name in case.kernels}


def _bind(surfaces: Surfaces, module_surfaces) -> Surfaces:
    return {name: surfaces[name] for name in module_surfaces}


def run_case(case: CorpusCase, builds: Mapping[str, KernelBuild], inputs: Surfaces) -> tuple[Surfaces, Counter]:
    """Dispatch every launch of ``case`` over copies of ``inputs``; returns the final surfaces and counters."""
    surfaces = {name: s.copy() for name, s in inputs.items()}
    totals: Counter = Counter()
    for launch in case.launches:
        program = builds[launch.kernel].program
        bound = _bind(surfaces, [name for name, _ in program.surfaces])
        _, stats = dispatch(program, DispatchSpec(launch.grid, bound, dict(launch.args)))
        totals.update(stats.counters)
    return surfaces, totals


def evaluate_case(case: CorpusCase, modules: Mapping[str, IRModule], inputs: Surfaces) -> Surfaces:
    """Same launches as ``run_case`` but through the region-IR evaluator."""
    surfaces = {name: s.copy() for name, s in inputs.items()}
    for launch in case.launches:
        module = modules[launch.kernel]
        eval_grid(module, _bind(surfaces, [p.name for p in module.surfaces]), launch.grid, dict(launch.args))
    return surfaces


def first_difference(expected: bytes, actual: bytes) -> Optional[int]:
    if expected == actual:
        return None
    for i, (a, b) in enumerate(zip(expected, actual)):
        if a != b:
            return i
    return min(len(expected), len(actual))


@dataclass
class Mismatch:
    surface: str
    offset: int
    expected: Optional[int]
    actual: Optional[int]
    against: str

    def describe(self) -> str:
        def show(v):
            return "missing" if v is None else f"0x{v:02x}"

        return (
            f"surface '{self.surface}' differs from {self.against} at byte {self.offset}: "
            f"expected {show(self.expected)}, got {show(self.actual)}"
        )


def compare_outputs(
    case: CorpusCase, expected: Mapping[str, bytes], actual: Surfaces, against: str
) -> Optional[Mismatch]:
    for name in case.outputs:
        want, got = expected[name], actual[name].tobytes()
        offset = first_difference(want, got)
        if offset is not None:
            return Mismatch(
                name,
                offset,
                want[offset] if offset < len(want) else None,
                got[offset] if offset < len(got) else None,
                against,
            )
    return None


@dataclass
class CaseReport:
    name: str
    passed: bool = True
    instructions: Dict[str, int] = field(default_factory=dict)
    executed: Dict[str, int] = field(default_factory=dict)
    seeds: int = 0
    failure: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "instructions": self.instructions,
            "executed": self.executed,
            "seeds": self.seeds,
            "failure": self.failure,
        }


def check_case(case: CorpusCase, corpus_dir: Path, seeds: int = 1, differential: bool = False) -> CaseReport:
    """Compile at O0 and O2, run both on ``seeds`` inputs and compare with the oracle and each other.

    With ``differential`` the optimized IR is also evaluated and compared with the emulated program.
    """
    report = CaseReport(case.name, seeds=seeds)
    builds = {level: build_case(case, corpus_dir, level) for level in ("O0", "O2")}
    for level, kernels in builds.items():
        report.instructions[level] = sum(b.program.count() for b in kernels.values())
    for seed in range(seeds):
        inputs = case.inputs(seed)
        expected = case.expected(inputs)
        outputs = {}
        for level, kernels in builds.items():
            outputs[level], counters = run_case(case, kernels, inputs)
            report.executed[level] = counters["instructions"]
            mismatch = compare_outputs(case, expected, outputs[level], "the oracle")
            if mismatch is not None:
                return _failed(report, f"{level}, seed {seed}: {mismatch.describe()}")
        reference = {name: outputs["O0"][name].tobytes() for name in case.outputs}
        mismatch = compare_outputs(case, reference, outputs["O2"], "the O0 build")
        if mismatch is not None:
            return _failed(report, f"O2, seed {seed}: {mismatch.describe()}")
        if differential:
            for level, kernels in builds.items():
                evaluated = evaluate_case(case, {n: b.optimized for n, b in kernels.items()}, inputs)
                ir_bytes = {name: evaluated[name].tobytes() for name in case.outputs}
                mismatch = compare_outputs(case, ir_bytes, outputs[level], "the region-IR evaluator")
                if mismatch is not None:
                    return _failed(report, f"{level}, seed {seed}: {mismatch.describe()}")
    logger.debug(f"Corpus case {case.name} passed on {seeds} seed(s)")
    return report


def _failed(report: CaseReport, message: str) -> CaseReport:
    report.passed = False
    report.failure = message
    logger.debug(f"Corpus case {report.name} failed: {message}")
    return report
