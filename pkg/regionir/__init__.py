from regionir.evaluator import eval_grid, eval_module
from regionir.ir import IRBuilder, IRInstruction, IRModule, IRValue, KernelParam
from regionir.printer import format_module
from regionir.regions import RegionSpec, ReplicateSpec, SelectSpec, rdregion_eval, replicate_eval, wrregion_eval
from regionir.verify import verify

__all__ = [
    "IRBuilder",
    "IRInstruction",
    "IRModule",
    "IRValue",
    "KernelParam",
    "RegionSpec",
    "ReplicateSpec",
    "SelectSpec",
    "eval_grid",
    "eval_module",
    "format_module",
    "rdregion_eval",
    "replicate_eval",
    "verify",
    "wrregion_eval",
]
