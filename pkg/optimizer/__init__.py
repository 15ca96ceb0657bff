from optimizer.collapse import collapse_regions
from optimizer.dead import remove_dead_vectors
from optimizer.decompose import decompose_vectors
from optimizer.fold import fold_constants
from optimizer.pipeline import PASS_ORDER, OptimizeStats, PassConfig, optimize

__all__ = [
    "PASS_ORDER",
    "OptimizeStats",
    "PassConfig",
    "collapse_regions",
    "decompose_vectors",
    "fold_constants",
    "optimize",
    "remove_dead_vectors",
]
