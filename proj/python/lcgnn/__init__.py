"""Linear-convolution GNN toolkit.

Thin package wrapper around the compiled extension: formula rewriting into
precomputation-friendly form, memory-budgeted block precomputation, and
training on precomputed features.
"""

try:
    from ._lcgnn import *  # noqa: F401,F403
    from ._lcgnn import __doc__ as _core_doc
except ImportError:  # in-tree builds put _lcgnn next to the package
    from _lcgnn import *  # type: ignore # noqa: F401,F403
    from _lcgnn import __doc__ as _core_doc

__all__ = [
    "transform",
    "gen_synthetic",
    "normalized_adjacency",
    "solve_norm_blocks",
    "solve_agg_blocks",
    "precompute",
    "train_on_features",
    "LcgnnError",
]
