"""Warped graph embedding: proximity functions, warping functions, losses,
and the UltimateWalk algorithm with its evaluation protocol."""
__version__ = "0.1.0"

from .graph import EdgeListError, Graph, from_dense, from_edges, load_edge_list
from .matrix import ParameterError, ProximityMatrix
from .proximity import fsmt_edge_state, fst, fst_walk_estimate, fsmt_walk_estimate, ist
from .solver import EmbeddingPair, SvdConvergenceError, kl_descent, warped_frobenius_solve
from .ultimatewalk import WalkConfig, embed, split_average, ultimatewalk_closed, ultimatewalk_scalable
from .warping import WarpSpec, auto_gamma, unwarp, warp

__all__ = [
    "EdgeListError", "EmbeddingPair", "Graph", "ParameterError", "ProximityMatrix",
    "SvdConvergenceError", "WalkConfig", "WarpSpec", "auto_gamma", "embed", "from_dense",
    "from_edges", "fsmt_edge_state", "fsmt_walk_estimate", "fst", "fst_walk_estimate", "ist",
    "kl_descent", "load_edge_list", "split_average", "ultimatewalk_closed",
    "ultimatewalk_scalable", "unwarp", "warp", "warped_frobenius_solve",
]
