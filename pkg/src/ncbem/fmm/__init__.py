"""Fast multipole acceleration of the V and K' products."""
from .expansions import Expansion, evaluate, l2l, l2p, m2l, m2m, n_coefficients, p2m
from .octree import Octree, build_octree
from .operator import FmmConfig, FmmLayerOperator, InteractionLists, fmm_operator, interaction_lists

__all__ = ["Expansion", "evaluate", "l2l", "l2p", "m2l", "m2m", "n_coefficients", "p2m", "Octree",
           "build_octree", "FmmConfig", "FmmLayerOperator", "InteractionLists", "fmm_operator",
           "interaction_lists"]
