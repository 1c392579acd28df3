"""Galerkin double-surface quadrature: Gauss rules, singular rules and pair handling."""
from .pairs import (Classification, PairClass, PairPlan, ProductRule, build_plan, classify_pair,
                    nearfield_subdivide, split_element, subdivide_nonconforming)
from .rules import (edge_rule, element_rule, gauss_rule, identical_rule, singular_rule, square_rule,
                    vertex_rule)

__all__ = [
    "Classification", "PairClass", "PairPlan", "ProductRule", "build_plan", "classify_pair",
    "nearfield_subdivide", "split_element", "subdivide_nonconforming", "edge_rule", "element_rule",
    "gauss_rule", "identical_rule", "singular_rule", "square_rule", "vertex_rule",
]
