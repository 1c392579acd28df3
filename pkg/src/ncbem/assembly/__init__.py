"""Kernels, Galerkin assembly of V, K' and M, and the block system."""
from .kernels import KernelKind, eval_kernel, lambda_param
from .operators import Discretization, QuadratureConfig, assemble_operator_block
from .system import (EPS0, BlockSystem, ConductorVectors, DenseLayerOperator, Model, assemble_vectors,
                     build_block_system, charge_functional)

__all__ = ["KernelKind", "eval_kernel", "lambda_param", "Discretization", "QuadratureConfig",
           "assemble_operator_block", "EPS0", "BlockSystem", "ConductorVectors", "DenseLayerOperator",
           "Model", "assemble_vectors", "build_block_system", "charge_functional"]
