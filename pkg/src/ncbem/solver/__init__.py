"""Iterative solution of the block system and post-processing."""
from .gmres import JacobiPreconditioner, SolveReport, gmres, jacobi_preconditioner
from .post import (OnSurfaceError, SolutionFields, Traces, eval_field, eval_potential,
                   eval_potential_and_field, recover_traces, total_charge)
from .driver import solve_system

__all__ = ["JacobiPreconditioner", "SolveReport", "gmres", "jacobi_preconditioner", "OnSurfaceError",
           "SolutionFields", "Traces", "eval_field", "eval_potential", "eval_potential_and_field",
           "recover_traces", "total_charge", "solve_system"]
