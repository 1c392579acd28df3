"""Solve a block system and run the standard post-processing."""
from __future__ import annotations

import logging

import numpy as np

from .gmres import gmres, jacobi_preconditioner
from .post import SolutionFields, recover_traces, total_charge

log = logging.getLogger(__name__)


def solve_system(system, tol=1e-8, restart=200, max_iters=1000, precondition=True):
    """GMRES solve plus traces and charges; returns ``(SolutionFields, SolveReport)``."""
    P = jacobi_preconditioner(system) if precondition else None
    x, rep = gmres(system.apply, system.rhs, P, tol=tol, restart=restart, max_iters=max_iters)
    log.info("GMRES: %d iterations, residual %.3g, converged=%s", rep.iterations, rep.residual, rep.converged)
    sigma, alpha = system.split(x)
    tr = recover_traces(system, sigma)
    charges = {n: total_charge(system, n, tr) for n in system.model.skeleton.conductors()}
    fields = SolutionFields(sigma, {n: float(alpha[k]) for k, n in enumerate(system.floating)}, tr, charges)
    return fields, rep
