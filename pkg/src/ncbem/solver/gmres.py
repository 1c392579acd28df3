"""Restarted GMRES with left preconditioning and a Jacobi preconditioner."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import ConfigurationError

log = logging.getLogger(__name__)


@dataclass
class SolveReport:
    iterations: int
    residual: float
    restarts: int
    wall_time: float
    applies: int
    converged: bool
    breakdown: bool = False

    def as_dict(self):
        return dict(self.__dict__)


class JacobiPreconditioner:
    """``apply(x) = x / diag``."""

    def __init__(self, diag, labels=None):
        diag = np.asarray(diag, float)
        bad = np.flatnonzero(~np.isfinite(diag) | (diag == 0.0))
        if bad.size:
            where = labels[bad[0]] if labels is not None else "unknown"
            raise ConfigurationError(f"zero Jacobi diagonal entry at row {bad[0]} (class {where})")
        self.inv = 1.0 / diag

    def __call__(self, x):
        return self.inv * x


def jacobi_preconditioner(system) -> JacobiPreconditioner:
    """Jacobi preconditioner of a :class:`~ncbem.assembly.system.BlockSystem` (or a diagonal)."""
    if hasattr(system, "diagonal") and hasattr(system, "slices"):
        labels = np.empty(system.n_total, dtype=object)
        for c, s in system.slices.items():
            labels[s] = c
        labels[system.n_sigma:] = "alpha"
        return JacobiPreconditioner(system.diagonal(), labels)
    return JacobiPreconditioner(np.asarray(system, float))


def _as_callable(A) -> Callable:
    if callable(A):
        return A
    if hasattr(A, "matvec"):
        return A.matvec
    if hasattr(A, "apply"):
        return A.apply
    return lambda x: A @ x


def gmres(A, b, preconditioner=None, tol: float = 1e-8, restart: int = 200, max_iters: int = 1000,
          x0=None):
    """Solve ``A x = b``; returns ``(x, SolveReport)``.

    Convergence is measured on the left-preconditioned residual
    ``|P^-1 (b - A x)| / |P^-1 b|``.
    """
    t0 = time.perf_counter()
    op = _as_callable(A)
    P = preconditioner if preconditioner is not None else (lambda v: v)
    b = np.asarray(b, float)
    n = b.shape[0]
    if restart < 1 or max_iters < 1:
        raise ConfigurationError("restart and max_iters must be positive")
    x = np.zeros(n) if x0 is None else np.array(x0, float)
    applies = 0
    pb = P(b)
    bnorm = np.linalg.norm(pb)
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, 0, time.perf_counter() - t0, 0, True)
    m = min(restart, n)
    it = 0
    restarts = 0
    breakdown = False
    rel = np.inf
    fresh = x0 is None
    while True:
        if fresh:
            r = pb.copy()
            fresh = False
        else:
            r = P(b - op(x))
            applies += 1
        beta = np.linalg.norm(r)
        rel = beta / bnorm
        if rel <= tol or it >= max_iters:
            break
        Q = np.zeros((m + 1, n))
        Hh = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        Q[0] = r / beta
        k_used = 0
        for k in range(m):
            w = np.array(P(op(Q[k])), dtype=float)  # copy: operators may return views
            applies += 1
            it += 1
            for j in range(k + 1):  # modified Gram-Schmidt, twice for stability
                Hh[j, k] = Q[j] @ w
                w -= Hh[j, k] * Q[j]
            for j in range(k + 1):
                c = Q[j] @ w
                Hh[j, k] += c
                w -= c * Q[j]
            Hh[k + 1, k] = np.linalg.norm(w)
            hk = Hh[k + 1, k]
            for j in range(k):
                t = cs[j] * Hh[j, k] + sn[j] * Hh[j + 1, k]
                Hh[j + 1, k] = -sn[j] * Hh[j, k] + cs[j] * Hh[j + 1, k]
                Hh[j, k] = t
            den = np.hypot(Hh[k, k], Hh[k + 1, k])
            cs[k] = Hh[k, k] / den
            sn[k] = Hh[k + 1, k] / den
            Hh[k, k] = den
            Hh[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            k_used = k + 1
            rel = abs(g[k + 1]) / bnorm
            if hk <= 1e-14 * beta:
                breakdown = rel > tol
                break
            if rel <= tol or it >= max_iters:
                break
            Q[k + 1] = w / hk
        y = np.linalg.solve(np.triu(Hh[:k_used, :k_used]), g[:k_used])
        x = x + Q[:k_used].T @ y
        if breakdown:
            r = P(b - op(x))
            applies += 1
            rel = np.linalg.norm(r) / bnorm
            log.warning("GMRES breakdown after %d iterations (residual %.3g)", it, rel)
            break
        restarts += 1
    conv = bool(rel <= tol)
    rep = SolveReport(it, float(rel), max(restarts - 1, 0), time.perf_counter() - t0, applies, conv,
                      bool(breakdown))
    if not conv:
        log.warning("GMRES did not converge: %d iterations, residual %.3g", it, rel)
    return x, rep
