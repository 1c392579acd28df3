"""Laplace kernels and the transmission parameter."""
from __future__ import annotations

import enum
import math

import numpy as np

from ..errors import ConfigurationError, SingularityError


class KernelKind(enum.Enum):
    SINGLE_LAYER = "single_layer"
    ADJOINT_DOUBLE_LAYER = "adjoint_double_layer"


def eval_kernel(kind, x, y, n_x=None) -> float:
    """Closed-form kernel value.

    ``U = 1 / (4 pi |x - y|)`` and ``dU/dn_x = -(x - y).n_x / (4 pi |x - y|^3)``.
    """
    kind = KernelKind(kind)
    r = np.asarray(x, float) - np.asarray(y, float)
    d = math.sqrt(float(r @ r))
    if d < 1e-300:
        raise SingularityError("kernel evaluated at coincident points")
    if kind is KernelKind.SINGLE_LAYER:
        return 1.0 / (4.0 * math.pi * d)
    if n_x is None:
        raise ValueError("the adjoint double-layer kernel needs a normal")
    return -float(r @ np.asarray(n_x, float)) / (4.0 * math.pi * d ** 3)


def lambda_param(eps_n: float, eps_m: float) -> float:
    """``(eps_n + eps_m) / (2 (eps_n - eps_m))``.

    The caller fixes the order: ``eps_n`` on the side the normal points to.
    """
    eps_n, eps_m = float(eps_n), float(eps_m)
    if eps_n <= 0 or eps_m <= 0:
        raise ConfigurationError("relative permittivities must be positive")
    if eps_n == eps_m:
        raise ConfigurationError(
            f"dielectric interface needs distinct permittivities (got {eps_n} on both sides)")
    return (eps_n + eps_m) / (2.0 * (eps_n - eps_m))
