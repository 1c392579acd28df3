"""Galerkin single-layer BEM electrostatics on non-conforming higher-order surface meshes."""
from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
