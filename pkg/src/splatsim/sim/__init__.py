"""Particle physics: rigid, elastic (MLS-MPM), and fluid (WCSPH) solvers."""

from .backend import BACKEND_NAME, get_kernels
from .types import ExternalForce, Material, ParticleState, WorldConfig
from .engine import Simulation, init_sim

__all__ = [
    "BACKEND_NAME",
    "get_kernels",
    "ExternalForce",
    "Material",
    "ParticleState",
    "WorldConfig",
    "Simulation",
    "init_sim",
]
