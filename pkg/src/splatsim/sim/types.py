"""Value types shared by the solvers: materials, world setup, forces, state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

RIGID = "rigid"
ELASTIC = "elastic"
FLUID = "fluid"
MATERIAL_KINDS = (RIGID, ELASTIC, FLUID)

# Defaults applied when a spec omits material numbers (documented in README;
# chosen for soft desk-scale objects).
DEFAULT_YOUNGS_E = 1.0e5
DEFAULT_POISSON = 0.3
DEFAULT_DENSITY = 1000.0
DEFAULT_FLUID_STIFFNESS = 3.0e4
DEFAULT_EOS_EXPONENT = 7.0


@dataclass
class Material:
    """Per-region material. Fields beyond the shared ones apply per kind."""

    kind: str = ELASTIC
    density: float = DEFAULT_DENSITY  # kg/m^3
    youngs_e: float = DEFAULT_YOUNGS_E  # Pa, elastic
    poisson_nu: float = DEFAULT_POISSON  # elastic
    stiffness_k: float = DEFAULT_FLUID_STIFFNESS  # fluid equation of state
    eos_exponent: float = DEFAULT_EOS_EXPONENT  # fluid
    surface_tension: float = 0.0  # fluid cohesion knob
    restitution: float = 0.1  # rigid contact
    friction: float = 0.4  # rigid/ground contact

    def validate(self) -> None:
        if self.kind not in MATERIAL_KINDS:
            raise ConfigError(f"unknown material kind {self.kind!r}")
        if not self.density > 0:
            raise ConfigError("density must be > 0")
        if self.kind == ELASTIC:
            if not self.youngs_e > 0:
                raise ConfigError("youngs_e must be > 0")
            if not (0.0 <= self.poisson_nu < 0.5):
                raise ConfigError("poisson_nu must be in [0, 0.5)")
        if self.kind == FLUID:
            if not self.stiffness_k > 0:
                raise ConfigError("stiffness_k must be > 0")
            if not self.eos_exponent > 0:
                raise ConfigError("eos_exponent must be > 0")
            if self.surface_tension < 0:
                raise ConfigError("surface_tension must be >= 0")
        if self.kind == RIGID:
            if not (0.0 <= self.restitution <= 1.0):
                raise ConfigError("restitution must be in [0, 1]")
            if self.friction < 0:
                raise ConfigError("friction must be >= 0")

    def lame(self) -> tuple[float, float]:
        """(mu, lambda) from Young's modulus and Poisson ratio."""
        mu = self.youngs_e / (2.0 * (1.0 + self.poisson_nu))
        lam = (
            self.youngs_e
            * self.poisson_nu
            / ((1.0 + self.poisson_nu) * (1.0 - 2.0 * self.poisson_nu))
        )
        return mu, lam

    def sound_speed(self) -> float:
        if self.kind == FLUID:
            return float(np.sqrt(self.eos_exponent * self.stiffness_k / self.density))
        return float(np.sqrt(self.youngs_e / self.density))


@dataclass
class WorldConfig:
    """Simulation world: gravity, ground plane, stepping, and grid bounds.

    ``dt`` / ``substeps`` of None means "derive from the CFL bound for the
    configured materials and the frame rate".
    """

    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    ground_point: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ground_normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    fps: float = 30.0
    dt: float | None = None
    substeps: int | None = None
    grid_resolution: int = 64
    domain_lo: np.ndarray | None = None
    domain_hi: np.ndarray | None = None

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=np.float64).reshape(3)
        self.ground_point = np.asarray(self.ground_point, dtype=np.float64).reshape(3)
        self.ground_normal = np.asarray(self.ground_normal, dtype=np.float64).reshape(3)
        if self.domain_lo is not None:
            self.domain_lo = np.asarray(self.domain_lo, dtype=np.float64).reshape(3)
        if self.domain_hi is not None:
            self.domain_hi = np.asarray(self.domain_hi, dtype=np.float64).reshape(3)
        if not self.fps > 0:
            raise ConfigError("fps must be > 0")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if self.substeps is not None and self.substeps < 1:
            raise ConfigError("substeps must be >= 1")
        if self.grid_resolution < 8:
            raise ConfigError("grid_resolution must be >= 8")


@dataclass
class ExternalForce:
    """A user/world force: an instantaneous impulse or a continuous push.

    ``magnitude`` is N*s for impulses and N for continuous forces. Without an
    application point the force acts on the whole body; with one, on the
    particles within ``radius`` of it, shared mass-proportionally.
    """

    kind: str  # "impulse" | "continuous"
    direction: np.ndarray
    magnitude: float
    point: np.ndarray | None = None
    radius: float | None = None
    t0: float = 0.0
    t1: float | None = None  # impulses ignore t1

    def __post_init__(self):
        if self.kind not in ("impulse", "continuous"):
            raise ConfigError(f"unknown force kind {self.kind!r}")
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(d)
        if not np.isfinite(norm) or norm == 0.0:
            raise ConfigError("force direction must be a nonzero vector")
        self.direction = d / norm
        if self.point is not None:
            self.point = np.asarray(self.point, dtype=np.float64).reshape(3)
        if self.kind == "continuous" and self.t1 is None:
            raise ConfigError("continuous force needs a [t0, t1] window")


@dataclass
class ParticleState:
    """Per-particle simulation state (plain arrays, float64)."""

    positions: np.ndarray  # (N, 3)
    velocities: np.ndarray  # (N, 3)
    deformation_gradients: np.ndarray  # (N, 3, 3)
    masses: np.ndarray  # (N,)
    material_ids: np.ndarray  # (N,) region index
    rest_positions: np.ndarray  # (N, 3) pre-initial-pose sample positions

    def copy(self) -> "ParticleState":
        return ParticleState(
            positions=self.positions.copy(),
            velocities=self.velocities.copy(),
            deformation_gradients=self.deformation_gradients.copy(),
            masses=self.masses.copy(),
            material_ids=self.material_ids.copy(),
            rest_positions=self.rest_positions.copy(),
        )

    def __len__(self) -> int:
        return len(self.positions)
