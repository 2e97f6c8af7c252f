"""The unified particle simulation: rigid bodies, MLS-MPM elastics, WCSPH fluids.

One Simulation instance is single-writer: exactly one caller drives step /
apply_user_push / snapshot. Independent instances are fully isolated.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, NumericalBlowupError, UnstableConfigError
from ..proxy import ParticleSeed
from .backend import get_kernels
from .rigidbody import RigidBody
from .types import ELASTIC, FLUID, RIGID, ExternalForce, Material, ParticleState, WorldConfig

_MAX_SUBSTEPS = 10000
_SPH_ALPHA_VISC = 0.08
_SPH_SUPPORT_FACTOR = 2.0  # kernel support radius in particle spacings


def _build_cell_list(pos: np.ndarray, h: float):
    lo = pos.min(axis=0) - h
    hi = pos.max(axis=0) + h
    dims = np.maximum(np.ceil((hi - lo) / h).astype(np.int64), 1)
    cells = np.floor((pos - lo[None, :]) / h).astype(np.int64)
    np.clip(cells, 0, dims[None, :] - 1, out=cells)
    keys = (cells[:, 0] * dims[1] + cells[:, 1]) * dims[2] + cells[:, 2]
    order = np.argsort(keys, kind="stable").astype(np.int64)
    ncells = int(dims[0] * dims[1] * dims[2])
    cell_start = np.zeros(ncells + 1, dtype=np.int64)
    counts = np.bincount(keys, minlength=ncells)
    np.cumsum(counts, out=cell_start[1:])
    return order, cell_start, dims, lo


class Simulation:
    def __init__(self, seed: ParticleSeed, materials: list[Material],
                 world: WorldConfig, backend: str | None = None):
        self.kernels = get_kernels(backend)
        self.world = world
        self.spacing = float(seed.spacing)

        n_regions = int(seed.region_labels.max()) + 1 if len(seed.region_labels) else 0
        if len(materials) < n_regions:
            raise ConfigError(
                f"{n_regions} particle regions but only {len(materials)} materials"
            )
        for m in materials:
            m.validate()
        self.materials = list(materials)

        kinds = {m.kind for m in self.materials[:max(n_regions, 1)]}
        if FLUID in kinds and kinds != {FLUID}:
            raise ConfigError("fluid regions cannot be mixed with rigid/elastic regions")

        rest = np.asarray(seed.positions, dtype=np.float64)
        n = len(rest)
        labels = np.asarray(seed.region_labels, dtype=np.int64)
        density = np.array([self.materials[r].density for r in labels])
        masses = density * np.asarray(seed.rest_volume, dtype=np.float64)

        init_positions = rest.copy()
        if seed.initial_offset is not None:
            init_positions = init_positions + np.asarray(seed.initial_offset, dtype=np.float64)

        self.state = ParticleState(
            positions=init_positions,
            velocities=np.zeros((n, 3)),
            deformation_gradients=np.broadcast_to(np.eye(3), (n, 3, 3)).copy(),
            masses=masses,
            material_ids=labels,
            rest_positions=rest,
        )

        self.elastic_idx = np.nonzero(
            np.isin(labels, [r for r, m in enumerate(self.materials) if m.kind == ELASTIC])
        )[0]
        self.fluid_idx = np.nonzero(
            np.isin(labels, [r for r, m in enumerate(self.materials) if m.kind == FLUID])
        )[0]
        self.rigid_regions = [
            r for r, m in enumerate(self.materials[:n_regions]) if m.kind == RIGID
        ]
        self.rigid_idx = {r: np.nonzero(labels == r)[0] for r in self.rigid_regions}

        self._setup_elastic(seed)
        self._setup_fluids()
        self._setup_rigid_bodies()
        self._setup_grid()
        self._resolve_timestep()

        self.time = 0.0
        self.frame_index = 0
        self._pending_pushes: list[ExternalForce] = []

    # ----- setup -----------------------------------------------------------

    def _setup_elastic(self, seed: ParticleSeed) -> None:
        idx = self.elastic_idx
        self.el_mu = np.zeros(len(idx))
        self.el_lam = np.zeros(len(idx))
        for r, m in enumerate(self.materials):
            if m.kind != ELASTIC:
                continue
            sel = self.state.material_ids[idx] == r
            mu, lam = m.lame()
            self.el_mu[sel] = mu
            self.el_lam[sel] = lam
        self.el_vol = np.asarray(seed.rest_volume, dtype=np.float64)[idx].copy()
        self.el_C = np.zeros((len(idx), 3, 3))

    def _setup_fluids(self) -> None:
        if len(self.fluid_idx) == 0:
            self.sph_h = 0.0
            return
        mat = self.materials[int(self.state.material_ids[self.fluid_idx[0]])]
        self.sph_h = _SPH_SUPPORT_FACTOR * self.spacing
        self.sph_rho0 = mat.density
        self.sph_k = mat.stiffness_k
        self.sph_gamma = mat.eos_exponent
        self.sph_cohesion = mat.surface_tension
        self.sph_c = mat.sound_speed()
        self._sph_rho = np.zeros(len(self.fluid_idx))
        self._sph_acc = np.zeros((len(self.fluid_idx), 3))

    def _setup_rigid_bodies(self) -> None:
        self.bodies: dict[int, RigidBody] = {}
        for r in self.rigid_regions:
            idx = self.rigid_idx[r]
            if len(idx) == 0:
                continue
            mat = self.materials[r]
            body = RigidBody(
                positions=self.state.positions[idx],
                masses=self.state.masses[idx],
                restitution=mat.restitution,
                friction=mat.friction,
            )
            self.bodies[r] = body

    def _setup_grid(self) -> None:
        pos = self.state.positions
        lo = pos.min(axis=0)
        hi = pos.max(axis=0)
        diag = float(np.linalg.norm(hi - lo))
        diag = max(diag, 1e-3)
        ground_z = float(self.world.ground_point[2])

        if self.world.domain_lo is not None and self.world.domain_hi is not None:
            dom_lo = self.world.domain_lo.copy()
            dom_hi = self.world.domain_hi.copy()
        else:
            pad = 1.0 * diag
            dom_lo = lo - pad
            dom_hi = hi + pad
            if lo[2] - ground_z < 4.0 * diag:
                # ground within falling reach: the grid must cover it
                dom_lo[2] = min(lo[2], ground_z) - 0.15 * diag
            else:
                dom_lo[2] = lo[2] - 1.5 * diag
            dom_hi[2] = hi[2] + 1.25 * diag

        extent = dom_hi - dom_lo
        self.grid_dx = float(extent.max() / (self.world.grid_resolution - 1))
        dims = np.ceil(extent / self.grid_dx).astype(np.int64) + 1
        self.grid_dims = np.maximum(dims, 16)
        self.grid_origin = dom_lo.copy()
        self.domain_lo = dom_lo
        self.domain_hi = self.grid_origin + (self.grid_dims - 1) * self.grid_dx
        self._clip_lo = self.domain_lo + self.grid_dx
        self._clip_hi = self.domain_hi - self.grid_dx

        needs_grid = len(self.elastic_idx) > 0
        if needs_grid:
            if np.any(pos <= self._clip_lo[None, :]) or np.any(pos >= self._clip_hi[None, :]):
                raise ConfigError(
                    "initial particle positions fall outside the usable grid; "
                    "widen the domain bounds or raise grid_resolution"
                )
            nx, ny, nz = (int(d) for d in self.grid_dims)
            self._grid_m = np.zeros((nx, ny, nz))
            self._grid_p = np.zeros((nx, ny, nz, 3))
            self._grid_rm = {r: np.zeros((nx, ny, nz)) for r in self.bodies}
        else:
            self._grid_m = None

    def _resolve_timestep(self) -> None:
        bounds = []
        for m in self.materials:
            if m.kind == ELASTIC and len(self.elastic_idx):
                bounds.append(0.3 * self.grid_dx / m.sound_speed())
            elif m.kind == FLUID and len(self.fluid_idx):
                bounds.append(0.25 * self.sph_h / m.sound_speed())
        frame_dt = 1.0 / self.world.fps
        bound = min(bounds) if bounds else min(1e-3, frame_dt)

        if self.world.dt is not None:
            if self.world.dt > bound * (1.0 + 1e-9):
                raise UnstableConfigError(
                    f"dt={self.world.dt:g} violates the stability bound "
                    f"{bound:g} for the configured materials",
                    suggested_dt=bound,
                )
            self.dt = float(self.world.dt)
            self.substeps = self.world.substeps or max(1, round(frame_dt / self.dt))
        else:
            target = min(bound, frame_dt)
            self.substeps = max(1, int(np.ceil(frame_dt / target)))
            self.dt = frame_dt / self.substeps
        if self.substeps > _MAX_SUBSTEPS:
            raise UnstableConfigError(
                f"configuration needs {self.substeps} substeps per frame; "
                "material too stiff for this frame rate",
                suggested_dt=bound,
            )

    # ----- forces -----------------------------------------------------------

    def apply_user_push(self, push: ExternalForce) -> None:
        """Queue an impulse/force for the next step."""
        if push.magnitude == 0.0:
            return
        self._pending_pushes.append(push)

    def _select_particles(self, force: ExternalForce) -> np.ndarray:
        if force.point is None or force.radius is None:
            return np.arange(len(self.state))
        d = np.linalg.norm(self.state.positions - force.point[None, :], axis=1)
        sel = np.nonzero(d <= force.radius)[0]
        return sel if len(sel) else np.arange(len(self.state))

    def _apply_impulse(self, force: ExternalForce) -> None:
        sel = self._select_particles(force)
        m_sel = float(self.state.masses[sel].sum())
        if m_sel <= 0.0:
            return
        jvec = force.magnitude * force.direction
        labels = self.state.material_ids[sel]
        # per-particle mass-proportional impulse => uniform velocity change
        dv = jvec / m_sel
        soft = sel[~np.isin(labels, self.rigid_regions)]
        self.state.velocities[soft] += dv[None, :]
        for r, body in self.bodies.items():
            body_sel = sel[labels == r]
            if len(body_sel) == 0:
                continue
            share = float(self.state.masses[body_sel].sum()) / m_sel
            body.apply_impulse(share * jvec, point=force.point)

    def _continuous_accels(self, forces: list[ExternalForce], t: float):
        """Per-group acceleration contributions for active continuous forces."""
        soft_acc = np.zeros(3)
        body_forces = {r: (np.zeros(3), np.zeros(3)) for r in self.bodies}
        any_active = False
        for f in forces:
            if f.kind != "continuous" or not (f.t0 <= t <= (f.t1 or f.t0)):
                continue
            any_active = True
            sel = self._select_particles(f)
            m_sel = float(self.state.masses[sel].sum())
            if m_sel <= 0.0:
                continue
            fvec = f.magnitude * f.direction
            soft_acc = soft_acc + fvec / m_sel
            labels = self.state.material_ids[sel]
            for r, body in self.bodies.items():
                body_sel = sel[labels == r]
                if len(body_sel) == 0:
                    continue
                share = float(self.state.masses[body_sel].sum()) / m_sel
                fb, tb = body_forces[r]
                fb += share * fvec
                if f.point is not None:
                    tb += np.cross(f.point - body.com, share * fvec)
        return any_active, soft_acc, body_forces

    # ----- stepping ---------------------------------------------------------

    def step(self, forces: list[ExternalForce] | None = None) -> ParticleState:
        """Advance one frame (substeps x dt). Returns the live state."""
        forces = list(forces or [])
        frame_dt = self.substeps * self.dt
        t0 = self.time

        for push in self._pending_pushes:
            self._apply_impulse(push)
        self._pending_pushes.clear()
        for f in forces:
            if f.kind == "impulse" and t0 <= f.t0 < t0 + frame_dt:
                self._apply_impulse(f)

        for s in range(self.substeps):
            t = t0 + s * self.dt
            any_cont, soft_acc, body_forces = self._continuous_accels(forces, t)
            if len(self.fluid_idx):
                self._substep_sph(soft_acc if any_cont else None)
            else:
                self._substep_grid(soft_acc if any_cont else None, body_forces)

        self.time = t0 + frame_dt
        self.frame_index += 1
        if not np.all(np.isfinite(self.state.positions)) or not np.all(
            np.isfinite(self.state.velocities)
        ):
            raise NumericalBlowupError(
                f"non-finite particle state at frame {self.frame_index}",
                frame_index=self.frame_index,
            )
        return self.state

    def _substep_grid(self, soft_acc, body_forces) -> None:
        st = self.state
        dt = self.dt
        has_elastic = len(self.elastic_idx) > 0

        if soft_acc is not None and has_elastic:
            st.velocities[self.elastic_idx] += dt * soft_acc[None, :]

        if has_elastic:
            self._grid_m[...] = 0.0
            self._grid_p[...] = 0.0
            pos_e = st.positions[self.elastic_idx]
            vel_e = st.velocities[self.elastic_idx]
            f_e = st.deformation_gradients[self.elastic_idx]
            self.kernels.p2g_elastic(
                pos_e, vel_e, f_e, self.el_C,
                st.masses[self.elastic_idx], self.el_vol,
                self.el_mu, self.el_lam, dt,
                self.grid_origin, 1.0 / self.grid_dx,
                self._grid_m, self._grid_p,
            )
            st.deformation_gradients[self.elastic_idx] = f_e
            for r, body in self.bodies.items():
                grm = self._grid_rm[r]
                grm[...] = 0.0
                self.kernels.p2g_rigid(
                    st.positions[self.rigid_idx[r]],
                    st.masses[self.rigid_idx[r]],
                    body.com, body.v, body.w,
                    self.grid_origin, 1.0 / self.grid_dx,
                    self._grid_m, self._grid_p, grm,
                )
            self.kernels.grid_finalize(
                self._grid_m, self._grid_p, dt, self.world.gravity,
                float(self.world.ground_point[2]), self._ground_friction(),
                self.grid_origin, 1.0 / self.grid_dx, 2,
            )

        for r, body in self.bodies.items():
            f_ext, t_ext = body_forces.get(r, (np.zeros(3), np.zeros(3)))
            force = f_ext.copy()
            torque = t_ext.copy()
            if has_elastic:
                imp = np.zeros(3)
                trq = np.zeros(3)
                self.kernels.rigid_grid_project(
                    self._grid_rm[r], self._grid_m, self._grid_p,
                    body.com, body.v, body.w, dt, self.world.gravity,
                    self.grid_origin, 1.0 / self.grid_dx, imp, trq,
                )
                force -= imp / dt
                torque -= trq / dt
            body.step(dt, self.world.gravity, force=force, torque=torque,
                      ground_z=float(self.world.ground_point[2]))

        if has_elastic:
            pos_e = st.positions[self.elastic_idx]
            vel_e = st.velocities[self.elastic_idx]
            self.kernels.g2p_elastic(
                pos_e, vel_e, self.el_C, dt,
                self.grid_origin, 1.0 / self.grid_dx, self._grid_p,
                self._clip_lo, self._clip_hi,
            )
            st.positions[self.elastic_idx] = pos_e
            st.velocities[self.elastic_idx] = vel_e

        for r, body in self.bodies.items():
            idx = self.rigid_idx[r]
            st.positions[idx] = body.follower_positions()
            st.velocities[idx] = body.follower_velocities()
            st.deformation_gradients[idx] = body.rotation[None, :, :]

    def _ground_friction(self) -> float:
        fr = [m.friction for m in self.materials if m.kind in (ELASTIC, RIGID)]
        return float(np.mean(fr)) if fr else 0.4

    def _substep_sph(self, soft_acc) -> None:
        st = self.state
        idx = self.fluid_idx
        pos = st.positions[idx]
        vel = st.velocities[idx]
        mass = st.masses[idx]
        h = self.sph_h
        dt = self.dt

        order, cell_start, dims, lo = _build_cell_list(pos, h)
        self.kernels.sph_density(pos, mass, h, order, cell_start, dims, lo, self._sph_rho)
        rho = np.maximum(self._sph_rho, self.sph_rho0)
        pres = self.sph_k * ((rho / self.sph_rho0) ** self.sph_gamma - 1.0)
        self.kernels.sph_accel(
            pos, vel, rho, pres, mass, h,
            _SPH_ALPHA_VISC, self.sph_c, self.sph_rho0, self.sph_cohesion,
            order, cell_start, dims, lo, self._sph_acc,
        )
        acc = self._sph_acc + self.world.gravity[None, :]
        if soft_acc is not None:
            acc = acc + soft_acc[None, :]
        vel = vel + dt * acc
        pos = pos + dt * vel

        ground_z = float(self.world.ground_point[2])
        below = pos[:, 2] < ground_z
        pos[below, 2] = ground_z
        vel[below, 2] = np.maximum(vel[below, 2], 0.0)
        for a in range(3):
            low = pos[:, a] < self._clip_lo[a]
            high = pos[:, a] > self._clip_hi[a]
            pos[low, a] = self._clip_lo[a]
            vel[low, a] = np.maximum(vel[low, a], 0.0)
            pos[high, a] = self._clip_hi[a]
            vel[high, a] = np.minimum(vel[high, a], 0.0)

        st.positions[idx] = pos
        st.velocities[idx] = vel

    # ----- queries -----------------------------------------------------------

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        """(displacements from rest, deformation gradients); fluids report I."""
        d = self.state.positions - self.state.rest_positions
        f = self.state.deformation_gradients.copy()
        if len(self.fluid_idx):
            f[self.fluid_idx] = np.eye(3)
        return d, f

    def total_momentum(self) -> np.ndarray:
        return (self.state.masses[:, None] * self.state.velocities).sum(axis=0)

    def region_kinetic_energy(self, region: int, relative_to: np.ndarray | None = None) -> float:
        idx = np.nonzero(self.state.material_ids == region)[0]
        v = self.state.velocities[idx]
        if relative_to is not None:
            v = v - relative_to[None, :]
        return float(0.5 * np.sum(self.state.masses[idx] * np.einsum("na,na->n", v, v)))

    def set_gravity(self, g: np.ndarray) -> None:
        self.world.gravity = np.asarray(g, dtype=np.float64).reshape(3)

    def set_material_param(self, name: str, value: float) -> None:
        """Live-editable material parameters (server SetParam whitelist)."""
        if name == "surface_tension":
            for m in self.materials:
                if m.kind == FLUID:
                    m.surface_tension = float(value)
            if len(self.fluid_idx):
                self.sph_cohesion = float(value)
        elif name == "youngs_e":
            if float(value) <= 0:
                raise ConfigError("youngs_e must be > 0")
            for r, m in enumerate(self.materials):
                if m.kind != ELASTIC:
                    continue
                m.youngs_e = float(value)
                mu, lam = m.lame()
                sel = self.state.material_ids[self.elastic_idx] == r
                self.el_mu[sel] = mu
                self.el_lam[sel] = lam
        elif name == "restitution":
            if not (0.0 <= float(value) <= 1.0):
                raise ConfigError("restitution must be in [0, 1]")
            for m in self.materials:
                if m.kind == RIGID:
                    m.restitution = float(value)
            for body in self.bodies.values():
                body.restitution = float(value)
        else:
            raise ConfigError(f"parameter {name!r} is not editable")


def init_sim(seed: ParticleSeed, materials: list[Material], world: WorldConfig,
             backend: str | None = None) -> Simulation:
    """Build a Simulation at rest: v = 0, F = I, masses from region densities."""
    return Simulation(seed, materials, world, backend=backend)
