"""Single rigid body: symplectic pose integration, impulse-based ground contact.

Particles of a rigid region are kinematic followers of the body pose; the
body's contact geometry is the convex hull of its particles at init.
"""

from __future__ import annotations

import numpy as np

from ..gscore import quat_to_matrix


def _quat_mul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


class RigidBody:
    def __init__(self, positions: np.ndarray, masses: np.ndarray,
                 contact_vertices: np.ndarray | None = None,
                 restitution: float = 0.1, friction: float = 0.4):
        self.mass = float(masses.sum())
        self.com0 = (positions * masses[:, None]).sum(axis=0) / self.mass
        rel = positions - self.com0
        # inertia tensor about the center of mass
        r2 = np.einsum("na,na->n", rel, rel)
        inertia = np.einsum("n,ab->ab", masses * r2, np.eye(3)) - np.einsum(
            "n,na,nb->ab", masses, rel, rel
        )
        # guard against degenerate (collinear) particle sets
        inertia += 1e-9 * self.mass * np.eye(3)
        self.inertia_body = inertia
        self.inertia_body_inv = np.linalg.inv(inertia)

        self.offsets = rel  # follower offsets in the body frame
        if contact_vertices is None:
            contact_vertices = positions
        self.contact_offsets = contact_vertices - self.com0

        self.restitution = restitution
        self.friction = friction

        self.com = self.com0.copy()
        self.quat = np.array([1.0, 0.0, 0.0, 0.0])
        self.v = np.zeros(3)
        self.w = np.zeros(3)

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.quat)

    def world_inertia_inv(self) -> np.ndarray:
        r = self.rotation
        return r @ self.inertia_body_inv @ r.T

    def apply_impulse(self, impulse: np.ndarray, point: np.ndarray | None = None) -> None:
        self.v = self.v + impulse / self.mass
        if point is not None:
            self.w = self.w + self.world_inertia_inv() @ np.cross(point - self.com, impulse)

    def apply_angular_impulse(self, angular: np.ndarray) -> None:
        self.w = self.w + self.world_inertia_inv() @ angular

    def step(self, dt: float, gravity: np.ndarray, force: np.ndarray | None = None,
             torque: np.ndarray | None = None, ground_z: float | None = None) -> None:
        acc = gravity.copy()
        if force is not None:
            acc = acc + force / self.mass
        # position update exact for constant acceleration
        self.com = self.com + self.v * dt + 0.5 * acc * dt * dt
        self.v = self.v + acc * dt

        if torque is not None:
            self.w = self.w + self.world_inertia_inv() @ torque * dt
        if np.any(self.w):
            dq = _quat_mul(np.array([0.0, *(0.5 * dt * self.w)]), self.quat)
            self.quat = self.quat + dq
            self.quat = self.quat / np.linalg.norm(self.quat)

        if ground_z is not None:
            self._resolve_ground(ground_z, dt)

    def _resolve_ground(self, ground_z: float, dt: float) -> None:
        n = np.array([0.0, 0.0, 1.0])
        r = self.rotation
        verts = self.com[None, :] + self.contact_offsets @ r.T
        depth = ground_z - verts[:, 2]
        penetrating = np.nonzero(depth > 0.0)[0]
        if len(penetrating) == 0:
            return
        inv_inertia = self.world_inertia_inv()
        # a few impulse passes stabilize face contacts (multiple vertices)
        for _ in range(4):
            applied = False
            for idx in penetrating:
                p = self.com + r @ self.contact_offsets[idx]
                rel = p - self.com
                u = self.v + np.cross(self.w, rel)
                un = u @ n
                if un >= -1e-12:
                    continue
                k_n = 1.0 / self.mass + n @ np.cross(inv_inertia @ np.cross(rel, n), rel)
                j_n = -(1.0 + self.restitution) * un / k_n
                self.v = self.v + j_n * n / self.mass
                self.w = self.w + inv_inertia @ np.cross(rel, j_n * n)
                # Coulomb friction against the tangential slide
                u = self.v + np.cross(self.w, rel)
                ut = u - (u @ n) * n
                ut_norm = np.linalg.norm(ut)
                if ut_norm > 1e-9:
                    t = ut / ut_norm
                    k_t = 1.0 / self.mass + t @ np.cross(inv_inertia @ np.cross(rel, t), rel)
                    j_t = min(self.friction * j_n, ut_norm / k_t)
                    self.v = self.v - j_t * t / self.mass
                    self.w = self.w - inv_inertia @ np.cross(rel, j_t * t)
                applied = True
            if not applied:
                break
        # rolling resistance while in contact, else point contacts rock forever
        self.w = self.w * max(0.0, 1.0 - 8.0 * self.friction * dt)
        # sleep threshold: a settled body stops jittering on gravity kicks
        extent = float(np.abs(self.contact_offsets).max())
        if (np.linalg.norm(self.v) < 0.01
                and np.linalg.norm(self.w) * max(extent, 1e-6) < 0.01):
            self.v[:] = 0.0
            self.w[:] = 0.0
        # positional projection out of the plane
        verts = self.com[None, :] + self.contact_offsets @ self.rotation.T
        max_depth = ground_z - verts[:, 2].min()
        if max_depth > 0.0:
            self.com = self.com + max_depth * n

    def follower_positions(self) -> np.ndarray:
        return self.com[None, :] + self.offsets @ self.rotation.T

    def follower_velocities(self) -> np.ndarray:
        world_off = self.offsets @ self.rotation.T
        return self.v[None, :] + np.cross(np.broadcast_to(self.w, world_off.shape), world_off)

    def kinetic_energy(self) -> float:
        lin = 0.5 * self.mass * float(self.v @ self.v)
        inertia_world = self.rotation @ self.inertia_body @ self.rotation.T
        rot = 0.5 * float(self.w @ inertia_world @ self.w)
        return lin + rot
