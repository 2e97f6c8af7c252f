"""Particle-to-Gaussian skinning: rest-pose binding, inverse-distance weights,
per-frame center/covariance updates, and fluid hole filling.

Each bound Gaussian follows a fixed set of K nearby particles. Weights are
normalized inverse squared distances at the rest pose; blended displacements
move the center and the blended deformation gradient transforms the
covariance. Fluids skip the gradient (covariances stay at rest).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError
from .gscore import GaussianSet, covariance_from_params, sym_pack, transform_covariance
from .gsio import AnimFrame, SpawnedGaussians

DEFAULT_K = 8
_GAUSSIAN_GRAPH_K = 6  # neighbor Gaussians tracked for hole detection


@dataclass
class HoleFillConfig:
    """Knobs for fluid gap filling; defaults are calibration values."""

    spacing_ratio_threshold: float = 1.6
    shell_radii: tuple[float, ...] = (1.0, 2.0)
    poisson_radius: float | None = None  # None: 0.9 x median rest spacing
    max_spawn_per_frame: int | None = None  # None: 5% of bound Gaussians
    enabled: bool = True


@dataclass
class Binding:
    """Rest-pose Gaussian-to-particle attachment, fixed for a whole run."""

    bound_indices: np.ndarray  # (M,) indices into the base set
    neighbor_indices: np.ndarray  # (M, K) particle ids
    weights: np.ndarray  # (M, K) normalized
    rest_spacing: np.ndarray  # (M,) mean rest distance to the K particles
    epsilon: float
    rest_particles: np.ndarray  # (P, 3) the rest-pose particle positions
    base_covariances: np.ndarray  # (N_base, 6) covariances of the full base set
    # Gaussian neighbor graph at rest, used by hole detection
    gaussian_neighbors: np.ndarray  # (M, Kg) indices into bound rows
    gaussian_rest_dist: np.ndarray  # (M, Kg)

    @property
    def k(self) -> int:
        return self.neighbor_indices.shape[1]


def bind(base: GaussianSet, rest_particles: np.ndarray, k: int = DEFAULT_K,
         epsilon: float | None = None, bound_indices: np.ndarray | None = None) -> Binding:
    """Attach each object Gaussian to its K nearest particles at rest.

    Ties broken by lower particle index. epsilon defaults to
    1e-8 * (bbox diagonal)^2.
    """
    rest_particles = np.asarray(rest_particles, dtype=np.float64).reshape(-1, 3)
    if k < 1:
        raise ConfigError("K must be >= 1")
    if len(rest_particles) < k:
        raise ConfigError(f"K={k} exceeds particle count {len(rest_particles)}")
    if bound_indices is None:
        bound_indices = base.object_mask
    bound_indices = np.asarray(bound_indices, dtype=np.int64)
    centers = base.centers[bound_indices]

    if epsilon is None:
        span = centers.max(axis=0) - centers.min(axis=0) if len(centers) else np.ones(3)
        epsilon = 1e-8 * float(span @ span)

    tree = cKDTree(rest_particles)
    dist, idx = tree.query(centers, k=k)
    if k == 1:
        dist = dist[:, None]
        idx = idx[:, None]
    # deterministic tie-break: equal distances ordered by particle index
    order = np.lexsort((idx, dist), axis=1)
    dist = np.take_along_axis(dist, order, axis=1)
    idx = np.take_along_axis(idx, order, axis=1)

    inv = 1.0 / (dist**2 + epsilon)
    weights = inv / inv.sum(axis=1, keepdims=True)

    base_cov = covariance_from_params(base.rotations, base.log_scales) if len(base) else np.zeros((0, 6))

    if len(centers) > 1:
        kg = min(_GAUSSIAN_GRAPH_K, len(centers) - 1)
        gtree = cKDTree(centers)
        gdist, gidx = gtree.query(centers, k=kg + 1)
        gdist, gidx = gdist[:, 1:], gidx[:, 1:]  # drop self
    else:
        gdist = np.zeros((len(centers), 0))
        gidx = np.zeros((len(centers), 0), dtype=np.int64)

    return Binding(
        bound_indices=bound_indices,
        neighbor_indices=idx.astype(np.int64),
        weights=weights,
        rest_spacing=dist.mean(axis=1),
        epsilon=float(epsilon),
        rest_particles=rest_particles.copy(),
        base_covariances=base_cov,
        gaussian_neighbors=gidx.astype(np.int64),
        gaussian_rest_dist=gdist,
    )


def skin_frame(binding: Binding, base: GaussianSet, displacements: np.ndarray,
               gradients: np.ndarray, timestamp: float = 0.0) -> AnimFrame:
    """Blend particle displacements and deformation gradients onto the Gaussians.

    c_hat = c + sum_i w_i d_i; F_hat = sum_i w_i F_i; Sigma_hat = F_hat Sigma F_hat^T.
    Unbound (background/pruned) Gaussians keep their rest center and covariance.
    """
    displacements = np.asarray(displacements, dtype=np.float64)
    gradients = np.asarray(gradients, dtype=np.float64)

    centers = base.centers.copy()
    covs = binding.base_covariances.copy()
    sel = binding.bound_indices
    w = binding.weights
    nbr = binding.neighbor_indices

    centers[sel] = base.centers[sel] + np.einsum("mk,mka->ma", w, displacements[nbr])
    f_hat = np.einsum("mk,mkab->mab", w, gradients[nbr])
    covs[sel] = transform_covariance(binding.base_covariances[sel], f_hat)
    return AnimFrame(timestamp=timestamp, centers=centers, covariances=covs)


def skin_fluid_frame(binding: Binding, base: GaussianSet, positions: np.ndarray,
                     timestamp: float = 0.0) -> AnimFrame:
    """Centers via blended displacements; covariances untouched (F_hat = I)."""
    d = np.asarray(positions, dtype=np.float64) - binding.rest_particles
    centers = base.centers.copy()
    sel = binding.bound_indices
    centers[sel] = base.centers[sel] + np.einsum(
        "mk,mka->ma", binding.weights, d[binding.neighbor_indices]
    )
    return AnimFrame(timestamp=timestamp, centers=centers,
                     covariances=binding.base_covariances.copy())


def _shell_directions() -> np.ndarray:
    """Fixed icosahedron directions: deterministic candidate placement."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    dirs = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


_ICO_DIRS = _shell_directions()


def fill_holes(frame: AnimFrame, binding: Binding, base: GaussianSet,
               cfg: HoleFillConfig | None = None) -> AnimFrame:
    """Spawn Gaussians where fluid stretching opened visible gaps.

    A bound Gaussian whose mean distance to its rest-pose neighbor Gaussians
    exceeds threshold x rest value marks a hole. Candidates sit on radial
    shells around the midpoints to its stretched neighbors and are kept only
    if no existing or already-accepted center is within the Poisson radius.
    """
    cfg = cfg or HoleFillConfig()
    if not cfg.enabled or binding.gaussian_neighbors.shape[1] == 0:
        return frame

    sel = binding.bound_indices
    cur = frame.centers[sel]
    nbr = binding.gaussian_neighbors
    rest_d = binding.gaussian_rest_dist

    cur_d = np.linalg.norm(cur[nbr] - cur[:, None, :], axis=2)
    mean_rest = rest_d.mean(axis=1)
    hole = cur_d.mean(axis=1) > cfg.spacing_ratio_threshold * mean_rest
    if not np.any(hole):
        return frame

    local_spacing = mean_rest  # rest-pose scale per Gaussian
    r_pd = cfg.poisson_radius
    if r_pd is None:
        r_pd = 0.9 * float(np.median(local_spacing))
    max_spawn = cfg.max_spawn_per_frame
    if max_spawn is None:
        max_spawn = max(1, int(0.05 * len(sel)))

    # candidates: shells around midpoints of each stretched pair
    cand_centers = []
    cand_priority = []
    cand_pairs = []
    stretched = cur_d > cfg.spacing_ratio_threshold * rest_d
    for j in np.nonzero(hole)[0]:
        for col in np.nonzero(stretched[j])[0]:
            kk = nbr[j, col]
            mid = 0.5 * (cur[j] + cur[kk])
            for mult in cfg.shell_radii:
                radius = mult * local_spacing[j]
                pts = mid[None, :] + radius * _ICO_DIRS
                for p in pts:
                    cand_centers.append(p)
                    cand_priority.append(float(np.linalg.norm(p - mid)))
                    cand_pairs.append((j, kk))
    if not cand_centers:
        return frame
    cand_centers = np.asarray(cand_centers)
    order = np.argsort(cand_priority, kind="stable")  # nearest-to-hole-center first

    alive_centers = frame.centers[frame.alive_mask]
    if frame.spawned is not None and len(frame.spawned):
        alive_centers = np.concatenate([alive_centers, frame.spawned.centers])
    existing = cKDTree(alive_centers)

    accepted = []
    accepted_pairs = []
    for ci in order:
        if len(accepted) >= max_spawn:
            break
        p = cand_centers[ci]
        if existing.query(p, k=1)[0] < r_pd:
            continue
        if accepted and np.min(np.linalg.norm(np.asarray(accepted) - p[None, :], axis=1)) < r_pd:
            continue
        accepted.append(p)
        accepted_pairs.append(cand_pairs[ci])
    if not accepted:
        return frame

    accepted = np.asarray(accepted)
    rgb = base.dc_rgb()[sel]
    alpha = base.opacities()[sel]
    new_rgb = np.empty((len(accepted), 3))
    new_alpha = np.empty(len(accepted))
    new_cov = np.empty((len(accepted), 6))
    for i, (p, (j, kk)) in enumerate(zip(accepted, accepted_pairs)):
        dj = np.linalg.norm(p - cur[j])
        dk = np.linalg.norm(p - cur[kk])
        wj = dk / max(dj + dk, 1e-12)  # closer endpoint dominates
        new_rgb[i] = wj * rgb[j] + (1.0 - wj) * rgb[kk]
        new_alpha[i] = wj * alpha[j] + (1.0 - wj) * alpha[kk]
        sigma = 0.5 * local_spacing[j]
        new_cov[i] = sym_pack(sigma**2 * np.eye(3))

    spawned = SpawnedGaussians(
        centers=accepted,
        covariances=new_cov,
        colors_rgb=(np.clip(new_rgb, 0, 1) * 255.0 + 0.5).astype(np.uint8),
        opacities=new_alpha,
    )
    if frame.spawned is not None and len(frame.spawned):
        spawned = SpawnedGaussians(
            centers=np.concatenate([frame.spawned.centers, spawned.centers]),
            covariances=np.concatenate([frame.spawned.covariances, spawned.covariances]),
            colors_rgb=np.concatenate([frame.spawned.colors_rgb, spawned.colors_rgb]),
            opacities=np.concatenate([frame.spawned.opacities, spawned.opacities]),
        )
    return AnimFrame(
        timestamp=frame.timestamp,
        centers=frame.centers,
        covariances=frame.covariances,
        alive_mask=frame.alive_mask,
        spawned=spawned,
    )


class SpawnedPool:
    """Persists hole-fill spawns across frames by riding the nearest particle.

    Each accepted spawn is anchored to its closest particle at spawn time;
    subsequent frames translate it by that particle's displacement since then.
    """

    def __init__(self):
        self.anchors = np.zeros(0, dtype=np.int64)
        self.offsets = np.zeros((0, 3))
        self.covariances = np.zeros((0, 6))
        self.colors_rgb = np.zeros((0, 3), dtype=np.uint8)
        self.opacities = np.zeros(0)

    def __len__(self) -> int:
        return len(self.anchors)

    def advected(self, particle_positions: np.ndarray) -> SpawnedGaussians | None:
        if len(self) == 0:
            return None
        centers = particle_positions[self.anchors] + self.offsets
        return SpawnedGaussians(
            centers=centers,
            covariances=self.covariances.copy(),
            colors_rgb=self.colors_rgb.copy(),
            opacities=self.opacities.copy(),
        )

    def absorb(self, spawned: SpawnedGaussians, existing_count: int,
               particle_positions: np.ndarray) -> None:
        if len(spawned) - existing_count <= 0:
            return
        fresh_centers = spawned.centers[existing_count:]
        tree = cKDTree(particle_positions)
        _, anchors = tree.query(fresh_centers, k=1)
        self.anchors = np.concatenate([self.anchors, anchors.astype(np.int64)])
        self.offsets = np.concatenate(
            [self.offsets, fresh_centers - particle_positions[anchors]]
        )
        self.covariances = np.concatenate(
            [self.covariances, spawned.covariances[existing_count:]]
        )
        self.colors_rgb = np.concatenate([self.colors_rgb, spawned.colors_rgb[existing_count:]])
        self.opacities = np.concatenate([self.opacities, spawned.opacities[existing_count:]])
