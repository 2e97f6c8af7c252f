"""Simulation proxy construction: outlier pruning, convex hull, particle sampling.

The simulated geometry is the convex hull of the object's Gaussian centers;
particles are sampled on a jittered grid inside it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull as _QhullHull
from scipy.spatial import QhullError, cKDTree

from .errors import ConfigError, DegenerateGeometryError, DegenerateObjectError, TooFewParticlesError
from .gscore import GaussianSet

DEFAULT_PARTICLE_TARGET = 4000
_MIN_PARTICLES = 64


@dataclass
class ConvexHull:
    """Watertight triangulated hull with outward-oriented faces."""

    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray  # (F, 3) indices into vertices, outward orientation
    normals: np.ndarray  # (F, 3) outward unit normals
    offsets: np.ndarray  # (F,) plane offsets: n.x + offset <= 0 inside
    volume: float

    def contains(self, points: np.ndarray, eps: float = 0.0) -> np.ndarray:
        """Half-space test for each point; eps > 0 loosens, eps < 0 tightens."""
        points = np.atleast_2d(points)
        d = points @ self.normals.T + self.offsets[None, :]
        return np.all(d <= eps, axis=1)

    def bbox_diagonal(self) -> float:
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))


@dataclass
class ParticleSeed:
    """Particles sampled inside the hull, ready for init_sim."""

    positions: np.ndarray  # (N, 3) rest positions
    rest_volume: np.ndarray  # (N,) per-particle volume
    region_labels: np.ndarray  # (N,) region index
    spacing: float
    initial_offset: np.ndarray | None = None  # applied at sim start (e.g. a lift)


@dataclass
class RegionSpec:
    """Geometric predicate + material name, evaluated in listed order."""

    predicate: "Predicate"
    name: str = ""


class Predicate:
    def test(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass
class AllPredicate(Predicate):
    def test(self, points):
        return np.ones(len(points), dtype=bool)


@dataclass
class HalfSpacePredicate(Predicate):
    axis: int  # 0, 1, 2
    greater: bool
    value: float

    def test(self, points):
        col = points[:, self.axis]
        return col > self.value if self.greater else col < self.value


@dataclass
class SpherePredicate(Predicate):
    center: np.ndarray
    radius: float

    def test(self, points):
        d = np.linalg.norm(points - np.asarray(self.center)[None, :], axis=1)
        return d <= self.radius


def prune_outliers(gaussians: GaussianSet, radius: float | None = None,
                   min_neighbors: int = 4) -> np.ndarray:
    """Indices of object Gaussians with enough close-by object neighbors.

    With radius=None, uses 3x the mean nearest-neighbor distance estimated on
    a 1k subsample. Pruned Gaussians stay in the scene but are excluded from
    the hull and the skinning.
    """
    if min_neighbors < 1:
        raise ConfigError("min_neighbors must be >= 1")
    obj = gaussians.object_mask
    centers = gaussians.centers[obj]
    if len(centers) < 2:
        raise DegenerateObjectError("object needs at least 2 Gaussians to prune")
    tree = cKDTree(centers)
    if radius is None:
        sample = centers[:: max(1, len(centers) // 1000)]
        nn_d, _ = tree.query(sample, k=2)
        radius = 3.0 * float(np.mean(nn_d[:, 1]))
    if not radius > 0:
        raise ConfigError("radius must be > 0")
    counts = np.array(tree.query_ball_point(centers, r=radius, return_length=True))
    keep = counts - 1 >= min_neighbors  # discount the point itself
    if not np.any(keep):
        raise DegenerateObjectError("all object Gaussians pruned as outliers")
    return obj[keep]


def build_hull(centers: np.ndarray) -> ConvexHull:
    """Convex hull of the centers; rejects coplanar/collinear input."""
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    if len(centers) < 4:
        raise DegenerateGeometryError("need at least 4 points for a 3D hull")
    try:
        q = _QhullHull(centers, qhull_options="Qt")
    except QhullError as exc:
        raise DegenerateGeometryError(f"degenerate point set: {exc}") from exc

    # compact to used vertices, orient faces outward
    used = np.unique(q.simplices)
    remap = np.full(len(centers), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    vertices = centers[used]
    faces = remap[q.simplices]
    normals = q.equations[:, :3].copy()
    offsets = q.equations[:, 3].copy()
    for i, (f, n) in enumerate(zip(faces, normals)):
        a, b, c = vertices[f]
        if np.dot(np.cross(b - a, c - a), n) < 0.0:
            faces[i] = f[[0, 2, 1]]
    return ConvexHull(vertices=vertices, faces=faces, normals=normals,
                      offsets=offsets, volume=float(q.volume))


def check_watertight(hull: ConvexHull) -> bool:
    """Every edge shared by exactly two faces and Euler characteristic 2."""
    edges = {}
    for f in hull.faces:
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            key = (min(a, b), max(a, b))
            edges[key] = edges.get(key, 0) + 1
    if any(c != 2 for c in edges.values()):
        return False
    v = len(hull.vertices)
    e = len(edges)
    f = len(hull.faces)
    return v - e + f == 2


def spacing_for_target(hull: ConvexHull, target: int = DEFAULT_PARTICLE_TARGET) -> float:
    """Grid spacing that yields roughly `target` particles inside the hull."""
    return float((hull.volume / max(target, 1)) ** (1.0 / 3.0))


def sample_particles(hull: ConvexHull, target_spacing: float,
                     rng_seed: int = 0, jitter: float = 0.25) -> ParticleSeed:
    """Jittered-grid samples strictly inside the hull; rest volume = spacing^3."""
    if not target_spacing > 0:
        raise ConfigError("target_spacing must be > 0")
    lo = hull.vertices.min(axis=0)
    hi = hull.vertices.max(axis=0)
    counts = np.maximum(np.floor((hi - lo) / target_spacing).astype(int), 1)
    axes = [lo[a] + target_spacing * (0.5 + np.arange(counts[a])) for a in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)

    rng = np.random.default_rng(rng_seed)
    pts = grid + rng.uniform(-jitter, jitter, size=grid.shape) * target_spacing
    eps = -1e-9 * hull.bbox_diagonal()  # strict interior
    inside = hull.contains(pts, eps=eps)
    pts = pts[inside]
    if len(pts) < _MIN_PARTICLES:
        raise TooFewParticlesError(
            f"spacing {target_spacing:g} yields {len(pts)} particles "
            f"(need >= {_MIN_PARTICLES}); use a smaller spacing"
        )
    return ParticleSeed(
        positions=pts,
        rest_volume=np.full(len(pts), target_spacing**3),
        region_labels=np.zeros(len(pts), dtype=np.int64),
        spacing=float(target_spacing),
    )


def assign_regions(seed: ParticleSeed, regions: list[RegionSpec]) -> ParticleSeed:
    """Label every particle with the first matching region; last is catch-all."""
    if not regions:
        raise ConfigError("need at least one region")
    if not isinstance(regions[-1].predicate, AllPredicate):
        raise ConfigError("last region must be a catch-all")
    labels = np.full(len(seed.positions), -1, dtype=np.int64)
    for i, region in enumerate(regions):
        mask = region.predicate.test(seed.positions) & (labels == -1)
        labels[mask] = i
    seed.region_labels = labels
    return seed
