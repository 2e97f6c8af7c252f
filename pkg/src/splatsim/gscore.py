"""Gaussian primitive data model and the covariance math shared by every module.

Conventions used throughout the package:

* quaternions are stored ``(w, x, y, z)`` and may be unnormalized at rest
  (they are normalized on every use),
* symmetric 3x3 covariances travel as packed upper triangles in the order
  ``(xx, xy, xz, yy, yz, zz)``,
* scales are stored as logs; ``exp(log_scale)`` is the per-axis standard
  deviation of the Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidRotationError

# l=0 real spherical-harmonic basis factor, used to turn DC coefficients
# into displayable RGB.
SH_DC_SCALE = 0.28209479177387814

_TRIU_ROWS = np.array([0, 0, 0, 1, 1, 2])
_TRIU_COLS = np.array([0, 1, 2, 1, 2, 2])


@dataclass
class Gaussian:
    """A single splat: center, orientation, log-scales, opacity logit, SH color."""

    center: np.ndarray
    rotation: np.ndarray
    log_scale: np.ndarray
    opacity_logit: float
    color: np.ndarray  # 48 coefficients: 3 DC + 45 rest


@dataclass
class GaussianSet:
    """A scene stored as parallel arrays, with an index set marking the object.

    ``object_mask`` holds the indices of the simulated object; everything else
    is static background.
    """

    centers: np.ndarray  # (N, 3)
    rotations: np.ndarray  # (N, 4), (w, x, y, z), raw
    log_scales: np.ndarray  # (N, 3)
    opacity_logits: np.ndarray  # (N,)
    colors: np.ndarray  # (N, 48)
    object_mask: np.ndarray = field(default=None)  # (M,) int indices

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64).reshape(-1, 3)
        n = len(self.centers)
        self.rotations = np.asarray(self.rotations, dtype=np.float64).reshape(n, 4)
        self.log_scales = np.asarray(self.log_scales, dtype=np.float64).reshape(n, 3)
        self.opacity_logits = np.asarray(self.opacity_logits, dtype=np.float64).reshape(n)
        self.colors = np.asarray(self.colors, dtype=np.float64).reshape(n, -1 if n else 48)
        if self.colors.shape[1] != 48:
            padded = np.zeros((n, 48))
            padded[:, : self.colors.shape[1]] = self.colors
            self.colors = padded
        if self.object_mask is None:
            self.object_mask = np.arange(n, dtype=np.int64)
        else:
            self.object_mask = np.asarray(self.object_mask, dtype=np.int64).reshape(-1)

    def __len__(self) -> int:
        return len(self.centers)

    def gaussian(self, i: int) -> Gaussian:
        return Gaussian(
            center=self.centers[i].copy(),
            rotation=self.rotations[i].copy(),
            log_scale=self.log_scales[i].copy(),
            opacity_logit=float(self.opacity_logits[i]),
            color=self.colors[i].copy(),
        )

    def validate(self) -> None:
        n = len(self)
        mask = self.object_mask
        if len(mask) == 0:
            raise InvalidInputError("object_mask is empty")
        if len(np.unique(mask)) != len(mask):
            raise InvalidInputError("object_mask indices are not unique")
        if mask.min() < 0 or mask.max() >= n:
            raise InvalidInputError("object_mask index out of range")

    def dc_rgb(self) -> np.ndarray:
        """DC spherical-harmonic color as displayable RGB in [0, 1], (N, 3)."""
        return np.clip(0.5 + SH_DC_SCALE * self.colors[:, :3], 0.0, 1.0)

    def opacities(self) -> np.ndarray:
        """Sigmoid of the stored logits, (N,)."""
        return 1.0 / (1.0 + np.exp(-self.opacity_logits))


@dataclass
class Decomp:
    """Polar factors of a deformation gradient: proper rotation and symmetric stretch."""

    rotation: np.ndarray  # (3, 3), orthogonal, det +1
    stretch: np.ndarray  # (3, 3), symmetric PSD


def sym_pack(m: np.ndarray) -> np.ndarray:
    """Pack symmetric 3x3 matrices (..., 3, 3) into upper triangles (..., 6)."""
    m = np.asarray(m, dtype=np.float64)
    return m[..., _TRIU_ROWS, _TRIU_COLS]


def sym_unpack(p: np.ndarray) -> np.ndarray:
    """Expand packed upper triangles (..., 6) into symmetric matrices (..., 3, 3)."""
    p = np.asarray(p, dtype=np.float64)
    out = np.empty(p.shape[:-1] + (3, 3), dtype=np.float64)
    out[..., 0, 0] = p[..., 0]
    out[..., 0, 1] = out[..., 1, 0] = p[..., 1]
    out[..., 0, 2] = out[..., 2, 0] = p[..., 2]
    out[..., 1, 1] = p[..., 3]
    out[..., 1, 2] = out[..., 2, 1] = p[..., 4]
    out[..., 2, 2] = p[..., 5]
    return out


def normalize_quaternions(q: np.ndarray) -> np.ndarray:
    """Normalize quaternions (..., 4); zero or non-finite norm is an error."""
    q = np.asarray(q, dtype=np.float64)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if not np.all(np.isfinite(norm)) or np.any(norm == 0.0):
        raise InvalidRotationError("quaternion has zero or non-finite norm")
    return q / norm


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrices (..., 3, 3) from quaternions (..., 4) in (w, x, y, z)."""
    q = normalize_quaternions(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    out[..., 0, 0] = 1 - 2 * (y * y + z * z)
    out[..., 0, 1] = 2 * (x * y - w * z)
    out[..., 0, 2] = 2 * (x * z + w * y)
    out[..., 1, 0] = 2 * (x * y + w * z)
    out[..., 1, 1] = 1 - 2 * (x * x + z * z)
    out[..., 1, 2] = 2 * (y * z - w * x)
    out[..., 2, 0] = 2 * (x * z - w * y)
    out[..., 2, 1] = 2 * (y * z + w * x)
    out[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def covariance_from_params(rotation: np.ndarray, log_scale: np.ndarray) -> np.ndarray:
    """Covariance R * diag(exp(ls))^2 * R^T as a packed upper triangle.

    Accepts a single quaternion/(3,) pair or batches (..., 4) with (..., 3);
    returns (..., 6).
    """
    r = quat_to_matrix(rotation)
    s = np.exp(np.asarray(log_scale, dtype=np.float64))
    m = r * s[..., None, :]  # columns scaled: R @ diag(s)
    sigma = m @ np.swapaxes(m, -1, -2)
    return sym_pack(sigma)


def transform_covariance(sigma: np.ndarray, f_hat: np.ndarray) -> np.ndarray:
    """Push a covariance through a linear map: F Sigma F^T, symmetrized.

    ``sigma`` is packed (..., 6); ``f_hat`` is (..., 3, 3). A singular map is
    allowed and yields a degenerate (rank-deficient) covariance.
    """
    full = sym_unpack(sigma)
    f_hat = np.asarray(f_hat, dtype=np.float64)
    out = f_hat @ full @ np.swapaxes(f_hat, -1, -2)
    out = 0.5 * (out + np.swapaxes(out, -1, -2))
    return sym_pack(out)


def polar_decompose(f: np.ndarray) -> Decomp:
    """Split F into a proper rotation and a symmetric stretch via SVD.

    When det(U V^T) < 0 the last column of U and the smallest singular value
    are negated so the rotation stays in SO(3).
    """
    f = np.asarray(f, dtype=np.float64).reshape(3, 3)
    if not np.all(np.isfinite(f)):
        raise InvalidInputError("deformation gradient has non-finite entries")
    u, s, vt = np.linalg.svd(f)
    if np.linalg.det(u @ vt) < 0.0:
        u = u.copy()
        s = s.copy()
        u[:, 2] = -u[:, 2]
        s[2] = -s[2]
    rotation = u @ vt
    stretch = vt.T @ np.diag(s) @ vt
    return Decomp(rotation=rotation, stretch=stretch)


def polar_rotations(f: np.ndarray) -> np.ndarray:
    """Batched rotation factors (N, 3, 3) of deformation gradients (N, 3, 3)."""
    f = np.asarray(f, dtype=np.float64)
    u, s, vt = np.linalg.svd(f)
    det = np.linalg.det(u @ vt)
    flip = det < 0.0
    if np.any(flip):
        u = u.copy()
        u[flip, :, 2] = -u[flip, :, 2]
    return u @ vt
