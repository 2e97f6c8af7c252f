"""Scene and animation I/O: 3DGS PLY files, the .gsanim container, preview rendering.

.gsanim layout (little-endian):
    magic "GSAN" | version u32 = 1 | gaussian_count u32 | frame_count u32 | fps f32
    per frame:
        timestamp f32
        gaussian_count records of (center f32 x3, cov upper-tri f32 x6)  [36 B each]
        alive_mask bitset, ceil(N/8) bytes (LSB-first within each byte)
        spawned_count u32
        spawned records of (center f32 x3, cov f32 x6, rgb u8 x3, opacity f32) [43 B]

Spawned opacity is a linear alpha in [0, 1], renderer-ready.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    LengthMismatchError,
    MagicMismatchError,
    PlySchemaError,
    TruncatedPayloadError,
    UnsupportedFormatError,
    VersionMismatchError,
)
from .gscore import GaussianSet, covariance_from_params, sym_unpack

MAGIC = b"GSAN"
VERSION = 1

_REQUIRED_PROPS = (
    ["x", "y", "z"]
    + [f"f_dc_{i}" for i in range(3)]
    + ["opacity"]
    + [f"scale_{i}" for i in range(3)]
    + [f"rot_{i}" for i in range(4)]
)
_REST_PROPS = [f"f_rest_{i}" for i in range(45)]

_PLY_TYPES = {
    "float": "<f4", "float32": "<f4",
    "double": "<f8", "float64": "<f8",
    "uchar": "u1", "uint8": "u1", "char": "i1", "int8": "i1",
    "short": "<i2", "int16": "<i2", "ushort": "<u2", "uint16": "<u2",
    "int": "<i4", "int32": "<i4", "uint": "<u4", "uint32": "<u4",
}


@dataclass
class SpawnedGaussians:
    """Hole-filling output carried by a frame."""

    centers: np.ndarray  # (S, 3)
    covariances: np.ndarray  # (S, 6)
    colors_rgb: np.ndarray  # (S, 3) uint8
    opacities: np.ndarray  # (S,) linear alpha

    def __len__(self) -> int:
        return len(self.centers)


@dataclass
class AnimFrame:
    """One skinned timestep: per-Gaussian center + covariance."""

    timestamp: float
    centers: np.ndarray  # (N, 3)
    covariances: np.ndarray  # (N, 6)
    alive_mask: np.ndarray = None  # (N,) bool
    spawned: SpawnedGaussians | None = None

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64).reshape(-1, 3)
        self.covariances = np.asarray(self.covariances, dtype=np.float64).reshape(-1, 6)
        if self.alive_mask is None:
            self.alive_mask = np.ones(len(self.centers), dtype=bool)
        else:
            self.alive_mask = np.asarray(self.alive_mask, dtype=bool).reshape(-1)
        if not (len(self.centers) == len(self.covariances) == len(self.alive_mask)):
            raise LengthMismatchError("frame arrays must share the base Gaussian count")


@dataclass
class AnimSequence:
    frames: list[AnimFrame]
    fps: float
    base: GaussianSet | None = None

    def __post_init__(self):
        if len(self.frames) < 1:
            raise LengthMismatchError("a sequence needs at least one frame")
        if not self.fps > 0:
            raise LengthMismatchError("fps must be > 0")
        ts = [f.timestamp for f in self.frames]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise LengthMismatchError("frame timestamps must strictly increase")


# ----- PLY ------------------------------------------------------------------


def load_ply(path) -> GaussianSet:
    """Read a binary little-endian 3DGS PLY.

    Scales stay log, opacity stays a logit, quaternions stay raw (they are
    normalized on use). Missing f_rest_* coefficients are filled with zeros;
    unknown extra properties are skipped.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    end = data.find(b"end_header\n")
    if end < 0:
        raise UnsupportedFormatError("not a PLY file (no end_header)")
    header = data[:end].decode("ascii", errors="replace").splitlines()
    payload = data[end + len(b"end_header\n"):]

    if not header or header[0].strip() != "ply":
        raise UnsupportedFormatError("not a PLY file")
    fmt = next((ln for ln in header if ln.startswith("format ")), "")
    if "binary_little_endian" not in fmt:
        raise UnsupportedFormatError(f"unsupported PLY format: {fmt.strip() or 'missing'}")

    count = None
    props: list[tuple[str, str]] = []
    in_vertex = False
    for ln in header:
        parts = ln.strip().split()
        if not parts:
            continue
        if parts[0] == "element":
            in_vertex = parts[1] == "vertex"
            if in_vertex:
                count = int(parts[2])
        elif parts[0] == "property" and in_vertex:
            if parts[1] == "list":
                raise UnsupportedFormatError("list properties are not supported")
            props.append((parts[2], parts[1]))
    if count is None:
        raise PlySchemaError("missing required element: vertex")

    names = [n for n, _ in props]
    for need in _REQUIRED_PROPS:
        if need not in names:
            raise PlySchemaError(f"missing required property: {need}")

    dtype = np.dtype([(n, _PLY_TYPES.get(t, "<f4")) for n, t in props])
    expected = count * dtype.itemsize
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"payload holds {len(payload)} bytes, header declares {expected}"
        )
    rec = np.frombuffer(payload[:expected], dtype=dtype)

    centers = np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(np.float64)
    rotations = np.stack([rec[f"rot_{i}"] for i in range(4)], axis=1).astype(np.float64)
    log_scales = np.stack([rec[f"scale_{i}"] for i in range(3)], axis=1).astype(np.float64)
    opacity = rec["opacity"].astype(np.float64)
    colors = np.zeros((count, 48))
    for i in range(3):
        colors[:, i] = rec[f"f_dc_{i}"]
    for i in range(45):
        name = f"f_rest_{i}"
        if name in names:
            colors[:, 3 + i] = rec[name]
    return GaussianSet(
        centers=centers,
        rotations=rotations,
        log_scales=log_scales,
        opacity_logits=opacity,
        colors=colors,
    )


def save_ply(gaussians: GaussianSet, path) -> None:
    """Write the canonical 3DGS property layout as float32."""
    n = len(gaussians)
    names = _REQUIRED_PROPS[:6] + _REST_PROPS + _REQUIRED_PROPS[6:]
    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}"]
    header += [f"property float {name}" for name in names]
    header.append("end_header")

    rec = np.zeros(n, dtype=np.dtype([(name, "<f4") for name in names]))
    rec["x"], rec["y"], rec["z"] = gaussians.centers.T.astype(np.float32)
    for i in range(3):
        rec[f"f_dc_{i}"] = gaussians.colors[:, i]
        rec[f"scale_{i}"] = gaussians.log_scales[:, i]
    for i in range(45):
        rec[f"f_rest_{i}"] = gaussians.colors[:, 3 + i]
    rec["opacity"] = gaussians.opacity_logits
    for i in range(4):
        rec[f"rot_{i}"] = gaussians.rotations[:, i]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(rec.tobytes())


# ----- .gsanim ----------------------------------------------------------------


def _pack_frame(frame: AnimFrame) -> bytes:
    n = len(frame.centers)
    parts = [struct.pack("<f", frame.timestamp)]
    fixed = np.empty((n, 9), dtype="<f4")
    fixed[:, :3] = frame.centers
    fixed[:, 3:] = frame.covariances
    parts.append(fixed.tobytes())
    parts.append(np.packbits(frame.alive_mask, bitorder="little").tobytes())
    spawned = frame.spawned
    count = len(spawned) if spawned is not None else 0
    parts.append(struct.pack("<I", count))
    if count:
        for i in range(count):
            parts.append(struct.pack("<9f", *spawned.centers[i], *spawned.covariances[i]))
            parts.append(struct.pack("<3B", *(int(c) for c in spawned.colors_rgb[i])))
            parts.append(struct.pack("<f", float(spawned.opacities[i])))
    return b"".join(parts)


def frame_to_bytes(frame: AnimFrame) -> bytes:
    """One frame in the on-disk/wire layout (also used by the stream server)."""
    return _pack_frame(frame)


def write_anim(seq: AnimSequence, path) -> None:
    n = len(seq.frames[0].centers)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIIf", VERSION, n, len(seq.frames), seq.fps))
        for frame in seq.frames:
            if len(frame.centers) != n:
                raise LengthMismatchError("all frames must share the Gaussian count")
            fh.write(_pack_frame(frame))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, nbytes: int) -> bytes:
        if self.off + nbytes > len(self.data):
            raise LengthMismatchError("animation payload ends early")
        out = self.data[self.off:self.off + nbytes]
        self.off += nbytes
        return out


def frame_from_bytes(reader_or_bytes, gaussian_count: int) -> AnimFrame:
    r = reader_or_bytes if isinstance(reader_or_bytes, _Reader) else _Reader(reader_or_bytes)
    n = gaussian_count
    (timestamp,) = struct.unpack("<f", r.take(4))
    fixed = np.frombuffer(r.take(36 * n), dtype="<f4").reshape(n, 9)
    alive_bytes = np.frombuffer(r.take((n + 7) // 8), dtype=np.uint8)
    alive = np.unpackbits(alive_bytes, bitorder="little")[:n].astype(bool)
    (spawn_count,) = struct.unpack("<I", r.take(4))
    spawned = None
    if spawn_count:
        centers = np.empty((spawn_count, 3))
        covs = np.empty((spawn_count, 6))
        rgb = np.empty((spawn_count, 3), dtype=np.uint8)
        alpha = np.empty(spawn_count, dtype=np.float64)
        for i in range(spawn_count):
            vals = struct.unpack("<9f", r.take(36))
            centers[i] = vals[:3]
            covs[i] = vals[3:]
            rgb[i] = struct.unpack("<3B", r.take(3))
            (alpha[i],) = struct.unpack("<f", r.take(4))
        spawned = SpawnedGaussians(centers=centers, covariances=covs,
                                   colors_rgb=rgb, opacities=alpha)
    return AnimFrame(
        timestamp=float(timestamp),
        centers=fixed[:, :3].astype(np.float64),
        covariances=fixed[:, 3:].astype(np.float64),
        alive_mask=alive,
        spawned=spawned,
    )


def read_anim(path) -> AnimSequence:
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise MagicMismatchError("not a .gsanim file (bad magic)")
    version, n, frame_count, fps = struct.unpack("<IIIf", r.take(16))
    if version != VERSION:
        raise VersionMismatchError(f"unsupported .gsanim version {version}")
    frames = [frame_from_bytes(r, n) for _ in range(frame_count)]
    if r.off != len(data):
        raise LengthMismatchError("trailing bytes after the declared frames")
    return AnimSequence(frames=frames, fps=float(fps))


# ----- preview rendering ------------------------------------------------------


@dataclass
class Camera:
    """Pinhole camera: rotation/translation map world points into camera space."""

    rotation: np.ndarray  # (3, 3) world -> camera
    translation: np.ndarray  # (3,)
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    @classmethod
    def look_at(cls, eye, target, up=(0.0, 0.0, 1.0), fov_deg=60.0,
                width=512, height=512) -> "Camera":
        eye = np.asarray(eye, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        fwd = target - eye
        fwd = fwd / np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(up, dtype=np.float64))
        right = right / np.linalg.norm(right)
        down = np.cross(fwd, right)
        rot = np.stack([right, down, fwd])  # +z looks forward, +y down
        f = 0.5 * width / np.tan(0.5 * np.deg2rad(fov_deg))
        return cls(rotation=rot, translation=-rot @ eye, fx=f, fy=f,
                   cx=width / 2.0, cy=height / 2.0, width=width, height=height)


def render_preview(frame: AnimFrame, base: GaussianSet, camera: Camera,
                   background=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Depth-sorted splat rendering to an (H, W, 3) uint8 image.

    DC color and sigmoid opacity only; ellipses from the projected 2x2
    covariance truncated at 3 sigma. Good for headless checks, not a
    reference renderer.
    """
    centers = frame.centers[frame.alive_mask]
    covs6 = frame.covariances[frame.alive_mask]
    colors = base.dc_rgb()[frame.alive_mask]
    alphas = base.opacities()[frame.alive_mask]
    if frame.spawned is not None and len(frame.spawned):
        centers = np.concatenate([centers, frame.spawned.centers])
        covs6 = np.concatenate([covs6, frame.spawned.covariances])
        colors = np.concatenate([colors, frame.spawned.colors_rgb / 255.0])
        alphas = np.concatenate([alphas, frame.spawned.opacities])

    h, w = camera.height, camera.width
    img = np.empty((h, w, 3), dtype=np.float64)
    img[...] = np.asarray(background, dtype=np.float64)
    if len(centers) == 0:
        return (np.clip(img, 0, 1) * 255.0 + 0.5).astype(np.uint8)

    cam = centers @ camera.rotation.T + camera.translation[None, :]
    visible = cam[:, 2] > 1e-2
    cam = cam[visible]
    covs = sym_unpack(covs6[visible])
    colors = colors[visible]
    alphas = alphas[visible]
    if len(cam) == 0:
        return (np.clip(img, 0, 1) * 255.0 + 0.5).astype(np.uint8)

    x, y, z = cam[:, 0], cam[:, 1], cam[:, 2]
    px = camera.fx * x / z + camera.cx
    py = camera.fy * y / z + camera.cy

    jac = np.zeros((len(cam), 2, 3))
    jac[:, 0, 0] = camera.fx / z
    jac[:, 0, 2] = -camera.fx * x / z**2
    jac[:, 1, 1] = camera.fy / z
    jac[:, 1, 2] = -camera.fy * y / z**2
    cov_cam = camera.rotation[None] @ covs @ camera.rotation.T[None]
    cov2 = jac @ cov_cam @ np.transpose(jac, (0, 2, 1))
    cov2[:, 0, 0] += 0.1  # screen-space blur floor, keeps tiny splats visible
    cov2[:, 1, 1] += 0.1

    order = np.argsort(-z, kind="stable")  # far to near, painter's order
    for i in order:
        a, b, c = cov2[i, 0, 0], cov2[i, 0, 1], cov2[i, 1, 1]
        det = a * c - b * b
        if det <= 1e-12:
            continue
        rx = 3.0 * np.sqrt(a)
        ry = 3.0 * np.sqrt(c)
        x0 = max(int(np.floor(px[i] - rx)), 0)
        x1 = min(int(np.ceil(px[i] + rx)) + 1, w)
        y0 = max(int(np.floor(py[i] - ry)), 0)
        y1 = min(int(np.ceil(py[i] + ry)) + 1, h)
        if x0 >= x1 or y0 >= y1:
            continue
        xs = np.arange(x0, x1) + 0.5 - px[i]
        ys = np.arange(y0, y1) + 0.5 - py[i]
        gx, gy = np.meshgrid(xs, ys)
        inv_a, inv_b, inv_c = c / det, -b / det, a / det
        q = inv_a * gx * gx + 2.0 * inv_b * gx * gy + inv_c * gy * gy
        alpha_px = alphas[i] * np.exp(-0.5 * q)
        alpha_px = np.where(q <= 9.0, np.minimum(alpha_px, 0.99), 0.0)
        patch = img[y0:y1, x0:x1]
        patch *= (1.0 - alpha_px)[..., None]
        patch += alpha_px[..., None] * colors[i][None, None, :]
    return (np.clip(img, 0, 1) * 255.0 + 0.5).astype(np.uint8)
