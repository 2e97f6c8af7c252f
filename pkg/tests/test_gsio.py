import numpy as np
import pytest

from splatsim import gsio
from splatsim.errors import (
    LengthMismatchError,
    MagicMismatchError,
    PlySchemaError,
    TruncatedPayloadError,
    UnsupportedFormatError,
    VersionMismatchError,
)
from splatsim.gscore import GaussianSet, covariance_from_params, sym_unpack

from conftest import make_cube_scene


def make_single_gaussian():
    return GaussianSet(
        centers=np.zeros((1, 3)),
        rotations=np.array([[1.0, 0.0, 0.0, 0.0]]),
        log_scales=np.zeros((1, 3)),
        opacity_logits=np.array([2.0]),
        colors=np.zeros((1, 48)),
    )


class TestPly:
    def test_single_identity_gaussian(self, tmp_path):
        path = tmp_path / "one.ply"
        gsio.save_ply(make_single_gaussian(), path)
        loaded = gsio.load_ply(path)
        assert len(loaded) == 1
        cov = sym_unpack(covariance_from_params(loaded.rotations[0], loaded.log_scales[0]))
        assert np.allclose(cov, np.eye(3), atol=1e-12)

    def test_round_trip_field_exact(self, tmp_path):
        scene = make_cube_scene(n=100, seed=3)
        p1 = tmp_path / "a.ply"
        p2 = tmp_path / "b.ply"
        gsio.save_ply(scene, p1)
        loaded = gsio.load_ply(p1)
        gsio.save_ply(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()
        # values survive the f32 cast both directions
        assert np.array_equal(loaded.centers, scene.centers.astype(np.float32))
        assert np.array_equal(loaded.rotations, scene.rotations.astype(np.float32))
        assert np.array_equal(loaded.colors, scene.colors.astype(np.float32))

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "t.ply"
        gsio.save_ply(make_cube_scene(n=10), path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-17])
        with pytest.raises(TruncatedPayloadError):
            gsio.load_ply(path)

    def test_missing_property_named(self, tmp_path):
        path = tmp_path / "m.ply"
        header = (
            "ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
            "property float x\nproperty float y\nproperty float z\nend_header\n"
        )
        path.write_bytes(header.encode() + b"\x00" * 12)
        with pytest.raises(PlySchemaError) as err:
            gsio.load_ply(path)
        assert "f_dc_0" in str(err.value)

    def test_ascii_rejected(self, tmp_path):
        path = tmp_path / "a.ply"
        path.write_bytes(b"ply\nformat ascii 1.0\nelement vertex 0\nend_header\n")
        with pytest.raises(UnsupportedFormatError):
            gsio.load_ply(path)

    def test_extra_properties_skipped(self, tmp_path):
        scene = make_cube_scene(n=4)
        path = tmp_path / "x.ply"
        gsio.save_ply(scene, path)
        raw = path.read_bytes()
        # splice normals into the header and payload
        head, payload = raw.split(b"end_header\n", 1)
        head = head.decode().replace(
            "property float f_dc_0",
            "property float nx\nproperty float ny\nproperty float nz\nproperty float f_dc_0",
        )
        rec = np.frombuffer(payload, dtype="<f4").reshape(4, -1)
        spliced = np.concatenate([rec[:, :3], np.zeros((4, 3), "<f4"), rec[:, 3:]], axis=1)
        path.write_bytes(head.encode() + b"end_header\n" + spliced.astype("<f4").tobytes())
        loaded = gsio.load_ply(path)
        assert np.array_equal(loaded.centers, scene.centers.astype(np.float32))
        assert np.array_equal(loaded.colors, scene.colors.astype(np.float32))

    def test_empty_set_valid(self, tmp_path):
        scene = make_cube_scene(n=1)
        empty = GaussianSet(
            centers=np.zeros((0, 3)), rotations=np.zeros((0, 4)),
            log_scales=np.zeros((0, 3)), opacity_logits=np.zeros(0),
            colors=np.zeros((0, 48)), object_mask=np.zeros(0, dtype=np.int64),
        )
        path = tmp_path / "e.ply"
        gsio.save_ply(empty, path)
        assert len(gsio.load_ply(path)) == 0
        del scene

    def test_missing_f_rest_filled_with_zeros(self, tmp_path):
        path = tmp_path / "norest.ply"
        names = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
                 "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
        header = "ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
        header += "".join(f"property float {n}\n" for n in names) + "end_header\n"
        vals = np.arange(14, dtype="<f4")
        path.write_bytes(header.encode() + vals.tobytes())
        loaded = gsio.load_ply(path)
        assert np.all(loaded.colors[:, 3:] == 0.0)
        assert loaded.colors[0, 1] == 4.0


def random_sequence(n_gaussians=7, n_frames=3, seed=0, with_spawned=True):
    rng = np.random.default_rng(seed)
    frames = []
    for k in range(n_frames):
        spawned = None
        if with_spawned and k % 2 == 1:
            s = rng.integers(1, 4)
            spawned = gsio.SpawnedGaussians(
                centers=rng.normal(size=(s, 3)).astype(np.float32).astype(np.float64),
                covariances=rng.uniform(0.1, 1, size=(s, 6)).astype(np.float32).astype(np.float64),
                colors_rgb=rng.integers(0, 256, size=(s, 3)).astype(np.uint8),
                opacities=rng.uniform(0, 1, size=s).astype(np.float32).astype(np.float64),
            )
        frames.append(gsio.AnimFrame(
            timestamp=k / 30.0,
            centers=rng.normal(size=(n_gaussians, 3)).astype(np.float32).astype(np.float64),
            covariances=rng.uniform(0.1, 1, size=(n_gaussians, 6)).astype(np.float32).astype(np.float64),
            alive_mask=rng.uniform(size=n_gaussians) > 0.2,
            spawned=spawned,
        ))
    return gsio.AnimSequence(frames=frames, fps=30.0)


class TestGsAnim:
    def test_identity_round_trip(self, tmp_path):
        seq = random_sequence(n_frames=2, with_spawned=False)
        path = tmp_path / "a.gsanim"
        gsio.write_anim(seq, path)
        back = gsio.read_anim(path)
        assert len(back.frames) == 2
        assert back.fps == 30.0
        for f1, f2 in zip(seq.frames, back.frames):
            assert np.array_equal(f1.centers, f2.centers)
            assert np.array_equal(f1.covariances, f2.covariances)
            assert np.array_equal(f1.alive_mask, f2.alive_mask)

    def test_bit_exact_round_trip_120_frames(self, tmp_path):
        seq = random_sequence(n_gaussians=33, n_frames=120, seed=9)
        p1 = tmp_path / "a.gsanim"
        p2 = tmp_path / "b.gsanim"
        gsio.write_anim(seq, p1)
        gsio.write_anim(gsio.read_anim(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_magic_mismatch(self, tmp_path):
        path = tmp_path / "bad.gsanim"
        gsio.write_anim(random_sequence(), path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(MagicMismatchError):
            gsio.read_anim(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "v.gsanim"
        gsio.write_anim(random_sequence(), path)
        raw = bytearray(path.read_bytes())
        raw[4] = 99
        path.write_bytes(bytes(raw))
        with pytest.raises(VersionMismatchError):
            gsio.read_anim(path)

    def test_length_mismatch(self, tmp_path):
        path = tmp_path / "l.gsanim"
        gsio.write_anim(random_sequence(), path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-5])
        with pytest.raises(LengthMismatchError):
            gsio.read_anim(path)

    def test_timestamps_must_increase(self):
        seq = random_sequence(n_frames=3)
        seq.frames[2].timestamp = seq.frames[1].timestamp
        with pytest.raises(LengthMismatchError):
            gsio.AnimSequence(frames=seq.frames, fps=30.0)


class TestRenderPreview:
    def _camera(self):
        return gsio.Camera.look_at(eye=(0, -2.0, 0.5), target=(0, 0, 0.0),
                                   width=96, height=96)

    def test_empty_frame_background_only(self):
        scene = make_cube_scene(n=3)
        frame = gsio.AnimFrame(
            timestamp=0.0,
            centers=scene.centers,
            covariances=np.tile([1e-4, 0, 0, 1e-4, 0, 1e-4], (3, 1)),
            alive_mask=np.zeros(3, dtype=bool),
        )
        img = gsio.render_preview(frame, scene, self._camera())
        assert img.shape == (96, 96, 3)
        assert np.all(img == 0)

    def test_single_centered_gaussian_hits_center(self):
        scene = GaussianSet(
            centers=np.zeros((1, 3)),
            rotations=np.array([[1.0, 0, 0, 0]]),
            log_scales=np.full((1, 3), np.log(0.05)),
            opacity_logits=np.array([8.0]),
            colors=np.tile([1.0, 1.0, 1.0], (1, 16)),
        )
        frame = gsio.AnimFrame(
            timestamp=0.0,
            centers=scene.centers,
            covariances=np.array([[0.05**2, 0, 0, 0.05**2, 0, 0.05**2]]),
        )
        cam = gsio.Camera.look_at(eye=(0, -1.0, 0.0), target=(0, 0, 0), width=96, height=96)
        img = gsio.render_preview(frame, scene, cam)
        assert img[48, 48].sum() > 0

    def test_deterministic(self, cube_scene):
        covs = np.tile([1e-3, 0, 0, 1e-3, 0, 1e-3], (len(cube_scene), 1))
        frame = gsio.AnimFrame(timestamp=0.0, centers=cube_scene.centers, covariances=covs)
        cam = self._camera()
        img1 = gsio.render_preview(frame, cube_scene, cam)
        img2 = gsio.render_preview(frame, cube_scene, cam)
        assert np.array_equal(img1, img2)
