import numpy as np
import pytest

from splatsim.gscore import GaussianSet


def make_cube_scene(n=400, size=0.3, seed=0, lift=0.0):
    """Synthetic scene: a cube-shaped cloud of Gaussians sitting on z=lift."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, size, size=(n, 3))
    centers[:, 2] += lift
    rotations = rng.normal(size=(n, 4))
    log_scales = rng.uniform(np.log(0.005), np.log(0.02), size=(n, 3))
    opacity = rng.uniform(1.0, 3.0, size=n)
    colors = np.zeros((n, 48))
    colors[:, :3] = rng.uniform(-1.0, 1.0, size=(n, 3))
    return GaussianSet(
        centers=centers,
        rotations=rotations,
        log_scales=log_scales,
        opacity_logits=opacity,
        colors=colors,
    )


@pytest.fixture
def cube_scene():
    return make_cube_scene()
