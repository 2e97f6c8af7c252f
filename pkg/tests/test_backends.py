"""Compiled vs pure-numpy kernel agreement on short runs of every solver path."""

import numpy as np
import pytest

from splatsim import proxy
from splatsim.sim import ExternalForce, Material, Simulation, WorldConfig
from splatsim.sim.backend import get_kernels

try:
    get_kernels("compiled")
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

pytestmark = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels unavailable")

CUBE = np.array(
    [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]],
    dtype=float,
)


def run(backend, materials, regions=None, frames=6):
    hull = proxy.build_hull(CUBE * 0.3)
    seed = proxy.sample_particles(hull, 0.045, rng_seed=5)
    if regions is not None:
        seed = proxy.assign_regions(seed, regions)
    seed.initial_offset = np.array([0.0, 0.0, 0.15])
    sim = Simulation(seed, materials, WorldConfig(fps=30, grid_resolution=40), backend=backend)
    sim.apply_user_push(ExternalForce(kind="impulse", direction=[1, 0, 0.3], magnitude=0.02))
    for _ in range(frames):
        sim.step()
    return sim.state


@pytest.mark.parametrize("kind", ["elastic", "fluid"])
def test_single_material_agreement(kind):
    a = run("compiled", [Material(kind=kind)])
    b = run("python", [Material(kind=kind)])
    assert np.allclose(a.positions, b.positions, atol=1e-9)
    assert np.allclose(a.velocities, b.velocities, atol=1e-8)
    assert np.allclose(a.deformation_gradients, b.deformation_gradients, atol=1e-9)


def test_coupled_rigid_elastic_agreement():
    regions = [
        proxy.RegionSpec(proxy.HalfSpacePredicate(axis=2, greater=True, value=0.15), "top"),
        proxy.RegionSpec(proxy.AllPredicate(), "bottom"),
    ]
    mats = [Material(kind="elastic"), Material(kind="rigid", restitution=0.0)]
    a = run("compiled", mats, regions=regions)
    b = run("python", mats, regions=regions)
    assert np.allclose(a.positions, b.positions, atol=1e-8)
