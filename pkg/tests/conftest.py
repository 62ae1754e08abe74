import numpy as np
import pytest

from esdgpos.scheme import physics
from esdgpos.scheme.mesh import uniform_interval, uniform_quad, uniform_tri
from esdgpos.scheme.physics import GasParams
from esdgpos.scheme.sbp import reference_ops


@pytest.fixture
def gas():
    return GasParams(gamma=1.4)


@pytest.fixture
def viscous_gas():
    return GasParams(gamma=1.4, Re=100.0, Pr=0.72, mu=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def random_states(rng, shape, dim, gas, rho=(0.5, 2.0), speed=1.0, p=(0.5, 2.0)):
    """Admissible conservative states shaped ``(dim + 2,) + shape``."""
    r = rng.uniform(*rho, size=shape)
    vel = rng.uniform(-speed, speed, size=(dim,) + shape)
    pr = rng.uniform(*p, size=shape)
    return physics.prim_to_cons(r, vel, pr, gas)


def smooth_state(mesh, gas, amplitude=0.2):
    """Periodic density/velocity wave, admissible and far from vacuum."""
    x = mesh.x
    wave = np.ones(x.shape[1:])
    for d, (lo, hi) in enumerate(mesh.domain):
        wave = wave * np.sin(2 * np.pi * (x[d] - lo) / (hi - lo))
    rho = 1.0 + amplitude * wave
    vel = np.stack([0.5 + 0.1 * wave] + [np.full(wave.shape, -0.3)] * (mesh.dim - 1))
    p = 1.0 + 0.5 * amplitude * np.cos(2 * np.pi * (x[0] - mesh.domain[0][0]) / (mesh.domain[0][1] - mesh.domain[0][0]))
    return physics.prim_to_cons(rho, vel, p, gas)


@pytest.fixture
def periodic_interval():
    return uniform_interval(6, 0.0, 1.0, reference_ops('interval', 3), periodic=True)


@pytest.fixture
def periodic_quad():
    return uniform_quad(3, 3, ((0.0, 1.0), (0.0, 1.0)), reference_ops('quad', 2), periodic=(True, True))


@pytest.fixture
def periodic_tri():
    return uniform_tri(2, 2, ((0.0, 1.0), (0.0, 1.0)), reference_ops('tri', 2), periodic=(True, True))


@pytest.fixture(params=['interval', 'quad', 'tri'])
def periodic_mesh(request, periodic_interval, periodic_quad, periodic_tri):
    return {'interval': periodic_interval, 'quad': periodic_quad, 'tri': periodic_tri}[request.param]


@pytest.fixture
def make_states(rng):
    def make(shape, dim, gas, **kwargs):
        return random_states(rng, shape, dim, gas, **kwargs)
    return make


@pytest.fixture
def make_smooth():
    return smooth_state
