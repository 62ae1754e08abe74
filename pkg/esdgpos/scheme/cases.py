"""Benchmark problems: initial data, boundary tags, exact solutions and error norms."""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from esdgpos.scheme import physics
from esdgpos.scheme.errors import ConfigError, ExactSolutionError
from esdgpos.scheme.mesh import BoundaryTag, Mesh, uniform_interval, uniform_quad, uniform_tri
from esdgpos.scheme.physics import GasParams
from esdgpos.scheme.sbp import reference_ops

logger = logging.getLogger(__name__)


@dataclass
class CaseSpec:
    """A benchmark problem.

    ``initial(x, h)`` returns conservative states at points ``x`` shaped ``(dim, ...)``;
    ``h`` is the mesh size, which some problems use to size their data.  ``exact(x, t)``
    is optional.  ``bc`` maps domain sides to boundary tags (or to callables of a face
    centroid returning a tag); periodic directions need no entry.  ``grid(K)`` returns
    the element counts per direction.
    """
    name: str
    dim: int
    domain: Tuple[Tuple[float, float], ...]
    gas: GasParams
    initial: Callable
    t_final: float
    cfl: float
    bc: Dict[str, object] = field(default_factory=dict)
    periodic: Tuple[bool, ...] = ()
    exact: Optional[Callable] = None
    grid: Callable = None
    cfl_by_elem: Dict[str, float] = field(default_factory=dict)
    description: str = ''

    def __post_init__(self):
        if not self.periodic:
            self.periodic = (False,) * self.dim
        if self.grid is None:
            self.grid = (lambda K: (K,)) if self.dim == 1 else (lambda K: (K, K))

    @property
    def has_exact(self):
        return self.exact is not None

    def recommended_cfl(self, elem):
        return self.cfl_by_elem.get(elem, self.cfl)

    def build_mesh(self, elem, N, K, alpha=None, beta=None, counts=None) -> Mesh:
        """Uniform mesh of ``self.grid(K)`` elements, or of explicit per-direction ``counts``."""
        if (self.dim == 1) != (elem == 'interval'):
            raise ConfigError(f'case {self.name!r} is {self.dim}D, element type {elem!r} does not fit')
        refops = reference_ops(elem, N, alpha, beta)
        counts = counts or self.grid(K)
        if self.dim == 1:
            (a, b), = self.domain
            return uniform_interval(counts[0], a, b, refops, bc=self.bc, periodic=self.periodic[0])
        build = uniform_quad if elem == 'quad' else uniform_tri
        return build(counts[0], counts[1], self.domain, refops, bc=self.bc, periodic=self.periodic)

    def initial_field(self, mesh: Mesh):
        u = self.initial(mesh.x, mesh.h)
        physics.check_admissible(u, f'{self.name} initial condition')
        return u

    def exact_field(self, x, t):
        if self.exact is None:
            raise ExactSolutionError(f'case {self.name!r} has no exact solution')
        return self.exact(x, t)


def _constant(state):
    state = np.asarray(state, dtype=float)

    def fn(x, t):
        return state.reshape((-1,) + (1,) * (x.ndim - 1)) * np.ones(x.shape[1:])
    return fn


def _piecewise(mask, left, right):
    left = np.asarray(left, dtype=float).reshape((-1,) + (1,) * mask.ndim)
    right = np.asarray(right, dtype=float).reshape((-1,) + (1,) * mask.ndim)
    return np.where(mask[None], left, right)


def _with_dim(prim, dim):
    """``(rho, u, p)`` primitive triples padded with zero transverse velocity."""
    rho, vel, p = prim
    vel = np.concatenate([np.atleast_1d(vel), np.zeros(dim - 1)])
    return rho, vel, p


def _cons(prim, gas, dim):
    rho, vel, p = _with_dim(prim, dim)
    return physics.prim_to_cons(np.float64(rho), vel, p, gas)


# ---------------------------------------------------------------------------
# Leblanc shock tube

LEBLANC_X0 = 0.33
LEBLANC_STAR = {
    'rho_star_L': 5.40793353493162e-2,
    'rho_star_R': 3.99999806043000e-3,
    'p_star': 0.515577927650970e-3,
    'v_star': 0.621838671391735,
    'lambda_1': 0.495784895188979,
    'lambda_3': 0.829118362533470,
}


def leblanc() -> CaseSpec:
    gas = GasParams(gamma=5.0 / 3.0)
    g = gas.gamma
    primL = (1.0, 0.0, (g - 1) * 1e-1)
    primR = (1e-3, 0.0, (g - 1) * 1e-10)
    uL, uR = _cons(primL, gas, 1), _cons(primR, gas, 1)
    s = LEBLANC_STAR

    def exact(x, t):
        x = x[0]
        if t <= 0:
            return _piecewise(x < LEBLANC_X0, uL, uR)
        xi = (x - LEBLANC_X0) / t
        fan = 0.75 - 0.75 * xi
        rho = np.select([xi <= -1 / 3, xi <= s['lambda_1'], xi <= s['v_star'], xi <= s['lambda_3']],
                        [primL[0], fan ** 3, s['rho_star_L'], s['rho_star_R']], primR[0])
        v = np.select([xi <= -1 / 3, xi <= s['lambda_1'], xi <= s['lambda_3']],
                      [0.0, 0.75 * (1 / 3 + xi), s['v_star']], 0.0)
        p = np.select([xi <= -1 / 3, xi <= s['lambda_1'], xi <= s['lambda_3']],
                      [primL[2], fan ** 5 / 15, s['p_star']], primR[2])
        return physics.prim_to_cons(rho, v, p, gas)

    return CaseSpec(
        name='leblanc', dim=1, domain=((0.0, 1.0),), gas=gas,
        initial=lambda x, h: exact(x, 0.0), exact=exact, t_final=2.0 / 3.0, cfl=0.5,
        bc={'left': BoundaryTag.dirichlet(_constant(uL), 'left state'),
            'right': BoundaryTag.dirichlet(_constant(uR), 'right state')},
        description='Leblanc shock tube with the exact self-similar solution')


# ---------------------------------------------------------------------------
# viscous shock

def viscous_shock_velocity(xi, gamma, kappa, m0=1.0, uL=1.0, uR=None, mach=3.0, iters=80):
    """Velocity profile ``u(xi)`` from its implicit definition, by vectorized bisection."""
    if not mach > 1:
        raise ConfigError(f'viscous shock needs mach > 1, got {mach}')
    if uR is None:
        uR = (gamma - 1 + 2 / mach ** 2) / (gamma + 1)

    def position(u):
        return viscous_shock_position(u, gamma, kappa, m0=m0, uL=uL, uR=uR)

    xi = np.asarray(xi, dtype=float)
    lo = np.full(xi.shape, uR)
    hi = np.full(xi.shape, uL)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        # position decreases with u
        right = position(mid) > xi
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)
    return 0.5 * (lo + hi)


def viscous_shock_position(u, gamma, kappa, m0=1.0, uL=1.0, uR=None, mach=3.0):
    """Position at which the stationary profile takes velocity ``u`` in ``(uR, uL)``."""
    if uR is None:
        uR = (gamma - 1 + 2 / mach ** 2) / (gamma + 1)
    u0 = math.sqrt(uL * uR)
    coef = 2 * kappa / ((gamma + 1) * m0)
    with np.errstate(divide='ignore', invalid='ignore'):
        return coef * (uL / (uL - uR) * np.log((uL - u) / (uL - u0))
                       - uR / (uL - uR) * np.log((u - uR) / (u0 - uR)))


def viscous_shock(mach=3.0, mu=0.01, u_inf=0.2, dim=1, m0=1.0, uL=1.0) -> CaseSpec:
    gas = GasParams(gamma=1.4, Re=1.0, Pr=0.75, mu=mu)
    g = gas.gamma
    uR = (g - 1 + 2 / mach ** 2) / (g + 1)
    u0 = math.sqrt(uL * uR)

    def exact(x, t):
        xi = x[0] - u_inf * t
        vel = viscous_shock_velocity(xi, g, gas.kappa, m0=m0, uL=uL, uR=uR, mach=mach)
        rho = m0 / vel
        e = ((g + 1) / (g - 1) * u0 ** 2 - vel ** 2) / (2 * g)
        out = np.zeros((dim + 2,) + xi.shape)
        out[0] = rho
        out[1] = rho * (u_inf + vel)
        out[-1] = rho * (e + 0.5 * (u_inf + vel) ** 2)
        return out

    boundary = BoundaryTag.dirichlet(exact, 'exact')
    if dim == 1:
        return CaseSpec(name='viscous_shock', dim=1, domain=((-1.0, 1.5),), gas=gas,
                        initial=lambda x, h: exact(x, 0.0), exact=exact, t_final=1.0, cfl=0.5,
                        bc={'left': boundary, 'right': boundary},
                        description=f'translating viscous shock, M0={mach}')
    return CaseSpec(name='viscous_shock_2d', dim=2, domain=((-1.0, 1.5), (0.0, 1.25)), gas=gas,
                    initial=lambda x, h: exact(x, 0.0), exact=exact, t_final=1.0, cfl=0.75,
                    bc={'left': boundary, 'right': boundary}, periodic=(False, True),
                    grid=lambda K: (2 * K, K),
                    description=f'viscous shock extruded in y, M0={mach}')


# ---------------------------------------------------------------------------
# sine-shock interaction

def sine_shock() -> CaseSpec:
    gas = GasParams(gamma=1.4)
    primL = (3.857143, 2.629369, 10.3333)
    uL = _cons(primL, gas, 1)

    def initial(x, h):
        x = x[0]
        right = physics.prim_to_cons(1 + 0.2 * np.sin(5 * x), np.zeros_like(x), np.ones_like(x), gas)
        return np.where((x < -4.0)[None], uL.reshape(-1, *([1] * x.ndim)), right)

    return CaseSpec(name='sine_shock', dim=1, domain=((-5.0, 5.0),), gas=gas, initial=initial,
                    t_final=1.8, cfl=0.5,
                    bc={'left': BoundaryTag.dirichlet(_constant(uL), 'post-shock state'),
                        'right': BoundaryTag.outflow()},
                    description='Mach 3 shock running into a sinusoidal density field')


# ---------------------------------------------------------------------------
# isentropic vortex

VORTEX_CENTER = (9.0, 5.0)


def vortex_min_density(beta, gamma=1.4):
    return (1 - (gamma - 1) * beta ** 2 * math.e ** 2 / (16 * gamma * math.pi ** 2)) ** (1 / (gamma - 1))


def isentropic_vortex(beta=8.5) -> CaseSpec:
    gas = GasParams(gamma=1.4)
    g = gas.gamma
    x0, y0 = VORTEX_CENTER
    if not 1 - (g - 1) * beta ** 2 * math.e ** 2 / (16 * g * math.pi ** 2) > 0:
        raise ConfigError(f'vortex strength {beta} gives a vacuum core')

    def exact(x, t):
        dx = x[0] - x0 - t
        dy = x[1] - y0
        bump = np.exp(1 - dx ** 2 - dy ** 2)
        rho = (1 - (g - 1) * beta ** 2 * bump ** 2 / (16 * g * math.pi ** 2)) ** (1 / (g - 1))
        vel = np.stack([1 - beta / (2 * math.pi) * bump * dy, beta / (2 * math.pi) * bump * dx])
        return physics.prim_to_cons(rho, vel, rho ** g, gas)

    return CaseSpec(name='isentropic_vortex', dim=2, domain=((0.0, 20.0), (0.0, 10.0)), gas=gas,
                    initial=lambda x, h: exact(x, 0.0), exact=exact, t_final=2.0, cfl=0.9,
                    cfl_by_elem={'tri': 0.5}, periodic=(True, True), grid=lambda K: (2 * K, K),
                    description=f'isentropic vortex, beta={beta}')


# ---------------------------------------------------------------------------
# Sedov blast

SEDOV_P_AMBIENT = 1e-5


def sedov(E0=1.0, r0_cells=4.0) -> CaseSpec:
    """Sedov blast with the energy deposited inside ``r0 = r0_cells * h``."""
    gas = GasParams(gamma=1.4)
    g = gas.gamma

    def initial(x, h):
        r0 = r0_cells * h
        r = np.sqrt(x[0] ** 2 + x[1] ** 2)
        p = np.where(r < r0, (g - 1) * E0 / (math.pi * r0 ** 2), SEDOV_P_AMBIENT)
        return physics.prim_to_cons(np.ones_like(r), np.zeros((2,) + r.shape), p, gas)

    return CaseSpec(name='sedov', dim=2, domain=((-1.5, 1.5), (-1.5, 1.5)), gas=gas, initial=initial,
                    t_final=1.0, cfl=0.5, periodic=(True, True),
                    description='Sedov blast wave into a near-vacuum ambient state')


# ---------------------------------------------------------------------------
# double Mach reflection

def dmr() -> CaseSpec:
    gas = GasParams(gamma=1.4)
    sqrt3 = math.sqrt(3.0)
    angle = math.pi / 6
    uL = physics.prim_to_cons(np.float64(8.0), np.array([8.25 * math.cos(angle), -8.25 * math.sin(angle)]),
                              116.5, gas)
    uR = physics.prim_to_cons(np.float64(1.4), np.zeros(2), 1.0, gas)

    def initial(x, h):
        return _piecewise(x[1] - sqrt3 * x[0] + sqrt3 / 6 > 0, uL, uR)

    def shock_top(t):
        return (1 + sqrt3 / 6) / sqrt3 + 10 * t / math.cos(angle)

    def top_state(x, t):
        return _piecewise(x[0] <= shock_top(t), uL, uR)

    inflow = BoundaryTag.dirichlet(_constant(uL), 'post-shock state')
    wall = BoundaryTag.wall()

    def bottom(centroid):
        return inflow if centroid[0] < 1.0 / 6.0 else wall

    return CaseSpec(name='dmr', dim=2, domain=((0.0, 3.5), (0.0, 1.0)), gas=gas, initial=initial,
                    t_final=0.2, cfl=0.5,
                    bc={'left': inflow, 'right': BoundaryTag.dirichlet(_constant(uR), 'pre-shock state'),
                        'bottom': bottom, 'top': BoundaryTag.dirichlet(top_state, 'moving shock')},
                    grid=lambda K: (int(round(3.5 * K)), K),
                    description='double Mach reflection off a wedge')


# ---------------------------------------------------------------------------
# Daru-Tenaud shock tube

def daru_tenaud(Re=1000.0) -> CaseSpec:
    gas = GasParams(gamma=1.4, Re=Re, Pr=0.73, mu=1.0)
    g = gas.gamma
    uL = physics.prim_to_cons(np.float64(120.0), np.zeros(2), 120.0 / g, gas)
    uR = physics.prim_to_cons(np.float64(1.2), np.zeros(2), 1.2 / g, gas)
    noslip = BoundaryTag.noslip()
    return CaseSpec(name='daru_tenaud', dim=2, domain=((0.0, 1.0), (0.0, 0.5)), gas=gas,
                    initial=lambda x, h: _piecewise(x[0] > 0.5, uL, uR), t_final=1.0, cfl=0.5,
                    bc={'left': noslip, 'right': noslip, 'bottom': noslip, 'top': BoundaryTag.wall()},
                    grid=lambda K: (2 * K, K),
                    description=f'viscous shock tube with boundary layers, Re={Re}')


CASES = {
    'leblanc': leblanc,
    'viscous_shock': viscous_shock,
    'viscous_shock_2d': lambda **kw: viscous_shock(dim=2, **kw),
    'sine_shock': sine_shock,
    'isentropic_vortex': isentropic_vortex,
    'sedov': sedov,
    'dmr': dmr,
    'daru_tenaud': daru_tenaud,
}


def get_case(name, **params) -> CaseSpec:
    if name not in CASES:
        raise ConfigError(f'unknown case {name!r}, expected one of {sorted(CASES)}')
    try:
        return CASES[name](**params)
    except TypeError as exc:
        raise ConfigError(f'bad parameters for case {name!r}: {exc}') from exc


def list_cases():
    return [(name, get_case(name)) for name in CASES]


# ---------------------------------------------------------------------------
# post-processing

def error_norms(u_num, case: CaseSpec, mesh: Mesh, t, p=1):
    """Relative ``L^p`` errors per conservative variable, and their sum under ``'relative_sum'``.

    Variables whose exact solution has zero norm (a transverse momentum that vanishes)
    have no relative error; their absolute error is reported and they are left out of
    ``'relative_sum'``, which therefore runs over the variables with a nonzero exact norm.
    """
    u_ex = case.exact_field(mesh.x, t)
    names = physics.VARIABLE_NAMES[mesh.dim]
    m = mesh.m
    out = {}
    total = 0.0
    for i, name in enumerate(names):
        diff = np.abs(u_num[i] - u_ex[i])
        ref = np.abs(u_ex[i])
        if p == np.inf:
            num, den = diff.max(), ref.max()
        else:
            num = np.sum(m * diff ** p) ** (1.0 / p)
            den = np.sum(m * ref ** p) ** (1.0 / p)
        if den > 0:
            out[name] = float(num / den)
            total += out[name]
        else:
            out[name] = float(num)
    out['relative_sum'] = total
    return out


def gradient(f, mesh: Mesh):
    """Elementwise high-order gradient of a nodal scalar, ``(dim, K, Np)``."""
    Dr = np.einsum('aij,kj->aki', mesh.refops.D, f)
    return np.einsum('abk,aki->bki', mesh.drdx, Dr)


def schlieren(rho, mesh: Mesh):
    """``exp(-10 (g - g_min) / (g_max - g_min))`` with ``g = |grad rho|``; ones for flat fields."""
    g = np.sqrt((gradient(rho, mesh) ** 2).sum(axis=0))
    gmin, gmax = g.min(), g.max()
    if not gmax > gmin:
        return np.ones_like(rho)
    return np.exp(-10.0 * (g - gmin) / (gmax - gmin))
