"""Blending of low- and high-order updates.

Every mode works on the forward-Euler updates ``u^L = u - dt/m r^L`` and
``u^H = u - dt/m r^H`` of one stage.  Blending parameters come from :func:`solve_l`, the
largest ``l`` in ``[0, 1]`` keeping ``u^L + l P`` above positive density and internal
energy floors.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from esdgpos.scheme.errors import LimiterBoundsError
from esdgpos.scheme.mesh import Mesh
from esdgpos.scheme.physics import GasParams, pressure, rhoe
from esdgpos.scheme.settings import SchemeConfig

logger = logging.getLogger(__name__)

# logistic blending of the modal indicator
SHOCK_SHARPNESS = 9.21024
SHOCK_ALPHA_MIN = 0.001
SHOCK_ALPHA_MAX = 0.5

_GUARD = 1e-12


@dataclass
class Bounds:
    rho_min: np.ndarray
    rhoe_min: np.ndarray


@dataclass
class LimiterReport:
    l_elem: np.ndarray  # (K,)
    min_rho: np.ndarray  # (K,) after limiting
    min_rhoe: np.ndarray
    shock_xi: Optional[np.ndarray] = None  # (K,)
    l_pairs: Optional[np.ndarray] = None  # (K, P), convex mode only

    @property
    def limited_fraction(self):
        return float(np.mean(self.l_elem < 1))

    @property
    def l_min(self):
        return float(self.l_elem.min()) if self.l_elem.size else 1.0


def compute_bounds(uL, config: SchemeConfig) -> Bounds:
    """Generalized floors ``zeta * rho(u^L)``, ``zeta * rhoe(u^L)`` or the minimal ``eps0``."""
    rho = uL[0]
    re = rhoe(uL)
    if np.any(rho <= 0) or np.any(re <= 0) or not np.all(np.isfinite(uL)):
        bad = np.unravel_index(np.argmin(np.minimum(rho, re)), rho.shape)
        raise LimiterBoundsError(f'low-order update is not admissible at {tuple(int(b) for b in bad)}')
    if config.bounds == 'minimal':
        floor = np.full(rho.shape, config.eps0)
        return Bounds(rho_min=floor, rhoe_min=floor.copy())
    return Bounds(rho_min=config.zeta * rho, rhoe_min=config.zeta * re)


def _check_feasible(uL, bounds: Bounds):
    if np.any(uL[0] < bounds.rho_min) or np.any(rhoe(uL) < bounds.rhoe_min):
        raise LimiterBoundsError('low-order state violates its own bounds')


def solve_l(uL, P, bounds: Bounds, check=True):
    """Largest ``l`` in ``[0, 1]`` with ``rho(uL + l P) >= rho_min`` and
    ``rhoe(uL + l P) >= rhoe_min``.

    Vectorized over trailing axes.  The density constraint is linear in ``l``; the
    internal-energy constraint, multiplied by the density, is the quadratic
    ``a l^2 + b l + c >= 0`` whose smallest positive root bounds ``l``.
    """
    if check:
        _check_feasible(uL, bounds)
    rhoL, rhoP = uL[0], P[0]
    with np.errstate(divide='ignore', invalid='ignore'):
        l_rho = np.where(rhoP < 0, (rhoL - bounds.rho_min) / np.where(rhoP < 0, -rhoP, 1.0), 1.0)
    l_rho = np.clip(l_rho, 0.0, 1.0)

    mL, mP = uL[1:-1], P[1:-1]
    EL, EP = uL[-1], P[-1]
    emin = bounds.rhoe_min
    a = rhoP * EP - 0.5 * (mP ** 2).sum(axis=0)
    b = rhoL * EP + rhoP * EL - (mL * mP).sum(axis=0) - rhoP * emin
    c = rhoL * (rhoe(uL) - emin)
    scale = np.maximum(np.abs(a) + np.abs(b) + np.abs(c), 1e-300)

    l_e = np.ones_like(c)
    linear = np.abs(a) < 1e-12 * scale
    with np.errstate(divide='ignore', invalid='ignore'):
        lin_root = np.where(b < 0, -c / np.where(b < 0, b, -1.0), np.inf)
        disc = b * b - 4 * a * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        q = -0.5 * (b + np.where(b >= 0, sq, -sq))
        r1 = np.where(a != 0, q / np.where(a != 0, a, 1.0), np.inf)
        r2 = np.where(q != 0, c / np.where(q != 0, q, 1.0), np.inf)
    r1 = np.where(r1 > 0, r1, np.inf)
    r2 = np.where(r2 > 0, r2, np.inf)
    quad_root = np.where(disc < 0, np.inf, np.minimum(r1, r2))
    root = np.where(linear, lin_root, quad_root)
    l_e = np.minimum(l_e, root)
    # active floor with the constraint decreasing
    tight = (c <= 0) & ((b < 0) | ((b == 0) & (a < 0)))
    l_e = np.where(tight, 0.0, l_e)
    l_e = np.clip(l_e, 0.0, 1.0)

    l = np.minimum(l_rho, l_e)
    return np.where(l < 1, l * (1 - _GUARD), 1.0)


def shock_indicator(u, mesh: Mesh, gas: GasParams):
    """Per-element blending value ``xi`` in ``[1 - SHOCK_ALPHA_MAX, 1]``.

    The modal energy of ``rho * p`` in the top polynomial degree (and in the one below,
    relative to the modes up to it) drives a logistic blending function.
    """
    ops = mesh.refops
    N = ops.N
    q = u[0] * pressure(u, gas)
    coeffs = q @ ops.modal.T
    energy = coeffs ** 2
    deg = ops.mode_degree
    total = np.maximum(energy.sum(axis=1), 1e-300)
    E = energy[:, deg == N].sum(axis=1) / total
    if N >= 2:
        below = np.maximum(energy[:, deg <= N - 1].sum(axis=1), 1e-300)
        E = np.maximum(E, energy[:, deg == N - 1].sum(axis=1) / below)
    threshold = 0.5 * 10 ** (-1.8 * (N + 1) ** 0.25)
    with np.errstate(over='ignore'):
        alpha = 1.0 / (1.0 + np.exp(-SHOCK_SHARPNESS / threshold * (E - threshold)))
    alpha = np.where(alpha < SHOCK_ALPHA_MIN, 0.0, np.minimum(alpha, SHOCK_ALPHA_MAX))
    return 1.0 - alpha


def _report(u, l_elem, xi=None, l_pairs=None):
    return LimiterReport(l_elem=l_elem, min_rho=u[0].min(axis=1), min_rhoe=rhoe(u).min(axis=1),
                         shock_xi=xi, l_pairs=l_pairs)


def zhang_shu_limit(uL_new, rL, rH, dt, mesh: Mesh, config: SchemeConfig, xi=None):
    """Elementwise blend ``u = u^L + l^e dt/m (r^L - r^H)`` with one ``l^e`` per element."""
    P = dt / mesh.m * (rL - rH)
    bounds = compute_bounds(uL_new, config)
    l_elem = solve_l(uL_new, P, bounds).min(axis=1)
    if xi is not None:
        l_elem = np.minimum(l_elem, xi)
    u = uL_new + l_elem[None, :, None] * P
    return u, _report(u, l_elem, xi)


def convex_limit(uL_new, pair_diff, dt, mesh: Mesh, config: SchemeConfig, xi=None):
    """Pairwise blend of antidiffusive fluxes.

    ``pair_diff[:, k, p]`` is ``F^L_ij - F^H_ij`` for the union pair ``p = (i, j)`` of
    element ``k``; both schemes must share their interface fluxes.  Each node splits its
    update evenly among its pairs and faces, and ``l_ij`` is the smaller of the two
    one-sided limits so that ``l_ij = l_ji``.
    """
    I, Jn = mesh.skew_pairs('union')
    scatter = mesh.pair_scatter('union')
    ops = mesh.refops
    card = np.abs(scatter).sum(axis=0) + np.bincount(ops.face_node, minlength=ops.Np)
    m = mesh.m
    bounds = compute_bounds(uL_new, config)
    scale_i = card[I][None] * dt / m[:, I]
    scale_j = card[Jn][None] * dt / m[:, Jn]
    li = solve_l(uL_new[:, :, I], scale_i * pair_diff,
                 Bounds(bounds.rho_min[:, I], bounds.rhoe_min[:, I]), check=False)
    lj = solve_l(uL_new[:, :, Jn], -scale_j * pair_diff,
                 Bounds(bounds.rho_min[:, Jn], bounds.rhoe_min[:, Jn]), check=False)
    l_pairs = np.minimum(li, lj)
    if xi is not None:
        l_pairs = np.minimum(l_pairs, xi[:, None])
    u = uL_new + dt / m * ((l_pairs * pair_diff) @ scatter)
    l_elem = l_pairs.min(axis=1) if l_pairs.shape[1] else np.ones(mesh.K)
    return u, _report(u, l_elem, xi, l_pairs)
