"""Pointwise ideal-gas dynamics.

Conservative states are arrays whose leading axis holds ``(rho, rho*u[, rho*v], E)``;
every function broadcasts over the trailing axes.  The dimension is inferred from the
number of variables (``dim = nvar - 2``).  Entropy variables are scaled so that
``v_last = -1/e``; they are ``(gamma - 1)`` times the gradient of
``eta = -rho*s/(gamma - 1)``.
"""
import math
from dataclasses import dataclass

import numpy as np

from esdgpos.scheme.errors import ConfigError, InadmissibleStateError

VARIABLE_NAMES = {1: ('rho', 'rho_u', 'E'), 2: ('rho', 'rho_u', 'rho_v', 'E')}


@dataclass(frozen=True)
class GasParams:
    gamma: float = 1.4
    Re: float = math.inf
    Pr: float = 0.72
    mu: float = 1.0
    eps0: float = 1e-14

    def __post_init__(self):
        problems = []
        if not self.gamma > 1:
            problems.append(f'gamma must be > 1, got {self.gamma}')
        if not self.Re > 0:
            problems.append(f'Re must be > 0 (use inf for Euler), got {self.Re}')
        if not self.Pr > 0:
            problems.append(f'Pr must be > 0, got {self.Pr}')
        if self.mu < 0:
            problems.append(f'mu must be >= 0, got {self.mu}')
        if not self.eps0 > 0:
            problems.append(f'eps0 must be > 0, got {self.eps0}')
        if problems:
            raise ConfigError(problems)

    @property
    def inviscid(self):
        return math.isinf(self.Re) or self.mu == 0

    @property
    def mu_eff(self):
        return 0.0 if self.inviscid else self.mu / self.Re

    @property
    def kappa(self):
        # heat conduction acting on e, with T = e
        return self.gamma * self.mu_eff / self.Pr


def num_dims(u):
    return u.shape[0] - 2


def velocity(u):
    return u[1:-1] / u[0]


def rhoe(u):
    return u[-1] - 0.5 * (u[1:-1] ** 2).sum(axis=0) / u[0]


def pressure(u, gas: GasParams):
    return (gas.gamma - 1) * rhoe(u)


def sound_speed(u, gas: GasParams):
    return np.sqrt(gas.gamma * pressure(u, gas) / u[0])


def is_admissible(u):
    """Positive density and positive internal energy, checked separately."""
    with np.errstate(divide='ignore', invalid='ignore'):
        ok = (u[0] > 0) & (rhoe(u) > 0)
    return ok & np.all(np.isfinite(u), axis=0)


def check_admissible(u, what='state', step=None):
    """Raise :class:`InadmissibleStateError` at the first bad node of ``u``.

    For fields shaped ``(nvar, K, Np)`` the element and node are reported.
    """
    ok = is_admissible(u)
    if np.all(ok):
        return
    loc = np.unravel_index(np.argmin(ok), ok.shape)
    state = u[(slice(None),) + loc]
    if not np.all(np.isfinite(state)):
        variable, value = 'non-finite', state.tolist()
    elif state[0] <= 0:
        variable, value = 'rho', float(state[0])
    else:
        variable, value = 'rhoe', float(rhoe(state))
    element = int(loc[0]) if len(loc) >= 1 else None
    node = int(loc[1]) if len(loc) >= 2 else None
    raise InadmissibleStateError(f'inadmissible {what}', element=element, node=node,
                                 variable=variable, value=value, step=step)


def prim_to_cons(rho, vel, p, gas: GasParams):
    rho = np.asarray(rho, dtype=float)
    vel = np.asarray(vel, dtype=float)
    if vel.ndim == rho.ndim:
        vel = vel[None]
    E = p / (gas.gamma - 1) + 0.5 * rho * (vel ** 2).sum(axis=0)
    return np.concatenate([rho[None], rho * vel, np.asarray(E, dtype=float)[None]], axis=0)


def cons_to_prim(u, gas: GasParams):
    return u[0], velocity(u), pressure(u, gas)


def specific_entropy(u, gas: GasParams):
    return np.log(pressure(u, gas) / u[0] ** gas.gamma)


def math_entropy(u, gas: GasParams):
    return -u[0] * specific_entropy(u, gas) / (gas.gamma - 1)


def entropy_vars(u, gas: GasParams, check=True):
    if check:
        check_admissible(u, 'state for entropy variables')
    rho = u[0]
    vel = velocity(u)
    e = rhoe(u) / rho
    s = specific_entropy(u, gas)
    v = np.empty_like(u, dtype=float)
    v[0] = gas.gamma - s - 0.5 * (vel ** 2).sum(axis=0) / e
    v[1:-1] = vel / e
    v[-1] = -1.0 / e
    return v


def cons_from_entropy(v, gas: GasParams):
    g = gas.gamma
    e = -1.0 / v[-1]
    vel = v[1:-1] * e
    s = g - v[0] - 0.5 * (vel ** 2).sum(axis=0) / e
    rho = ((g - 1) * e * np.exp(-s)) ** (1.0 / (g - 1))
    return prim_to_cons(rho, vel, (g - 1) * rho * e, gas)


def entropy_potential(u, gas: GasParams):
    """Flux potential matching the scaled entropy variables, ``(gamma - 1) * rho * u_k``."""
    return (gas.gamma - 1) * u[1:-1]


def euler_flux(u, gas: GasParams):
    """Inviscid flux, shaped ``(dim, nvar, ...)``."""
    d = num_dims(u)
    vel = velocity(u)
    p = pressure(u, gas)
    f = np.empty((d,) + u.shape, dtype=float)
    for k in range(d):
        f[k] = u * vel[k]
        f[k, 1 + k] += p
        f[k, -1] += p * vel[k]
    return f


def log_mean(a, b):
    """Logarithmic mean with the series branch for nearly equal arguments."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError('log_mean needs positive arguments')
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    f = (hi - lo) / (hi + lo)
    zeta = f * f
    series = zeta < 1e-4
    with np.errstate(divide='ignore', invalid='ignore'):
        exact = np.log(hi / lo) / (2 * np.where(series, 1.0, f))
    F = np.where(series, 1 + zeta / 3 + zeta * zeta / 5 + zeta * zeta * zeta / 7, exact)
    return (lo + hi) / (2 * F)


def ec_flux(uL, uR, gas: GasParams):
    """Entropy-conservative, kinetic-energy-preserving two-point flux (all directions)."""
    g = gas.gamma
    d = num_dims(uL)
    rhoL, velL, pL = cons_to_prim(uL, gas)
    rhoR, velR, pR = cons_to_prim(uR, gas)
    betaL, betaR = 0.5 * rhoL / pL, 0.5 * rhoR / pR
    rho_log = log_mean(rhoL, rhoR)
    beta_log = log_mean(betaL, betaR)
    rho_avg = 0.5 * (rhoL + rhoR)
    vel_avg = 0.5 * (velL + velR)
    p_hat = rho_avg / (betaL + betaR)
    v2_avg = 0.5 * ((velL ** 2).sum(axis=0) + (velR ** 2).sum(axis=0))
    F = np.empty((d,) + np.broadcast(uL, uR).shape, dtype=float)
    for k in range(d):
        fr = rho_log * vel_avg[k]
        F[k, 0] = fr
        for a in range(d):
            F[k, 1 + a] = fr * vel_avg[a]
        F[k, 1 + k] += p_hat
        F[k, -1] = fr * (1 / (2 * (g - 1) * beta_log) - 0.5 * v2_avg)
        for a in range(d):
            F[k, -1] += vel_avg[a] * F[k, 1 + a]
    return F


def davis_wavespeed(uL, uR, n, gas: GasParams):
    """``max(|u_L.n| + c_L, |u_R.n| + c_R)`` for unit ``n`` shaped ``(dim, ...)``."""
    lamL = np.abs((velocity(uL) * n).sum(axis=0)) + sound_speed(uL, gas)
    lamR = np.abs((velocity(uR) * n).sum(axis=0)) + sound_speed(uR, gas)
    return np.maximum(lamL, lamR)


def zhang_beta(u, sigma, n, gas: GasParams):
    """Smallest viscosity keeping ``beta*u +- (f(u) - sigma).n`` admissible, plus eps0.

    ``sigma`` is shaped ``(dim, nvar, ...)`` and ``n`` is a unit vector ``(dim, ...)``.
    """
    d = num_dims(u)
    rho = u[0]
    vel = velocity(u)
    re = rhoe(u)
    p = (gas.gamma - 1) * re
    n_tau = np.stack([sum(n[k] * sigma[k, 1 + a] for k in range(d)) for a in range(d)])
    q = np.stack([sum(vel[a] * sigma[k, 1 + a] for a in range(d)) - sigma[k, -1] for k in range(d)])
    qn = (q * n).sum(axis=0)
    stress = ((n_tau - p * n) ** 2).sum(axis=0)
    root = np.sqrt(rho ** 2 * qn ** 2 + 2 * rho * re * stress)
    return gas.eps0 + np.abs((vel * n).sum(axis=0)) + (root + rho * np.abs(qn)) / (2 * rho * re)


def viscous_sigma(v, theta, gas: GasParams):
    """Viscous fluxes ``sigma_k = sum_j K_kj theta_j`` evaluated from primitive gradients.

    ``v`` are entropy variables and ``theta`` their gradients, shaped ``(dim, nvar, ...)``.
    Returns an array of the same shape as ``theta``; the mass component is zero.
    """
    d = v.shape[0] - 2
    sigma = np.zeros_like(theta, dtype=float)
    if gas.inviscid:
        return sigma
    e = -1.0 / v[-1]
    vel = v[1:-1] * e
    grad_e = e ** 2 * theta[:, -1]  # (dim, ...)
    grad_u = e * (theta[:, 1:-1] + vel[None] * theta[:, -1][:, None])  # [k, a] = d_k u_a
    div = sum(grad_u[a, a] for a in range(d))
    mu = gas.mu_eff
    for k in range(d):
        for a in range(d):
            tau_ka = mu * (grad_u[k, a] + grad_u[a, k])
            if a == k:
                tau_ka = tau_ka - 2.0 / 3.0 * mu * div
            sigma[k, 1 + a] = tau_ka
            sigma[k, -1] += tau_ka * vel[a]
        sigma[k, -1] += gas.kappa * grad_e[k]
    return sigma


def wall_riemann_pressure(u, n, gas: GasParams):
    """Exact pressure behind a reflective wall for the normal velocity ``u.n``.

    Compressive states (``u.n > 0``) take the two-shock solution, expanding states the
    two-rarefaction solution (clipped at vacuum).
    """
    g = gas.gamma
    rho = u[0]
    p = pressure(u, gas)
    un = (velocity(u) * n).sum(axis=0)
    A = 2.0 / ((g + 1) * rho)
    B = (g - 1) / (g + 1) * p
    shock = p + un / (2 * A) * (un + np.sqrt(un ** 2 + 4 * A * (p + B)))
    c = np.sqrt(g * p / rho)
    base = np.maximum(1 + 0.5 * (g - 1) * un / c, 0.0)
    rarefaction = p * base ** (2 * g / (g - 1))
    return np.where(un > 0, shock, rarefaction)
