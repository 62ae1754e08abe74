"""Sparse low-order positivity-preserving residual.

Residuals follow ``m du/dt + r = 0``.  The volume term uses the skew part of the sparse
operators ``QL`` with central fluxes and graph viscosity ``lambda_ij (u_j - u_i)``; the
interface term is a central flux with penalty ``lambda^B (u^+ - u)``.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from esdgpos.scheme import physics
from esdgpos.scheme.mesh import Mesh, wall_flux
from esdgpos.scheme.physics import GasParams
from esdgpos.scheme.settings import SchemeConfig
from esdgpos.scheme.viscous import EntropyRate, ViscousAux, entropy_rate, viscous_aux

logger = logging.getLogger(__name__)


@dataclass
class BarState:
    ubar: np.ndarray
    parents: Optional[tuple] = None


@dataclass
class LowResidual:
    r: np.ndarray  # (nvar, K, Np)
    lam: np.ndarray  # (K, Np) per-node viscosity sum
    dt_max: float
    lam_pairs: np.ndarray  # (K, P)
    lam_face: np.ndarray  # (K, Nfp)
    pair_flux: Optional[np.ndarray] = None  # (nvar, K, P) contribution to node i of pair (i, j)


@dataclass
class BarDecompositionReport:
    max_error: float
    element: int
    node: int
    coefficient_sum_error: float
    min_coefficient: float


def _unit(n):
    norm = np.sqrt((n ** 2).sum(axis=0))
    safe = np.where(norm > 0, norm, 1.0)
    return n / safe, norm


def graph_viscosity(u_i, u_j, sigma_i, sigma_j, n_ij, gas: GasParams,
                    entropy_stable=True, safety=1.0):
    """``lambda_ij = max(beta_i, beta_j) |n_ij|``; with ``entropy_stable`` the Davis
    wavespeed also enters the max."""
    nhat, norm = _unit(n_ij)
    lam = np.maximum(physics.zhang_beta(u_i, sigma_i, nhat, gas),
                     physics.zhang_beta(u_j, sigma_j, nhat, gas))
    if entropy_stable:
        lam = np.maximum(lam, safety * physics.davis_wavespeed(u_i, u_j, nhat, gas))
    return np.where(norm > 0, lam * norm, 0.0)


def bar_state(uL, uR, sigmaL, sigmaR, n, gas: GasParams, coef=None):
    """Intermediate state of a two-point Lax-Friedrichs update along scaled normal ``n``.

    ``coef`` is ``lambda / |n|``; it defaults to the larger of the two positivity
    coefficients.
    """
    nhat, norm = _unit(n)
    if coef is None:
        coef = np.maximum(physics.zhang_beta(uL, sigmaL, nhat, gas),
                          physics.zhang_beta(uR, sigmaR, nhat, gas))
    GL = physics.euler_flux(uL, gas) - sigmaL
    GR = physics.euler_flux(uR, gas) - sigmaR
    dflux = ((GR - GL) * nhat[:, None]).sum(axis=0)
    return BarState(ubar=0.5 * (uL + uR) - dflux / (2 * coef))


def low_interface_flux(uM, uP, sigmaM, sigmaP, mesh: Mesh, gas: GasParams, config: SchemeConfig):
    """Central interface flux with positivity penalty.

    Returns ``(flux, lam_face)``, both per face node; ``flux`` already carries the
    ``w^f sJ`` weight.
    """
    n = mesh.nx
    wsJ = mesh.wsJ
    GM = physics.euler_flux(uM, gas) - sigmaM
    GP = physics.euler_flux(uP, gas) - sigmaP
    central = 0.5 * wsJ * ((GM + GP) * n[:, None]).sum(axis=0)
    beta = np.maximum(physics.zhang_beta(uM, sigmaM, n, gas), physics.zhang_beta(uP, sigmaP, n, gas))
    if config.entropy_stable_viscosity:
        beta = np.maximum(beta, config.wavespeed_safety * physics.davis_wavespeed(uM, uP, n, gas))
    lam_face = 0.5 * wsJ * beta
    flux = central - lam_face * (uP - uM)
    walls = mesh.wall_mask(config.wall_riemann)
    if np.any(walls):
        sigma_n = (0.5 * (sigmaM + sigmaP) * n[:, None]).sum(axis=0)
        exact = wsJ * (wall_flux(uM[:, walls], n[:, walls], gas) - sigma_n[:, walls])
        flux[:, walls] = exact
        lam_face[walls] = 0.0
    return flux, lam_face


def low_residual(u, t, mesh: Mesh, gas: GasParams, aux: Optional[ViscousAux] = None,
                 config: Optional[SchemeConfig] = None, pairs='low', keep_pairs=False) -> LowResidual:
    """Low-order residual, per-node viscosity sums and the positivity time step
    ``min m_i / (2 lambda_i)``.

    ``pairs='union'`` evaluates on the union of the high- and low-order sparsity, which
    the convex limiter needs together with ``keep_pairs``.
    """
    config = config or SchemeConfig()
    if aux is None:
        aux = viscous_aux(u, t, mesh, gas)
    sigma = aux.sigma
    I, Jn = mesh.skew_pairs(pairs)
    n_pairs = 0.5 * mesh.pair_coef(pairs, 'QL')
    scatter = mesh.pair_scatter(pairs)
    K = mesh.K
    nvar = u.shape[0]

    r = np.zeros_like(u)
    lam = np.zeros((K, mesh.Np))
    lam_pairs = np.zeros((K, len(I)))
    pair_flux = np.zeros((nvar, K, len(I))) if keep_pairs else None
    G = physics.euler_flux(u, gas) - sigma
    for sl in config.element_chunks(K, len(I)):
        ui, uj = u[:, sl][:, :, I], u[:, sl][:, :, Jn]
        si, sj = sigma[:, :, sl][..., I], sigma[:, :, sl][..., Jn]
        nij = n_pairs[:, sl]
        lij = graph_viscosity(ui, uj, si, sj, nij, gas, config.entropy_stable_viscosity,
                              config.wavespeed_safety)
        Gsum = G[:, :, sl][..., I] + G[:, :, sl][..., Jn]
        flux = (nij[:, None] * Gsum).sum(axis=0) - lij * (uj - ui)
        r[:, sl] += flux @ scatter
        lam[sl] += lij @ np.abs(scatter)
        lam_pairs[sl] = lij
        if keep_pairs:
            pair_flux[:, sl] = flux

    face_flux, lam_face = low_interface_flux(aux.uM, aux.uP, aux.sigmaM, aux.sigmaP, mesh, gas, config)
    E = mesh.refops.E
    r += face_flux @ E
    lam += lam_face @ E
    with np.errstate(divide='ignore'):
        dt_nodes = np.where(lam > 0, mesh.m / (2 * lam), np.inf)
    dt_max = float(dt_nodes.min())
    return LowResidual(r=r, lam=lam, dt_max=dt_max, lam_pairs=lam_pairs, lam_face=lam_face,
                       pair_flux=pair_flux)


def check_bar_decomposition(u, dt, t, mesh: Mesh, gas: GasParams, config: Optional[SchemeConfig] = None,
                            tol=1e-11) -> BarDecompositionReport:
    """Compare the forward-Euler low-order update with its bar-state convex combination.

    Faces closed by the exact wall-Riemann flux carry no bar state, so the comparison is
    meant for runs with ``wall_riemann`` off.
    """
    config = config or SchemeConfig()
    aux = viscous_aux(u, t, mesh, gas)
    low = low_residual(u, t, mesh, gas, aux=aux, config=config)
    m = mesh.m
    update = u - dt / m * low.r

    I, Jn = mesh.skew_pairs('low')
    n_pairs = 0.5 * mesh.pair_coef('low', 'QL')
    sigma = aux.sigma
    ui, uj = u[:, :, I], u[:, :, Jn]
    si, sj = sigma[..., I], sigma[..., Jn]
    lij = low.lam_pairs
    active = lij > 0
    safe = np.where(active, lij, 1.0)
    norm = np.sqrt((n_pairs ** 2).sum(axis=0))
    coef = safe / np.where(norm > 0, norm, 1.0)
    bar_ij = bar_state(ui, uj, si, sj, n_pairs, gas, coef=coef).ubar
    bar_ji = bar_state(uj, ui, sj, si, -n_pairs, gas, coef=coef).ubar

    weight = np.where(active, 2 * dt * lij, 0.0)
    combo = u * (1 - 2 * dt * low.lam / m)
    scatter_i = (mesh.pair_scatter('low') > 0).astype(float)
    scatter_j = (mesh.pair_scatter('low') < 0).astype(float)
    combo += ((weight * bar_ij) @ scatter_i + (weight * bar_ji) @ scatter_j) / m

    nB = 0.5 * mesh.wsJ * mesh.nx
    lamB = low.lam_face
    activeB = lamB > 0
    normB = np.sqrt((nB ** 2).sum(axis=0))
    coefB = np.where(activeB, lamB, 1.0) / np.where(normB > 0, normB, 1.0)
    barB = bar_state(aux.uM, aux.uP, aux.sigmaM, aux.sigmaP, nB, gas, coef=coefB).ubar
    combo += (np.where(activeB, 2 * dt * lamB, 0.0) * barB) @ mesh.refops.E / m

    scale = np.maximum(np.abs(update), 1.0)
    err = np.abs(update - combo) / scale
    worst = np.unravel_index(np.argmax(err.max(axis=0)), err.shape[1:])
    coef_sum = (1 - 2 * dt * low.lam / m) + (weight @ np.abs(mesh.pair_scatter('low'))
                                               + np.where(activeB, 2 * dt * lamB, 0.0) @ mesh.refops.E) / m
    report = BarDecompositionReport(max_error=float(err.max()), element=int(worst[0]), node=int(worst[1]),
                                    coefficient_sum_error=float(np.abs(coef_sum - 1).max()),
                                    min_coefficient=float((1 - 2 * dt * low.lam / m).min()))
    if report.max_error > tol:
        logger.warning('bar-state decomposition mismatch %.3e at element %d node %d',
                       report.max_error, report.element, report.node)
    return report


def entropy_rate_low(u, t, mesh: Mesh, gas: GasParams, config: Optional[SchemeConfig] = None) -> EntropyRate:
    aux = viscous_aux(u, t, mesh, gas)
    return entropy_rate(low_residual(u, t, mesh, gas, aux=aux, config=config).r, aux, mesh)
