"""High-order entropy-stable residual.

The inviscid volume term is evaluated by flux differencing in skew form,
``((Q - Q^T) o F_S) 1`` with the entropy-conservative two-point flux, and the viscous
term by the same skew form with the central average of ``sigma``.  Unlimited runs use the
entropy-conservative interface flux with Lax-Friedrichs dissipation sized by the Davis
wavespeed; limited runs use the low-order Lax-Friedrichs interface flux, so that both
schemes differ only inside elements and any blend of them stays conservative.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from esdgpos.scheme import physics
from esdgpos.scheme.mesh import Mesh, wall_flux
from esdgpos.scheme.physics import GasParams
from esdgpos.scheme.rhs_low import low_interface_flux
from esdgpos.scheme.settings import SchemeConfig
from esdgpos.scheme.viscous import EntropyRate, ViscousAux, entropy_rate, ldg_gradients, viscous_aux

__all__ = ['HighResidual', 'high_residual', 'high_interface_flux', 'ldg_gradients', 'entropy_rate_high']

logger = logging.getLogger(__name__)


@dataclass
class HighResidual:
    r: np.ndarray  # (nvar, K, Np)
    theta: np.ndarray
    sigma: np.ndarray
    pair_flux: Optional[np.ndarray] = None  # (nvar, K, P)


def high_interface_flux(uM, uP, sigmaM, sigmaP, mesh: Mesh, gas: GasParams, config: SchemeConfig,
                        dissipation=True):
    """Entropy-conservative interface flux with optional Lax-Friedrichs dissipation,
    weighted by ``w^f sJ``."""
    n = mesh.nx
    wsJ = mesh.wsJ
    fS = physics.ec_flux(uM, uP, gas)
    sigma_avg = 0.5 * (sigmaM + sigmaP)
    flux = wsJ * ((fS - sigma_avg) * n[:, None]).sum(axis=0)
    if dissipation:
        lam = physics.davis_wavespeed(uM, uP, n, gas)
        flux -= 0.5 * wsJ * lam * (uP - uM)
    walls = mesh.wall_mask(config.wall_riemann)
    if np.any(walls):
        sigma_n = (sigma_avg * n[:, None]).sum(axis=0)
        flux[:, walls] = wsJ[walls] * (wall_flux(uM[:, walls], n[:, walls], gas) - sigma_n[:, walls])
    return flux


def high_residual(u, t, mesh: Mesh, gas: GasParams, aux: Optional[ViscousAux] = None,
                  config: Optional[SchemeConfig] = None, pairs='high', keep_pairs=False,
                  dissipation=True) -> HighResidual:
    """High-order residual ``r^H`` for ``m du/dt + r^H = 0``.

    With ``config.interface == 'low'`` (every limited mode) the interface term is the
    low-order one.  ``dissipation=False`` switches to the entropy-conservative interface
    flux without penalty, which leaves a purely entropy-conservative scheme on periodic
    Euler problems.
    """
    config = config or SchemeConfig()
    if aux is None:
        aux = viscous_aux(u, t, mesh, gas)
    sigma = aux.sigma
    I, Jn = mesh.skew_pairs(pairs)
    coef = mesh.pair_coef(pairs, 'Q')
    scatter = mesh.pair_scatter(pairs)
    viscous = not gas.inviscid

    r = np.zeros_like(u)
    pair_flux = np.zeros((u.shape[0], mesh.K, len(I))) if keep_pairs else None
    for sl in config.element_chunks(mesh.K, len(I)):
        ui, uj = u[:, sl][:, :, I], u[:, sl][:, :, Jn]
        F = physics.ec_flux(ui, uj, gas)
        if viscous:
            F -= 0.5 * (sigma[:, :, sl][..., I] + sigma[:, :, sl][..., Jn])
        flux = (coef[:, sl][:, None] * F).sum(axis=0)
        r[:, sl] += flux @ scatter
        if keep_pairs:
            pair_flux[:, sl] = flux

    if config.interface == 'low' and dissipation:
        face_flux, _ = low_interface_flux(aux.uM, aux.uP, aux.sigmaM, aux.sigmaP, mesh, gas, config)
    else:
        face_flux = high_interface_flux(aux.uM, aux.uP, aux.sigmaM, aux.sigmaP, mesh, gas, config,
                                        dissipation=dissipation)
    r += face_flux @ mesh.refops.E
    return HighResidual(r=r, theta=aux.theta, sigma=sigma, pair_flux=pair_flux)


def entropy_rate_high(u, t, mesh: Mesh, gas: GasParams, config: Optional[SchemeConfig] = None,
                      dissipation=True) -> EntropyRate:
    aux = viscous_aux(u, t, mesh, gas)
    res = high_residual(u, t, mesh, gas, aux=aux, config=config, dissipation=dissipation)
    return entropy_rate(res.r, aux, mesh)
