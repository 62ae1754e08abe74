"""Face traces, LDG gradients of the entropy variables and viscous fluxes.

One pass per stage feeds both residuals: the exterior states, the gradients ``theta``
and the viscous fluxes ``sigma`` (with their face traces) are computed here once.
"""
from dataclasses import dataclass

import numpy as np

from esdgpos.scheme import physics
from esdgpos.scheme.mesh import Mesh
from esdgpos.scheme.physics import GasParams


@dataclass
class ViscousAux:
    v: np.ndarray  # (nvar, K, Np) entropy variables
    theta: np.ndarray  # (dim, nvar, K, Np)
    sigma: np.ndarray  # (dim, nvar, K, Np)
    uM: np.ndarray  # (nvar, K, Nfp)
    uP: np.ndarray
    sigmaM: np.ndarray  # (dim, nvar, K, Nfp)
    sigmaP: np.ndarray


def ldg_gradients(v, vP, mesh: Mesh):
    """Gradients ``M theta_b = Q_b v + E^T B_b (v* - v^-)`` with ``v* = (v^- + v^+)/2``.

    Equivalent to the skew form ``1/2 (Q_b - Q_b^T) v + 1/2 E^T B_b v^+``.
    """
    ops = mesh.refops
    Qv = np.einsum('aij,vkj->avki', ops.Q, v)
    theta = np.einsum('abk,avki->bvki', mesh.geometric, Qv)
    vM = mesh.face_values(v)
    jump = 0.5 * (vP - vM)
    surface = mesh.wsJ[None, None] * mesh.nx[:, None] * jump[None]
    theta += surface @ ops.E
    return theta / mesh.m


def viscous_aux(u, t, mesh: Mesh, gas: GasParams, step=None) -> ViscousAux:
    """Exterior traces plus ``theta`` and ``sigma``; ``sigma`` is zero for Euler."""
    physics.check_admissible(u, 'state entering the residual', step=step)
    uM = mesh.face_values(u)
    uP = mesh.exterior_traces(uM, t, gas)
    physics.check_admissible(uP, 'exterior trace', step=step)
    dim = mesh.dim
    shape = (dim,) + u.shape
    if gas.inviscid:
        zeros = np.zeros(shape)
        zerosF = np.zeros((dim,) + uM.shape)
        return ViscousAux(v=physics.entropy_vars(u, gas, check=False), theta=zeros, sigma=zeros,
                          uM=uM, uP=uP, sigmaM=zerosF, sigmaP=zerosF)
    v = physics.entropy_vars(u, gas, check=False)
    vP = physics.entropy_vars(uP, gas, check=False)
    theta = ldg_gradients(v, vP, mesh)
    sigma = physics.viscous_sigma(v, theta, gas)
    sigmaM = mesh.face_values(sigma)
    return ViscousAux(v=v, theta=theta, sigma=sigma, uM=uM, uP=uP,
                      sigmaM=sigmaM, sigmaP=mesh.exterior_sigma(sigmaM))


def viscous_dissipation(aux: ViscousAux, mesh: Mesh):
    """``sum_i m_i theta_i . sigma_i``, nonnegative since ``sigma = K theta``."""
    return float(np.sum(mesh.m * np.sum(aux.theta * aux.sigma, axis=(0, 1))))


@dataclass
class EntropyRate:
    rate: float  # v^T M du/dt, in scaled entropy units
    dissipation: float  # sum_i m_i theta_i . sigma_i
    scale: float

    @property
    def excess(self):
        """Zero or negative for an entropy-stable residual on a closed domain."""
        return self.rate + self.dissipation


def entropy_rate(r, aux: ViscousAux, mesh: Mesh) -> EntropyRate:
    vr = np.sum(aux.v * r, axis=0)
    scale = float(np.sum(np.abs(aux.v) * np.abs(r))) + 1e-300
    return EntropyRate(rate=-float(vr.sum()), dissipation=viscous_dissipation(aux, mesh), scale=scale)
