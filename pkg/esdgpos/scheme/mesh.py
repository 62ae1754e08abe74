"""Uniform affine meshes with face connectivity and boundary tags."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from esdgpos.scheme.errors import BoundaryConditionError, MeshError
from esdgpos.scheme.physics import GasParams, wall_riemann_pressure
from esdgpos.scheme.sbp import RefOps

logger = logging.getLogger(__name__)

BOUNDARY_KINDS = ('periodic', 'dirichlet', 'wall', 'noslip', 'outflow')

FACE_VERTICES = {
    'interval': [[0], [1]],
    'quad': [[0, 1], [1, 2], [2, 3], [3, 0]],
    'tri': [[0, 1], [1, 2], [2, 0]],
}
# local vertices giving the origin and the r, s edges of the affine map
MAP_VERTICES = {'interval': (0, 1), 'quad': (0, 1, 3), 'tri': (0, 1, 2)}


@dataclass
class BoundaryTag:
    kind: str
    state: Optional[Callable] = None
    name: str = ''

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise BoundaryConditionError(f'unknown boundary kind {self.kind!r}, expected one of {BOUNDARY_KINDS}')
        if self.kind == 'dirichlet' and self.state is None:
            raise BoundaryConditionError('dirichlet boundary needs a state function of (x, t)')
        if not self.name:
            self.name = self.kind

    @classmethod
    def dirichlet(cls, state, name=''):
        return cls('dirichlet', state, name)

    @classmethod
    def wall(cls):
        return cls('wall')

    @classmethod
    def noslip(cls):
        return cls('noslip')

    @classmethod
    def outflow(cls):
        return cls('outflow')


TagSpec = Union[BoundaryTag, Callable[[np.ndarray], BoundaryTag]]


@dataclass
class Mesh:
    elem: str
    refops: RefOps
    vertices: np.ndarray  # (nv, dim)
    EToV: np.ndarray  # (K, nverts)
    J: np.ndarray  # (K,)
    drdx: np.ndarray  # (dim, dim, K), drdx[a, b] = d r_a / d x_b
    x: np.ndarray  # (dim, K, Np)
    mapP: np.ndarray  # (K, Nfp) flat partner index into K*Np, -1 on boundaries
    bc: np.ndarray  # (K, Nfp) index into tags, -1 where a partner exists
    nx: np.ndarray  # (dim, K, Nfp) outward unit normals
    sJ: np.ndarray  # (K, Nfp)
    tags: List[BoundaryTag]
    domain: Tuple[Tuple[float, float], ...]
    periodic: Tuple[bool, ...]
    h: float
    _pairs: Dict[str, tuple] = field(default_factory=dict, repr=False)

    @property
    def dim(self):
        return self.x.shape[0]

    @property
    def K(self):
        return self.J.shape[0]

    @property
    def Np(self):
        return self.refops.Np

    @property
    def m(self):
        """Lumped mass ``J * w`` per node, shaped ``(K, Np)``."""
        return self.J[:, None] * self.refops.w[None, :]

    @property
    def wsJ(self):
        return self.refops.wf[None, :] * self.sJ

    @property
    def xf(self):
        return self.x[:, :, self.refops.face_node]

    @property
    def geometric(self):
        """``J * d r_a / d x_b``, shaped ``(dim, dim, K)``."""
        return self.J[None, None, :] * self.drdx

    def integrate(self, f):
        return np.sum(self.m * f, axis=(-2, -1))

    def face_values(self, u):
        return u[..., self.refops.face_node]

    def physical_operator(self, which='Q'):
        """Dense physical operators ``(dim, K, Np, Np)``; meant for small meshes and tests."""
        ref = getattr(self.refops, which)
        return np.einsum('abk,aij->bkij', self.geometric, ref)

    def skew_pairs(self, which='high'):
        """Node pairs ``i < j`` where a reference skew part is nonzero.

        ``which`` selects the high-order (dense), the low-order (sparse) or the union
        sparsity.  Returns ``(I, J)``.
        """
        key = ('pairs', which)
        if key not in self._pairs:
            ops = self.refops
            high = np.any(np.abs(ops.Q - np.swapaxes(ops.Q, 1, 2)) > 1e-14, axis=0)
            low = np.any(np.abs(ops.QL - np.swapaxes(ops.QL, 1, 2)) > 1e-14, axis=0)
            patterns = {'high': high, 'low': low, 'union': high | low}
            if which not in patterns:
                raise ValueError(f'unknown pair set {which!r}')
            self._pairs[key] = np.nonzero(np.triu(patterns[which], 1))
        return self._pairs[key]

    def pair_coef(self, which='high', op='Q'):
        """``coef[b, k, p] = (op_b - op_b^T)[I[p], J[p]]`` on element ``k``."""
        key = ('coef', which, op)
        if key not in self._pairs:
            I, Jn = self.skew_pairs(which)
            ref = getattr(self.refops, op)
            skew = ref[:, I, Jn] - ref[:, Jn, I]
            self._pairs[key] = np.einsum('abk,ap->bkp', self.geometric, skew)
        return self._pairs[key]

    def pair_scatter(self, which='high'):
        """``(P, Np)`` matrix sending a pair value to ``+i`` and ``-j``."""
        key = ('scatter', which)
        if key not in self._pairs:
            I, Jn = self.skew_pairs(which)
            G = np.zeros((len(I), self.Np))
            G[np.arange(len(I)), I] = 1.0
            G[np.arange(len(I)), Jn] = -1.0
            self._pairs[key] = G
        return self._pairs[key]

    def exterior_traces(self, uM, t, gas: GasParams):
        """Exterior values at every face node: partner values or boundary states."""
        nvar = uM.shape[0]
        uP = np.empty_like(uM)
        interior = self.mapP >= 0
        # partner face value = volume value at the partner node
        full = np.zeros((nvar, self.K, self.Np))
        full[:, :, self.refops.face_node] = uM
        flat = full.reshape(nvar, -1)
        uP[:, interior] = flat[:, self.mapP[interior]]
        for idx, tag in enumerate(self.tags):
            mask = self.bc == idx
            if np.any(mask):
                uP[:, mask] = exterior_state(uM[:, mask], self.xf[:, mask], self.nx[:, mask], t, tag, gas)
        return uP

    def exterior_sigma(self, sigmaM):
        """Exterior viscous-flux traces, ``(dim, nvar, K, Nfp)``."""
        d, nvar = sigmaM.shape[:2]
        sigmaP = np.empty_like(sigmaM)
        interior = self.mapP >= 0
        full = np.zeros((d, nvar, self.K, self.Np))
        full[:, :, :, self.refops.face_node] = sigmaM
        flat = full.reshape(d, nvar, -1)
        sigmaP[:, :, interior] = flat[:, :, self.mapP[interior]]
        for idx, tag in enumerate(self.tags):
            mask = self.bc == idx
            if np.any(mask):
                sigmaP[:, :, mask] = exterior_sigma(sigmaM[:, :, mask], tag)
        return sigmaP

    def wall_mask(self, wall_riemann):
        """Face nodes whose flux is replaced by the exact wall-Riemann pressure flux."""
        mask = np.zeros(self.bc.shape, dtype=bool)
        if not wall_riemann:
            return mask
        for idx, tag in enumerate(self.tags):
            if tag.kind == 'wall':
                mask |= self.bc == idx
        return mask


def exterior_state(interior, x, n, t, tag: BoundaryTag, gas: GasParams, partner=None):
    """Exterior state for boundary face nodes.

    ``interior`` is ``(nvar, nb)``, ``x`` and ``n`` are ``(dim, nb)``.  Periodic nodes
    take their ``partner`` value; walls mirror the normal momentum; no-slip walls negate
    the velocity and keep the total energy, which matches temperatures across the wall.
    """
    kind = tag.kind
    if kind == 'periodic':
        if partner is None:
            raise BoundaryConditionError('periodic exterior state needs the partner value')
        return np.array(partner, dtype=float)
    if kind == 'dirichlet':
        return np.asarray(tag.state(x, t), dtype=float) * np.ones_like(interior)
    if kind == 'outflow':
        return interior.copy()
    if kind == 'wall':
        out = interior.copy()
        mn = (interior[1:-1] * n).sum(axis=0)
        out[1:-1] -= 2 * mn * n
        return out
    if kind == 'noslip':
        out = interior.copy()
        out[1:-1] *= -1
        return out
    raise BoundaryConditionError(f'unknown boundary kind {kind!r}')


def exterior_sigma(sigma, tag: BoundaryTag):
    out = sigma.copy()
    if tag.kind == 'noslip':
        # adiabatic: central energy flux through the wall vanishes
        out[:, -1] *= -1
    return out


def wall_flux(uM, n, gas: GasParams):
    """Normal flux ``(0, p* n, 0)`` from the exact wall-Riemann pressure."""
    p_star = wall_riemann_pressure(uM, n, gas)
    f = np.zeros_like(uM)
    f[1:-1] = p_star * n
    return f


def _affine_geometry(elem, vertices, EToV):
    loc = MAP_VERTICES[elem]
    v0 = vertices[EToV[:, loc[0]]]  # (K, dim)
    A = np.stack([(vertices[EToV[:, l]] - v0) / 2 for l in loc[1:]], axis=-1)  # (K, dim_x, dim_r)
    J = np.linalg.det(A)
    if np.any(J <= 0):
        raise MeshError('mesh has elements with non-positive Jacobian')
    drdx = np.moveaxis(np.linalg.inv(A), 0, -1)  # (dim_r, dim_x, K)
    return v0, A, J, drdx


def _side_of(centroid, domain, tol):
    names = (('left', 'right'), ('bottom', 'top'))
    for d, (lo, hi) in enumerate(domain):
        if abs(centroid[d] - lo) < tol:
            return names[d][0]
        if abs(centroid[d] - hi) < tol:
            return names[d][1]
    raise MeshError(f'boundary face at {centroid} does not lie on the domain boundary')


def _build_mesh(elem, refops, vertices, EToV, face_key, domain, periodic, bc, h):
    if refops.elem != elem:
        raise MeshError(f'{elem} mesh needs {elem} reference operators, got {refops.elem}')
    dim = vertices.shape[1]
    K = EToV.shape[0]
    v0, A, J, drdx = _affine_geometry(elem, vertices, EToV)
    x = v0.T[:, :, None] + np.einsum('kxr,rn->xkn', A, refops.r + 1)

    nhat = refops.nhat
    n = np.einsum('k,abk,an->bkn', J, drdx, nhat)
    sJ = np.sqrt((n ** 2).sum(axis=0))
    n = n / sJ

    face_slices = refops.face_slices()
    xf = x[:, :, refops.face_node]
    extent = max(hi - lo for lo, hi in domain)
    tol = 1e-8 * extent

    face_table = {}
    for k in range(K):
        for f, fv in enumerate(FACE_VERTICES[elem]):
            key = face_key([EToV[k, v] for v in fv])
            face_table.setdefault(key, []).append((k, f))

    mapP = -np.ones((K, refops.Nfp), dtype=int)
    bc_idx = -np.ones((K, refops.Nfp), dtype=int)
    tags: List[BoundaryTag] = []
    bc = bc or {}
    for key, owners in face_table.items():
        if len(owners) == 2:
            (k1, f1), (k2, f2) = owners
            for (ka, fa), (kb, fb) in (((k1, f1), (k2, f2)), ((k2, f2), (k1, f1))):
                ia, ib = face_slices[fa], face_slices[fb]
                Xa, Xb = xf[:, ka, ia], xf[:, kb, ib]
                shift = Xb.mean(axis=1) - Xa.mean(axis=1)
                dist = np.sqrt((((Xa + shift[:, None])[:, :, None] - Xb[:, None, :]) ** 2).sum(axis=0))
                match = np.argmin(dist, axis=1)
                if np.any(dist[np.arange(len(ia)), match] > tol):
                    raise MeshError(f'face nodes of elements {ka} and {kb} do not match')
                mapP[ka, ia] = kb * refops.Np + refops.face_node[ib[match]]
        elif len(owners) == 1:
            k, f = owners[0]
            idx = face_slices[f]
            centroid = xf[:, k, idx].mean(axis=1)
            side = _side_of(centroid, domain, tol)
            if side not in bc:
                raise BoundaryConditionError(f'no boundary condition given for side {side!r}')
            spec = bc[side]
            tag = spec if isinstance(spec, BoundaryTag) else spec(centroid)
            if not isinstance(tag, BoundaryTag):
                raise BoundaryConditionError(f'boundary condition for side {side!r} did not produce a BoundaryTag')
            for i, known in enumerate(tags):
                if known is tag:
                    break
            else:
                tags.append(tag)
                i = len(tags) - 1
            bc_idx[k, idx] = i
        else:
            raise MeshError(f'face {key} is shared by {len(owners)} elements')

    mesh = Mesh(elem=elem, refops=refops, vertices=vertices, EToV=EToV, J=J, drdx=drdx, x=x,
                mapP=mapP, bc=bc_idx, nx=n, sJ=sJ, tags=tags, domain=tuple(domain),
                periodic=tuple(periodic), h=h)
    logger.debug('built %s mesh: K=%d, Np=%d, boundary tags=%s', elem, K, refops.Np, [t.name for t in tags])
    return mesh


def uniform_interval(K: int, a: float, b: float, refops: RefOps,
                     bc: Optional[Dict[str, TagSpec]] = None, periodic: bool = False) -> Mesh:
    if K < 1 or not a < b:
        raise MeshError(f'uniform_interval needs K >= 1 and a < b, got K={K}, [{a}, {b}]')
    vertices = np.linspace(a, b, K + 1)[:, None]
    EToV = np.stack([np.arange(K), np.arange(1, K + 1)], axis=1)

    def key(vs):
        v, = vs
        return (v % K,) if periodic else (v,)

    return _build_mesh('interval', refops, vertices, EToV, key, ((a, b),), (periodic,), bc, (b - a) / K)


def _grid(Kx, Ky, domain, periodic):
    if Kx < 1 or Ky < 1:
        raise MeshError(f'grid needs Kx, Ky >= 1, got {Kx}, {Ky}')
    (x0, x1), (y0, y1) = domain
    if not (x0 < x1 and y0 < y1):
        raise MeshError(f'degenerate domain {domain}')
    xs, ys = np.linspace(x0, x1, Kx + 1), np.linspace(y0, y1, Ky + 1)
    X, Y = np.meshgrid(xs, ys, indexing='xy')
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return i + (Kx + 1) * j

    def key(vs):
        # doubled edge midpoint in grid units, wrapped across periodic directions
        mi = sum(v % (Kx + 1) for v in vs)
        mj = sum(v // (Kx + 1) for v in vs)
        return (mi % (2 * Kx) if periodic[0] else mi, mj % (2 * Ky) if periodic[1] else mj)

    i, j = np.meshgrid(np.arange(Kx), np.arange(Ky), indexing='xy')
    i, j = i.ravel(), j.ravel()
    corners = np.stack([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)], axis=1)
    h = min((x1 - x0) / Kx, (y1 - y0) / Ky)
    return vertices, corners, key, h


def uniform_quad(Kx: int, Ky: int, domain, refops: RefOps,
                 bc: Optional[Dict[str, TagSpec]] = None, periodic: Sequence[bool] = (False, False)) -> Mesh:
    vertices, corners, key, h = _grid(Kx, Ky, domain, tuple(periodic))
    return _build_mesh('quad', refops, vertices, corners, key, domain, tuple(periodic), bc, h)


def uniform_tri(Kx: int, Ky: int, domain, refops: RefOps,
                bc: Optional[Dict[str, TagSpec]] = None, periodic: Sequence[bool] = (False, False)) -> Mesh:
    """Each grid cell is split along its lower-left to upper-right diagonal."""
    vertices, corners, key, h = _grid(Kx, Ky, domain, tuple(periodic))
    lower = corners[:, [0, 1, 2]]
    upper = corners[:, [0, 2, 3]]
    EToV = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return _build_mesh('tri', refops, vertices, EToV, key, domain, tuple(periodic), bc, h)
