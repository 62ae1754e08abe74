"""Reference-element quadratures and summation-by-parts operators.

Every element type (interval, quad, tri) gets a :class:`RefOps` bundle holding the
diagonal mass, the dense high-order operators ``Q``, the sparse low-order operators
``QL``, the face extrapolation ``E`` and the face matrices ``B``.  Both operator
families satisfy ``Q_k + Q_k^T = E^T B_k E`` and annihilate constants.
"""
import functools
import logging
import math
import os
from dataclasses import dataclass, field
from itertools import permutations
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.polynomial import legendre
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from esdgpos.scheme.errors import OperatorConstructionError

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(__file__), 'data')

ELEMENT_TYPES = ('interval', 'quad', 'tri')
MAX_DEGREE = {'interval': 5, 'quad': 5, 'tri': 4}

# node-graph radius factors; with beta = 1/2 the radius is alpha times the radius
# of the disk whose area is the node weight.  beta = 1 leaves every shipped node set
# disconnected at these alpha.
DEFAULT_TRI_ALPHA = {1: 4.0, 2: 2.5, 3: 3.5, 4: 3.5}
DEFAULT_TRI_BETA = 0.5

TRI_VERTICES = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])


@dataclass
class Quadrature:
    nodes: np.ndarray  # (dim, Np)
    weights: np.ndarray  # (Np,)
    face_nodes: List[np.ndarray] = field(default_factory=list)
    face_weights: List[np.ndarray] = field(default_factory=list)
    face_normals: List[np.ndarray] = field(default_factory=list)

    @property
    def num_nodes(self):
        return self.weights.shape[0]


@dataclass
class NodeGraph:
    adjacency: np.ndarray  # (Np, Np) bool
    laplacian: np.ndarray  # (Np, Np)

    @property
    def num_edges(self):
        return int(np.count_nonzero(np.triu(self.adjacency, 1)))


@dataclass
class RefOps:
    elem: str
    N: int
    r: np.ndarray  # (dim, Np)
    w: np.ndarray  # (Np,)
    Q: np.ndarray  # (dim, Np, Np)
    QL: np.ndarray  # (dim, Np, Np)
    face_node: np.ndarray  # (Nfp,) volume index of every face node
    face_id: np.ndarray  # (Nfp,)
    wf: np.ndarray  # (Nfp,) reference face quadrature weights
    nhat: np.ndarray  # (dim, Nfp) reference unit normals
    nfaces: int
    graph: NodeGraph
    modal: np.ndarray  # (nmodes, Np) projection onto an orthonormal graded basis
    mode_degree: np.ndarray  # (nmodes,)

    @property
    def dim(self):
        return self.r.shape[0]

    @property
    def Np(self):
        return self.w.shape[0]

    @property
    def Nfp(self):
        return self.face_node.shape[0]

    @property
    def E(self):
        E = np.zeros((self.Nfp, self.Np))
        E[np.arange(self.Nfp), self.face_node] = 1.0
        return E

    @property
    def B(self):
        return self.wf[None, :] * self.nhat

    @property
    def D(self):
        return self.Q / self.w[None, :, None]

    def boundary_matrix(self, k):
        """Dense ``E^T B_k E``."""
        E = self.E
        return E.T @ (self.B[k][:, None] * E)

    def face_slices(self):
        return [np.flatnonzero(self.face_id == f) for f in range(self.nfaces)]

    def residuals(self):
        """Max-norm residuals of the defining identities, per operator."""
        res = {}
        ones = np.ones(self.Np)
        for k, name in enumerate('rs'[:self.dim]):
            EBE = self.boundary_matrix(k)
            res[f'sbp Q_{name}'] = np.abs(self.Q[k] + self.Q[k].T - EBE).max()
            res[f'sbp QL_{name}'] = np.abs(self.QL[k] + self.QL[k].T - EBE).max()
            res[f'Q_{name} 1'] = np.abs(self.Q[k] @ ones).max()
            res[f'QL_{name} 1'] = np.abs(self.QL[k] @ ones).max()
        return res


def lobatto_rule(N: int) -> Tuple[np.ndarray, np.ndarray]:
    """(N+1)-point Gauss-Lobatto-Legendre nodes and weights on [-1, 1]."""
    if N < 1:
        raise OperatorConstructionError(f'Gauss-Lobatto rule needs N >= 1, got N={N}')
    x = -np.cos(np.pi * np.arange(N + 1) / N)
    P = legendre.legvander(x, N)
    for _ in range(100):
        x_old = x
        P = legendre.legvander(x, N)
        x = x_old - (x * P[:, N] - P[:, N - 1]) / ((N + 1) * P[:, N])
        if np.max(np.abs(x - x_old)) < 1e-15:
            break
    P = legendre.legvander(x, N)
    w = 2.0 / (N * (N + 1) * P[:, N] ** 2)
    return x, w


def _lagrange_derivative(x):
    N = len(x) - 1
    V = legendre.legvander(x, N)
    Vr = np.zeros_like(V)
    for j in range(1, N + 1):
        coef = np.zeros(N + 1)
        coef[j] = 1.0
        Vr[:, j] = legendre.legval(x, legendre.legder(coef))
    return np.linalg.solve(V.T, Vr.T).T


def _low_order_1d(N):
    QL = np.zeros((N + 1, N + 1))
    for i in range(N):
        QL[i, i + 1] = 0.5
        QL[i + 1, i] = -0.5
    QL[0, 0] = -0.5
    QL[N, N] = 0.5
    return QL


def _graph_from_sparsity(skews):
    A = np.zeros(skews[0].shape, dtype=bool)
    for S in skews:
        A |= np.abs(S) > 1e-14
    np.fill_diagonal(A, False)
    L = np.diag(A.sum(axis=1)).astype(float) - A
    return NodeGraph(adjacency=A, laplacian=L)


def _graded_modal_projection(V, w, degree):
    """Orthonormalize the graded basis ``V`` in the discrete ``w`` inner product."""
    order = np.argsort(degree, kind='stable')
    V = V[:, order]
    degree = degree[order]
    _, R = scipy.linalg.qr(np.sqrt(w)[:, None] * V, mode='economic')
    modal = scipy.linalg.solve_triangular(R, V.T * w[None, :], trans='T')
    return modal, degree


def build_interval_ops(N: int) -> RefOps:
    x, w = lobatto_rule(N)
    Q = np.diag(w) @ _lagrange_derivative(x)
    QL = _low_order_1d(N)
    V = np.vander(x, N + 1, increasing=True)
    modal, degree = _graded_modal_projection(V, w, np.arange(N + 1))
    return RefOps(elem='interval', N=N, r=x[None, :], w=w,
                  Q=Q[None], QL=QL[None],
                  face_node=np.array([0, N]), face_id=np.array([0, 1]),
                  wf=np.ones(2), nhat=np.array([[-1.0, 1.0]]), nfaces=2,
                  graph=_graph_from_sparsity([QL - QL.T]),
                  modal=modal, mode_degree=degree)


def build_quad_ops(N: int) -> RefOps:
    """Tensor-product LGL operators, lexicographic node order with r fastest."""
    x, w1 = lobatto_rule(N)
    n = N + 1
    Q1 = np.diag(w1) @ _lagrange_derivative(x)
    QL1 = _low_order_1d(N)
    W1 = np.diag(w1)
    Q = np.stack([np.kron(W1, Q1), np.kron(Q1, W1)])
    QL = np.stack([np.kron(W1, QL1), np.kron(QL1, W1)])
    r = np.stack([np.tile(x, n), np.repeat(x, n)])
    w = np.kron(w1, w1)

    idx = np.arange(n * n).reshape(n, n)  # idx[iy, ix]
    faces = [idx[0, :], idx[:, N], idx[N, ::-1], idx[::-1, 0]]
    normals = [(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]
    face_node = np.concatenate(faces)
    face_id = np.repeat(np.arange(4), n)
    wf = np.concatenate([w1, w1, w1[::-1], w1[::-1]])
    nhat = np.concatenate([np.tile(np.array(nv)[:, None], (1, n)) for nv in normals], axis=1)

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing='xy')
    i, j = i.ravel(), j.ravel()
    V = r[0][:, None] ** i[None, :] * r[1][:, None] ** j[None, :]
    modal, degree = _graded_modal_projection(V, w, np.maximum(i, j))
    return RefOps(elem='quad', N=N, r=r, w=w, Q=Q, QL=QL,
                  face_node=face_node, face_id=face_id, wf=wf, nhat=nhat, nfaces=4,
                  graph=_graph_from_sparsity([QL[0] - QL[0].T, QL[1] - QL[1].T]),
                  modal=modal, mode_degree=degree)


def _read_tri_table(N):
    path = os.path.join(DATA_DIR, f'tri_sbp_N{N}.txt')
    if not os.path.exists(path):
        raise OperatorConstructionError(f'no triangle SBP node table for N={N}')
    degree = None
    orbits = []
    with open(path, 'r') as f:
        for line in f:
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            key, *vals = line.split()
            if key == 'degree':
                degree = int(vals[0])
            else:
                orbits.append((key, [float(v) for v in vals]))
    if degree is None:
        raise OperatorConstructionError(f'{path} does not declare an exactness degree')
    return degree, orbits


def _orbit_points(kind, vals):
    if kind == 'centroid':
        return [(1 / 3, 1 / 3, 1 / 3)]
    if kind == 's21':
        a = vals[0]
        return [(a, a, 1 - 2 * a), (a, 1 - 2 * a, a), (1 - 2 * a, a, a)]
    if kind == 's111':
        a, b = vals
        return sorted(set(permutations((a, b, 1 - a - b))))
    raise OperatorConstructionError(f'unknown triangle orbit type {kind!r}')


def tri_quadrature(N: int) -> Quadrature:
    """Triangle volume rule with (N+2)-point Gauss-Lobatto nodes on every face.

    The SBP identity with degree-N exact derivatives needs faces exact to degree 2N,
    one more than an (N+1)-point Lobatto rule gives.

    Node order: the three vertices, then the interior face nodes face by face in
    counterclockwise order, then the interior orbits of the table.  Weights are solved
    orbit-wise from monomial exactness and must come out positive.
    """
    degree, orbits = _read_tri_table(N)
    xf, wf1 = lobatto_rule(N + 1)
    t = (1 + xf[1:-1]) / 2

    bary = [np.eye(3)[v] for v in range(3)]
    orbit_of = [0, 0, 0]
    edge_orbit = {}
    for f in range(3):
        a, b = f, (f + 1) % 3
        for q, tq in enumerate(t):
            lam = np.zeros(3)
            lam[a], lam[b] = 1 - tq, tq
            bary.append(lam)
            key = min(q, len(t) - 1 - q)
            edge_orbit.setdefault(key, len(edge_orbit) + 1)
            orbit_of.append(edge_orbit[key])
    n_orbits = 1 + len(edge_orbit)
    for kind, vals in orbits:
        for lam in _orbit_points(kind, vals):
            bary.append(np.array(lam))
            orbit_of.append(n_orbits)
        n_orbits += 1
    bary = np.array(bary)
    orbit_of = np.array(orbit_of)

    # exactness on l2^a l3^b: integral over the reference triangle is 4 a! b! / (a+b+2)!
    rows, rhs = [], []
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            vals = bary[:, 1] ** a * bary[:, 2] ** b
            rows.append(np.bincount(orbit_of, weights=vals, minlength=n_orbits))
            rhs.append(4.0 * math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2))
    A, rhs = np.array(rows), np.array(rhs)
    W, *_ = scipy.linalg.lstsq(A, rhs)
    resid = np.abs(A @ W - rhs).max()
    if resid > 1e-12:
        raise OperatorConstructionError(f'triangle table N={N} is not exact to degree {degree} (residual {resid:.3e})')
    w = W[orbit_of]
    if np.any(w <= 0):
        raise OperatorConstructionError(f'triangle table N={N} has non-positive weights')

    nodes = (bary @ TRI_VERTICES).T
    nt = len(t)
    face_nodes, face_weights, face_normals = [], [], []
    lengths = [2.0, 2.0 * np.sqrt(2.0), 2.0]
    normals = [(0.0, -1.0), (1 / np.sqrt(2.0), 1 / np.sqrt(2.0)), (-1.0, 0.0)]
    for f in range(3):
        interior = 3 + f * nt + np.arange(nt)
        face_nodes.append(np.concatenate([[f], interior, [(f + 1) % 3]]))
        face_weights.append(wf1 * lengths[f] / 2)
        face_normals.append(np.array(normals[f]))
    logger.debug('triangle quadrature N=%d: %d nodes, min weight %.3e', N, len(w), w.min())
    return Quadrature(nodes=nodes, weights=w, face_nodes=face_nodes,
                      face_weights=face_weights, face_normals=face_normals)


def build_node_graph(nodes: np.ndarray, weights: np.ndarray, alpha: float, beta: float = 1.0) -> NodeGraph:
    """Adjacency ``|r_i - r_j| <= alpha max((w_i/pi)^beta, (w_j/pi)^beta)``.

    Raises when the graph is disconnected, since the potential solve on it would be
    singular.
    """
    if alpha <= 0:
        raise OperatorConstructionError(f'node graph needs alpha > 0, got {alpha}')
    nodes = np.atleast_2d(nodes)
    dist = np.sqrt(((nodes[:, :, None] - nodes[:, None, :]) ** 2).sum(axis=0))
    radius = (np.asarray(weights) / np.pi) ** beta
    A = dist <= alpha * np.maximum(radius[:, None], radius[None, :])
    np.fill_diagonal(A, False)
    n_comp, _ = connected_components(csr_matrix(A), directed=False)
    if n_comp != 1:
        raise OperatorConstructionError(
            f'node graph with alpha={alpha}, beta={beta} has {n_comp} connected components')
    L = np.diag(A.sum(axis=1)).astype(float) - A
    return NodeGraph(adjacency=A, laplacian=L)


def build_sparse_tri_ops(graph: NodeGraph, boundary_matrices) -> np.ndarray:
    """Low-order operators ``QL_k = S_k + E^T B_k E / 2`` on the graph sparsity.

    ``S_k`` has entries ``psi_k[j] - psi_i`` on graph edges, with ``L psi = E^T B_k E 1 / 2``
    and ``sum(psi) = 0``.
    """
    Np = graph.laplacian.shape[0]
    n_comp, _ = connected_components(csr_matrix(graph.adjacency), directed=False)
    if n_comp != 1:
        raise OperatorConstructionError('graph Laplacian is singular: node graph is disconnected')
    lhs = np.vstack([graph.laplacian, np.ones((1, Np))])
    QL = []
    for EBE in boundary_matrices:
        rhs = np.concatenate([0.5 * EBE.sum(axis=1), [0.0]])
        psi, *_ = scipy.linalg.lstsq(lhs, rhs)
        S = np.where(graph.adjacency, psi[None, :] - psi[:, None], 0.0)
        QL.append(S + 0.5 * EBE)
    return np.stack(QL)


def build_tri_ops(N: int, alpha: Optional[float] = None, beta: Optional[float] = None) -> RefOps:
    if not 1 <= N <= MAX_DEGREE['tri']:
        raise OperatorConstructionError(f'triangle operators are available for 1 <= N <= 4, got N={N}')
    alpha = DEFAULT_TRI_ALPHA[N] if alpha is None else alpha
    beta = DEFAULT_TRI_BETA if beta is None else beta
    quad = tri_quadrature(N)
    r, w = quad.nodes, quad.weights
    Np = len(w)

    face_node = np.concatenate(quad.face_nodes)
    face_id = np.concatenate([np.full(len(fn), f) for f, fn in enumerate(quad.face_nodes)])
    wf = np.concatenate(quad.face_weights)
    nhat = np.concatenate([np.tile(n[:, None], (1, len(fn)))
                           for n, fn in zip(quad.face_normals, quad.face_nodes)], axis=1)

    i, j = np.array([(a, b) for a in range(N + 1) for b in range(N + 1 - a)]).T
    V = r[0][:, None] ** i * r[1][:, None] ** j
    Vr = i * r[0][:, None] ** np.maximum(i - 1, 0) * r[1][:, None] ** j
    Vs = j * r[0][:, None] ** i * r[1][:, None] ** np.maximum(j - 1, 0)
    Vpinv = np.linalg.pinv(V)

    E = np.zeros((len(face_node), Np))
    E[np.arange(len(face_node)), face_node] = 1.0
    Q, EBEs = [], []
    for k, Vk in enumerate((Vr, Vs)):
        EBE = E.T @ ((wf * nhat[k])[:, None] * E)
        R = w[:, None] * Vk - 0.5 * EBE @ V
        S = R @ Vpinv - Vpinv.T @ R.T + Vpinv.T @ (R.T @ V) @ Vpinv
        Q.append(S + 0.5 * EBE)
        EBEs.append(EBE)

    graph = build_node_graph(r, w, alpha, beta)
    QL = build_sparse_tri_ops(graph, EBEs)
    modal, degree = _graded_modal_projection(V, w, i + j)
    return RefOps(elem='tri', N=N, r=r, w=w, Q=np.stack(Q), QL=QL,
                  face_node=face_node, face_id=face_id, wf=wf, nhat=nhat, nfaces=3,
                  graph=graph, modal=modal, mode_degree=degree)


@functools.lru_cache(maxsize=None)
def reference_ops(elem: str, N: int, alpha: Optional[float] = None, beta: Optional[float] = None) -> RefOps:
    if elem not in ELEMENT_TYPES:
        raise OperatorConstructionError(f'unknown element type {elem!r}, expected one of {ELEMENT_TYPES}')
    if N < 1 or N > MAX_DEGREE[elem]:
        raise OperatorConstructionError(f'{elem} operators support 1 <= N <= {MAX_DEGREE[elem]}, got N={N}')
    if elem == 'interval':
        ops = build_interval_ops(N)
    elif elem == 'quad':
        ops = build_quad_ops(N)
    else:
        ops = build_tri_ops(N, alpha, beta)
    worst = max(ops.residuals().values())
    if worst > 1e-11:
        raise OperatorConstructionError(f'{elem} N={N} operators fail the SBP identities (residual {worst:.3e})')
    logger.debug('built %s operators N=%d: Np=%d, low-order graph edges=%d', elem, N, ops.Np, ops.graph.num_edges)
    return ops


def dump_operators(ops: RefOps, out_dir: str):
    """Write every operator matrix as row-major text with 17 significant digits."""
    os.makedirs(out_dir, exist_ok=True)
    mats = {'M': np.diag(ops.w), 'E': ops.E}
    for k, name in enumerate('rs'[:ops.dim]):
        mats[f'Q_{name}'] = ops.Q[k]
        mats[f'QL_{name}'] = ops.QL[k]
        mats[f'B_{name}'] = np.diag(ops.B[k])
    paths = []
    for name, mat in mats.items():
        path = os.path.join(out_dir, f'{ops.elem}_N{ops.N}_{name}.txt')
        np.savetxt(path, np.atleast_2d(mat), fmt='%.17g')
        paths.append(path)
    return paths
