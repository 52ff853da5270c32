"""Nodal high-order reference elements on the unit triangle.

The reference triangle has vertices ``(0,0), (1,0), (0,1)``.  Local faces
are numbered ``0: v0->v1``, ``1: v1->v2``, ``2: v2->v0`` and are
parametrised by ``t in [0, 1]`` in that direction.

Nodes are ordered vertices first, then the interior nodes of faces 0, 1, 2
(each in the direction of its parametrisation), then element-interior nodes
sorted by ``(eta, xi)``.  Solution nodes are warp-and-blend points whose
face restrictions are Gauss-Lobatto points; geometry nodes are equispaced.

The modal basis is the Dubiner basis, orthonormal on the unit triangle and
ordered by total degree, so the last ``k + 1`` modes are the top-degree ones.
"""

from functools import lru_cache
import math

import numpy as np
from scipy.special import eval_jacobi, gammaln, roots_jacobi, roots_legendre

from .errors import UnsupportedShape

FACE_VERTICES = ((0, 1), (1, 2), (2, 0))
VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


# -- 1D building blocks --------------------------------------------------------

def jacobi_normalized(x, alpha, beta, n):
    """Jacobi polynomial normalised to unit L2 norm under its weight on [-1, 1]."""
    lognorm = ((alpha + beta + 1) * math.log(2.0) - math.log(2 * n + alpha + beta + 1)
               + gammaln(n + alpha + 1) + gammaln(n + beta + 1)
               - gammaln(n + alpha + beta + 1) - gammaln(n + 1))
    return eval_jacobi(n, alpha, beta, x) / math.exp(0.5 * lognorm)


def jacobi_normalized_deriv(x, alpha, beta, n):
    if n == 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    return math.sqrt(n * (n + alpha + beta + 1)) * jacobi_normalized(x, alpha + 1, beta + 1, n - 1)


def gauss_lobatto(k):
    """Gauss-Lobatto-Legendre points on [-1, 1] (``k + 1`` points)."""
    if k == 1:
        return np.array([-1.0, 1.0])
    inner, _ = roots_jacobi(k - 1, 1.0, 1.0)
    return np.concatenate([[-1.0], inner, [1.0]])


def segment_nodes(k):
    """Trace nodes on [0, 1]; symmetric under ``t -> 1 - t``."""
    return 0.5 * (gauss_lobatto(k) + 1.0)


def segment_quadrature(degree):
    """Gauss-Legendre rule on [0, 1] exact for polynomials of ``degree``."""
    n = degree // 2 + 1
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def lagrange_1d(nodes, t):
    """Lagrange basis on ``nodes`` (in [0, 1]) evaluated at ``t``: shape (len(t), len(nodes))."""
    k = len(nodes) - 1
    V = np.stack([jacobi_normalized(2 * nodes - 1, 0, 0, m) for m in range(k + 1)], axis=1)
    P = np.stack([jacobi_normalized(2 * np.asarray(t) - 1, 0, 0, m) for m in range(k + 1)], axis=1)
    return np.linalg.solve(V.T, P.T).T


# -- triangle ------------------------------------------------------------------

def n_nodes(k):
    return (k + 1) * (k + 2) // 2


def mode_indices(k):
    return [(i, d - i) for d in range(k + 1) for i in range(d + 1)]


def dubiner(k, pts):
    """Orthonormal modal basis and its gradient on the unit triangle.

    Returns ``(psi, dpsi)`` with shapes ``(npts, nmodes)`` and
    ``(npts, nmodes, 2)``.
    """
    pts = np.asarray(pts, dtype=float)
    r = 2.0 * pts[:, 0] - 1.0
    s = 2.0 * pts[:, 1] - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(np.abs(1.0 - s) > 1e-14, 2.0 * (1.0 + r) / (1.0 - s) - 1.0, -1.0)
    b = s
    modes = mode_indices(k)
    psi = np.empty((len(pts), len(modes)))
    dpsi = np.empty((len(pts), len(modes), 2))
    half = 0.5 * (1.0 - b)
    for m, (i, j) in enumerate(modes):
        fa = jacobi_normalized(a, 0, 0, i)
        dfa = jacobi_normalized_deriv(a, 0, 0, i)
        gb = jacobi_normalized(b, 2 * i + 1, 0, j)
        dgb = jacobi_normalized_deriv(b, 2 * i + 1, 0, j)
        psi[:, m] = math.sqrt(2.0) * fa * gb * (1.0 - b) ** i
        # derivatives with respect to the biunit coordinates (r, s)
        dr = dfa * gb
        if i > 0:
            dr = dr * half ** (i - 1)
        ds = dfa * gb * 0.5 * (1.0 + a)
        if i > 0:
            ds = ds * half ** (i - 1)
        tmp = dgb * half ** i
        if i > 0:
            tmp = tmp - 0.5 * i * gb * half ** (i - 1)
        ds = ds + fa * tmp
        scale = 2.0 ** (i + 0.5)
        dpsi[:, m, 0] = dr * scale
        dpsi[:, m, 1] = ds * scale
    # unit triangle: area factor 1/4 in the inner product, d/dxi = 2 d/dr
    return 2.0 * psi, 4.0 * dpsi


def _warpfactor(k, rout):
    lgl = gauss_lobatto(k)
    req = np.linspace(-1.0, 1.0, k + 1)
    Veq = np.stack([jacobi_normalized(req, 0, 0, m) for m in range(k + 1)], axis=1)
    Pmat = np.stack([jacobi_normalized(rout, 0, 0, m) for m in range(k + 1)], axis=0)
    Lmat = np.linalg.solve(Veq.T, Pmat)
    warp = Lmat.T @ (lgl - req)
    zerof = np.abs(rout) < 1.0 - 1e-10
    sf = 1.0 - (zerof * rout) ** 2
    return warp / sf + warp * (zerof - 1)


_ALPHA_OPT = (0.0, 0.0, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832, 1.3648,
              1.4773, 1.4959, 1.5743, 1.5770, 1.6223, 1.6258)


def _barycentric_lattice(k):
    L1, L3 = [], []
    for i in range(k + 1):
        for j in range(k + 1 - i):
            L1.append(i / k)
            L3.append(j / k)
    L1 = np.array(L1)
    L3 = np.array(L3)
    return L1, 1.0 - L1 - L3, L3


def warp_blend_nodes(k):
    """Warp-and-blend interpolation points on the unit triangle (unordered)."""
    L1, L2, L3 = _barycentric_lattice(k)
    if k <= 2:
        lam = np.stack([L2, L3, L1], axis=1)
        return lam @ VERTICES
    alpha = _ALPHA_OPT[k - 1] if k < 16 else 5.0 / 3.0
    x = -L2 + L3
    y = (-L2 - L3 + 2 * L1) / math.sqrt(3.0)
    blend1, blend2, blend3 = 4 * L2 * L3, 4 * L1 * L3, 4 * L1 * L2
    warp1 = blend1 * _warpfactor(k, L3 - L2) * (1 + (alpha * L1) ** 2)
    warp2 = blend2 * _warpfactor(k, L1 - L3) * (1 + (alpha * L2) ** 2)
    warp3 = blend3 * _warpfactor(k, L2 - L1) * (1 + (alpha * L3) ** 2)
    x = x + warp1 + math.cos(2 * math.pi / 3) * warp2 + math.cos(4 * math.pi / 3) * warp3
    y = y + math.sin(2 * math.pi / 3) * warp2 + math.sin(4 * math.pi / 3) * warp3
    # equilateral -> barycentric -> unit triangle
    l1 = (math.sqrt(3.0) * y + 1.0) / 3.0
    l3 = (3.0 * x - math.sqrt(3.0) * y + 2.0) / 6.0
    r = -(1.0 - l1 - l3) + l3 - l1
    s = -(1.0 - l1 - l3) - l3 + l1
    return np.stack([(r + 1) / 2, (s + 1) / 2], axis=1)


def equispaced_nodes(k):
    L1, L2, L3 = _barycentric_lattice(k)
    return np.stack([L2, L3, L1], axis=1) @ VERTICES


def order_nodes(pts, tol=1e-10):
    """Sort points into vertex / face / interior order (see module docstring)."""
    xi, eta = pts[:, 0], pts[:, 1]
    lam = np.stack([1 - xi - eta, xi, eta], axis=1)
    order = []
    for v in range(3):
        order.append(int(np.argmin(np.linalg.norm(pts - VERTICES[v], axis=1))))
    on_face = [np.abs(lam[:, 2]) < tol, np.abs(lam[:, 0]) < tol, np.abs(lam[:, 1]) < tol]
    # parameter along each face in its own direction
    params = [xi, eta, 1.0 - eta]
    for f in range(3):
        idx = [i for i in np.flatnonzero(on_face[f]) if i not in order[:3]]
        idx.sort(key=lambda i: params[f][i])
        order.extend(idx)
    rest = [i for i in range(len(pts)) if i not in order]
    rest.sort(key=lambda i: (round(eta[i], 12), xi[i]))
    order.extend(rest)
    return pts[np.array(order)]


def face_node_indices(k):
    """Element-node indices lying on each local face, ordered along the face."""
    out = []
    n_edge = k - 1
    for f, (a, b) in enumerate(FACE_VERTICES):
        inner = list(range(3 + f * n_edge, 3 + (f + 1) * n_edge))
        out.append([a] + inner + [b])
    return np.array(out)


def triangle_quadrature(degree):
    """Collapsed Gauss rule on the unit triangle exact for ``degree``."""
    n = max(1, math.ceil((degree + 1) / 2))
    a, wa = roots_legendre(n)
    b, wb = roots_jacobi(n, 1.0, 0.0)
    A, B = np.meshgrid(a, b, indexing="ij")
    W = np.outer(wa, wb) / 8.0
    r = 0.5 * (1.0 + A) * (1.0 - B) - 1.0
    pts = np.stack([(r.ravel() + 1) / 2, (B.ravel() + 1) / 2], axis=1)
    return pts, W.ravel()


def face_points(f, t):
    a, b = FACE_VERTICES[f]
    t = np.asarray(t)[:, None]
    return VERTICES[a] * (1 - t) + VERTICES[b] * t


def face_tangent(f):
    a, b = FACE_VERTICES[f]
    return VERTICES[b] - VERTICES[a]


class NodalBasis:
    """Lagrange basis of degree ``k`` on a given ordered node set."""

    def __init__(self, k, nodes):
        self.k = k
        self.nodes = nodes
        self.vandermonde, _ = dubiner(k, nodes)
        self._vinv = np.linalg.inv(self.vandermonde)

    def tabulate(self, pts):
        psi, dpsi = dubiner(self.k, pts)
        N = psi @ self._vinv
        dN = np.einsum("qmd,ma->qad", dpsi, self._vinv)
        return N, dN


class ReferenceElement:
    """Degree-``k`` nodal triangle with tabulated volume and face quadrature.

    Attributes
    ----------
    nodes : (n_en, 2) solution nodes
    V : (n_en, n_en) Vandermonde, ``V[i, m] = psi_m(node_i)``
    P : (n_en, n_en) projection onto the top-degree modes
    qp, qw : volume quadrature points and weights
    N, dN : shape functions and reference gradients at ``qp``
    fq_t, fq_w : face quadrature on [0, 1]
    Nf : (3, n_fq, n_en) element shape functions at each face's points
    Lf : (n_fq, n_fn) trace shape functions at face quadrature points
    face_nodes : (3, n_fn) element nodes on each face
    """

    def __init__(self, k, quad_degree=None, face_quad_degree=None):
        if k < 1:
            raise ValueError("polynomial degree must be >= 1")
        self.k = k
        self.n_en = n_nodes(k)
        self.n_fn = k + 1
        self.nodes = order_nodes(warp_blend_nodes(k))
        self.basis = NodalBasis(k, self.nodes)
        self.V, self.P = modal_projection_matrices(k, self.nodes)
        qd = 2 * k + 1 if quad_degree is None else quad_degree
        fqd = 2 * k + 1 if face_quad_degree is None else face_quad_degree
        self.qp, self.qw = triangle_quadrature(qd)
        self.N, self.dN = self.basis.tabulate(self.qp)
        self.fq_t, self.fq_w = segment_quadrature(fqd)
        self.Nf = np.stack([self.basis.tabulate(face_points(f, self.fq_t))[0] for f in range(3)])
        self.trace_nodes = segment_nodes(k)
        self.Lf = lagrange_1d(self.trace_nodes, self.fq_t)
        self.face_nodes = face_node_indices(k)
        self.mass = np.einsum("q,qa,qb->ab", self.qw, self.N, self.N)

    @property
    def n_fq(self):
        return len(self.fq_t)


@lru_cache(maxsize=None)
def reference_element(k, quad_degree=None, face_quad_degree=None):
    return ReferenceElement(k, quad_degree, face_quad_degree)


@lru_cache(maxsize=None)
def geometry_basis(kg):
    return NodalBasis(kg, order_nodes(equispaced_nodes(kg)))


def modal_projection_matrices(k, nodes=None):
    """Vandermonde ``V`` (modal coefficients -> nodal values) and projector ``P``.

    ``P`` zeroes the ``k(k+1)/2`` modes of degree below ``k`` and keeps the
    ``k + 1`` top-degree modes.
    """
    if k < 1:
        raise ValueError("polynomial degree must be >= 1")
    if nodes is None:
        nodes = order_nodes(warp_blend_nodes(k))
    V, _ = dubiner(k, nodes)
    n_low = k * (k + 1) // 2
    P = np.diag(np.r_[np.zeros(n_low), np.ones(k + 1)])
    return V, P


_SHAPES = {
    "simplex2d": (2, lambda k: (k + 1) * (k + 2) // 2),
    "simplex3d": (3, lambda k: (k + 1) * (k + 2) * (k + 3) // 6),
    "quad": (2, lambda k: (k + 1) ** 2),
    "hex": (3, lambda k: (k + 1) ** 3),
}
_SHAPE_ALIASES = {"triangle": "simplex2d", "tri": "simplex2d", "tetrahedron": "simplex3d",
                  "tet": "simplex3d", "quadrilateral": "quad", "parallelepiped2d": "quad",
                  "hexahedron": "hex", "parallelepiped3d": "hex"}


def local_dimension(k, shape="simplex2d"):
    """Number of unknowns ``(nsd + 2 + msd + nsd) * n_en`` of one local problem."""
    if k < 1:
        raise ValueError("polynomial degree must be >= 1")
    key = _SHAPE_ALIASES.get(shape, shape)
    if key not in _SHAPES:
        raise UnsupportedShape(f"unknown element shape {shape!r}")
    nsd, count = _SHAPES[key]
    msd = nsd * (nsd + 1) // 2
    return (nsd + 2 + msd + nsd) * count(k)
