"""Triangular meshes, the face skeleton and isoparametric geometry.

A :class:`Mesh` holds node coordinates, per-element geometry-node indices
(corners first, ordered as in :mod:`hdgflow.basis`) and boundary tags keyed
by ``(element, local_face)``.  The skeleton numbers every face once; the
face's canonical orientation and normal come from its lower-indexed element.
"""

from dataclasses import dataclass
import math

import numpy as np

from .basis import FACE_VERTICES, equispaced_nodes, geometry_basis, n_nodes, order_nodes
from .errors import InvertedElement, MeshFormatError, NonConforming, UntaggedBoundary


@dataclass(frozen=True)
class Skeleton:
    """Face connectivity.

    ``face_elem[f] = (left, right)`` with ``right = -1`` on the boundary,
    ``face_local[f]`` the local face ids on each side, ``tags[f]`` the
    boundary tag (``None`` for interior faces), ``elem_faces[e, i]`` the face
    index of local face ``i`` and ``elem_flip[e, i]`` whether that element
    traverses the face against its canonical direction.
    """

    face_elem: np.ndarray
    face_local: np.ndarray
    tags: tuple
    elem_faces: np.ndarray
    elem_flip: np.ndarray

    @property
    def n_faces(self):
        return len(self.face_elem)

    @property
    def n_interior(self):
        return int(np.sum(self.face_elem[:, 1] >= 0))

    @property
    def n_boundary(self):
        return self.n_faces - self.n_interior

    def boundary_faces(self, tag=None):
        return [f for f, t in enumerate(self.tags) if t is not None and (tag is None or t == tag)]


def build_skeleton(corners, boundary_tags):
    """Build the face list from element corner triples and boundary tags.

    Parameters
    ----------
    corners : (E, 3) int array of vertex indices, counter-clockwise
    boundary_tags : mapping ``(element, local_face) -> tag``
    """
    corners = np.asarray(corners, dtype=int)
    incident = {}
    for e, tri in enumerate(corners):
        for f, (a, b) in enumerate(FACE_VERTICES):
            key = (min(tri[a], tri[b]), max(tri[a], tri[b]))
            incident.setdefault(key, []).append((e, f))
    records = []
    for key, sides in incident.items():
        if len(sides) > 2:
            raise NonConforming(f"edge {key} is shared by {len(sides)} elements")
        sides.sort()
        records.append(sides)
    records.sort(key=lambda s: s[0])
    n_el = len(corners)
    face_elem = np.full((len(records), 2), -1, dtype=int)
    face_local = np.full((len(records), 2), -1, dtype=int)
    elem_faces = np.full((n_el, 3), -1, dtype=int)
    elem_flip = np.zeros((n_el, 3), dtype=bool)
    tags = []
    used = set()
    for i, sides in enumerate(records):
        (el, fl) = sides[0]
        face_elem[i, 0], face_local[i, 0] = el, fl
        elem_faces[el, fl] = i
        if len(sides) == 2:
            er, fr = sides[1]
            face_elem[i, 1], face_local[i, 1] = er, fr
            elem_faces[er, fr] = i
            start_left = corners[el, FACE_VERTICES[fl][0]]
            start_right = corners[er, FACE_VERTICES[fr][0]]
            elem_flip[er, fr] = start_left != start_right
            if (el, fl) in boundary_tags or (er, fr) in boundary_tags:
                raise MeshFormatError(f"interior face between elements {el} and {er} carries a boundary tag")
            tags.append(None)
        else:
            if (el, fl) not in boundary_tags:
                raise UntaggedBoundary(f"boundary face {fl} of element {el} has no tag")
            tags.append(boundary_tags[(el, fl)])
            used.add((el, fl))
    extra = set(boundary_tags) - used
    if extra:
        raise MeshFormatError(f"boundary tags refer to non-boundary faces: {sorted(extra)[:5]}")
    return Skeleton(face_elem, face_local, tuple(tags), elem_faces, elem_flip)


class Mesh:
    """Conforming triangulation with isoparametric geometry of degree ``geom_degree``."""

    def __init__(self, nodes, elements, boundary_tags, geom_degree=1):
        self.nodes = np.asarray(nodes, dtype=float)
        self.elements = np.asarray(elements, dtype=int)
        self.geom_degree = int(geom_degree)
        if self.elements.ndim != 2 or self.elements.shape[1] != n_nodes(self.geom_degree):
            raise MeshFormatError(
                f"elements need {n_nodes(self.geom_degree)} nodes for geometry degree {self.geom_degree}")
        self.boundary_tags = dict(boundary_tags)
        self.skeleton = build_skeleton(self.elements[:, :3], self.boundary_tags)
        self._check_orientation()

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def tag_names(self):
        return sorted(set(self.boundary_tags.values()))

    @property
    def corner_coords(self):
        return self.nodes[self.elements[:, :3]]

    def _check_orientation(self):
        c = self.corner_coords
        d1 = c[:, 1] - c[:, 0]
        d2 = c[:, 2] - c[:, 0]
        area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        bad = np.flatnonzero(area2 <= 0)
        if len(bad):
            raise InvertedElement(f"element {bad[0]} is not counter-clockwise")

    def geometry(self, pts):
        """Physical points, Jacobians and determinants of every element at ``pts``.

        Returns ``x (E, P, 2)``, ``J (E, P, 2, 2)`` with ``J[..., i, j] = dx_i/dxi_j``
        and ``det (E, P)``.
        """
        N, dN = geometry_basis(self.geom_degree).tabulate(np.asarray(pts, dtype=float))
        X = self.nodes[self.elements]
        x = np.einsum("pa,ead->epd", N, X)
        J = np.einsum("ead,paj->epdj", X, dN)
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        if np.any(det <= 0):
            e = int(np.argwhere(det <= 0)[0, 0])
            raise InvertedElement(f"non-positive Jacobian determinant in element {e}")
        return x, J, det

    def map_element(self, element, point):
        """Map one reference point through one element: ``(x, J, det)``."""
        N, dN = geometry_basis(self.geom_degree).tabulate(np.atleast_2d(point))
        X = self.nodes[self.elements[element]]
        x = N[0] @ X
        J = np.einsum("ad,aj->dj", X, dN[0])
        det = float(np.linalg.det(J))
        if det <= 0:
            raise InvertedElement(f"non-positive Jacobian determinant in element {element}")
        return x, J, det

    def edge_lengths(self):
        c = self.corner_coords
        return np.stack([np.linalg.norm(c[:, b] - c[:, a], axis=1) for a, b in FACE_VERTICES], axis=1)

    def h_longest_edge(self):
        return self.edge_lengths().max(axis=1)

    def h_circumdiameter(self):
        """Circumscribed-circle diameter of each straight-sided corner triangle."""
        L = self.edge_lengths()
        c = self.corner_coords
        d1 = c[:, 1] - c[:, 0]
        d2 = c[:, 2] - c[:, 0]
        area = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        return L.prod(axis=1) / (2.0 * area)

    @property
    def h(self):
        return float(self.h_longest_edge().max())

    def vertex_elements(self):
        """Corner-vertex index array and incident element lists."""
        verts = np.unique(self.elements[:, :3])
        incident = {int(v): [] for v in verts}
        for e, tri in enumerate(self.elements[:, :3]):
            for v in tri:
                incident[int(v)].append(e)
        return incident


# -- generators --------------------------------------------------------------

SQUARE_TAGS = ("bottom", "right", "top", "left")


def unit_square(n, diagonal="right", mapping=None, geom_degree=1, tags=SQUARE_TAGS):
    """Structured triangulation of ``[0,1]^2`` with ``n x n`` cells split in two.

    ``diagonal='right'`` cuts every cell from lower-left to upper-right;
    ``'mirror'`` flips the cut in the upper half so the mesh is symmetric
    about ``y = 1/2``.  ``mapping(x, y) -> (X, Y)`` deforms the square; with
    ``geom_degree > 1`` it is applied to equispaced high-order nodes so the
    mapped elements are curved.
    """
    if n < 1:
        raise ValueError("need at least one cell per direction")
    corners = []
    boundary = {}
    idx = lambda i, j: j * (n + 1) + i
    for j in range(n):
        for i in range(n):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            flip = diagonal == "mirror" and 2 * j >= n
            if not flip:
                lower, upper = (a, b, c), (a, c, d)
            else:
                lower, upper = (a, b, d), (b, c, d)
            e0 = len(corners)
            corners += [lower, upper]
            if not flip:
                if j == 0:
                    boundary[(e0, 0)] = tags[0]
                if i == n - 1:
                    boundary[(e0, 1)] = tags[1]
                if j == n - 1:
                    boundary[(e0 + 1, 1)] = tags[2]
                if i == 0:
                    boundary[(e0 + 1, 2)] = tags[3]
            else:
                if j == 0:
                    boundary[(e0, 0)] = tags[0]
                if i == 0:
                    boundary[(e0, 2)] = tags[3]
                if i == n - 1:
                    boundary[(e0 + 1, 0)] = tags[1]
                if j == n - 1:
                    boundary[(e0 + 1, 1)] = tags[2]
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g)
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)
    return _elevate(verts, np.array(corners), boundary, geom_degree, mapping)


def _elevate(verts, corners, boundary, kg, mapping):
    """Add equispaced high-order geometry nodes (shared on edges) and apply ``mapping``."""
    if kg == 1:
        nodes = verts.copy()
        elements = corners
    else:
        ref = order_nodes(equispaced_nodes(kg))
        lam = np.stack([1 - ref[:, 0] - ref[:, 1], ref[:, 0], ref[:, 1]], axis=1)
        lookup = {}
        nodes = []
        elements = np.empty((len(corners), len(ref)), dtype=int)
        scale = 10 ** 10
        for e, tri in enumerate(corners):
            pts = lam @ verts[tri]
            for a, p in enumerate(pts):
                key = (round(p[0] * scale), round(p[1] * scale))
                if key not in lookup:
                    lookup[key] = len(nodes)
                    nodes.append(p)
                elements[e, a] = lookup[key]
        nodes = np.array(nodes)
    if mapping is not None:
        X, Y = mapping(nodes[:, 0], nodes[:, 1])
        nodes = np.stack([X, Y], axis=1)
    return Mesh(nodes, elements, boundary, geom_degree=kg)


def square_level(level, base=2, **kwargs):
    """Level ``L >= 1`` of the nested uniform family: ``base * 2^(L-1)`` cells per side."""
    if level < 1:
        raise ValueError("mesh levels start at 1")
    return unit_square(base * 2 ** (level - 1), **kwargs)


def wedge_channel(nx=12, ny=6, length=3.0, height=1.5, ramp_start=0.75, angle_deg=15.0):
    """Channel whose lower wall turns into a compression ramp.

    Tags: ``inflow`` (left), ``outflow`` (right), ``wall`` (bottom),
    ``top`` (upper boundary).
    """
    tan = math.tan(math.radians(angle_deg))

    def mapping(xr, yr):
        x = xr * length
        yb = np.where(x > ramp_start, (x - ramp_start) * tan, 0.0)
        return x, yb + yr * (height - yb)

    verts, corners, boundary = _structured_rect(nx, ny, ("wall", "outflow", "top", "inflow"))
    return _elevate(verts, corners, boundary, 1, mapping)


def _structured_rect(nx, ny, tags):
    corners = []
    boundary = {}
    idx = lambda i, j: j * (nx + 1) + i
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            e0 = len(corners)
            corners += [(a, b, c), (a, c, d)]
            if j == 0:
                boundary[(e0, 0)] = tags[0]
            if i == nx - 1:
                boundary[(e0, 1)] = tags[1]
            if j == ny - 1:
                boundary[(e0 + 1, 1)] = tags[2]
            if i == 0:
                boundary[(e0 + 1, 2)] = tags[3]
    gx = np.linspace(0.0, 1.0, nx + 1)
    gy = np.linspace(0.0, 1.0, ny + 1)
    X, Y = np.meshgrid(gx, gy)
    return np.stack([X.ravel(), Y.ravel()], axis=1), np.array(corners), boundary


# -- plain-text format ---------------------------------------------------------

def write_mesh(mesh, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"mesh 2d k={mesh.geom_degree}\n")
        fh.write(f"nodes {len(mesh.nodes)}\n")
        for x, y in mesh.nodes:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"elements {mesh.n_elements}\n")
        for row in mesh.elements:
            fh.write(" ".join(str(int(i)) for i in row) + "\n")
        items = sorted(mesh.boundary_tags.items())
        fh.write(f"boundary {len(items)}\n")
        for (e, f), tag in items:
            fh.write(f"{e} {f} {tag}\n")


def parse_mesh(text, source="<string>"):
    """Parse the plain-text mesh format; errors carry ``source:line``."""
    lines = text.splitlines()
    pos = 0

    def fail(msg, lineno=None):
        where = f"{source}:{lineno if lineno is not None else pos + 1}"
        raise MeshFormatError(f"{where}: {msg}")

    def next_line():
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            fail("unexpected end of file")
        tokens = lines[pos].split()
        pos += 1
        return tokens, pos

    def header(name):
        tokens, ln = next_line()
        if len(tokens) != 2 or tokens[0] != name:
            fail(f"expected '{name} <count>'", ln)
        try:
            count = int(tokens[1])
        except ValueError:
            fail(f"invalid count {tokens[1]!r}", ln)
        if count < 0:
            fail("negative count", ln)
        return count

    tokens, ln = next_line()
    if len(tokens) != 3 or tokens[0] != "mesh" or tokens[1] != "2d" or not tokens[2].startswith("k="):
        fail("expected 'mesh 2d k=<degree>'", ln)
    try:
        kg = int(tokens[2][2:])
    except ValueError:
        fail(f"invalid geometry degree {tokens[2]!r}", ln)
    if kg < 1:
        fail("geometry degree must be >= 1", ln)

    n = header("nodes")
    nodes = np.empty((n, 2))
    for i in range(n):
        tokens, ln = next_line()
        if len(tokens) != 2:
            fail("expected 'x y'", ln)
        try:
            nodes[i] = [float(t) for t in tokens]
        except ValueError:
            fail("non-numeric coordinate", ln)

    n_geo = n_nodes(kg)
    m = header("elements")
    elements = np.empty((m, n_geo), dtype=int)
    for i in range(m):
        tokens, ln = next_line()
        if len(tokens) != n_geo:
            fail(f"expected {n_geo} node indices", ln)
        try:
            elements[i] = [int(t) for t in tokens]
        except ValueError:
            fail("non-integer node index", ln)
        if elements[i].min() < 0 or elements[i].max() >= n:
            fail("node index out of range", ln)

    b = header("boundary")
    boundary = {}
    for _ in range(b):
        tokens, ln = next_line()
        if len(tokens) != 3:
            fail("expected 'elem local_face tag'", ln)
        try:
            e, f = int(tokens[0]), int(tokens[1])
        except ValueError:
            fail("non-integer element or face id", ln)
        if not (0 <= e < m) or f not in (0, 1, 2):
            fail("element or local face out of range", ln)
        if (e, f) in boundary:
            fail(f"duplicate boundary entry for element {e} face {f}", ln)
        boundary[(e, f)] = tokens[2]

    for j in range(pos, len(lines)):
        if lines[j].strip():
            fail("trailing content after boundary block", j + 1)
    try:
        return Mesh(nodes, elements, boundary, geom_degree=kg)
    except (NonConforming, UntaggedBoundary, InvertedElement, MeshFormatError) as exc:
        raise type(exc)(f"{source}: {exc}") from None


def read_mesh(path):
    with open(path, encoding="utf-8") as fh:
        return parse_mesh(fh.read(), source=str(path))
