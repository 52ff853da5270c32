import math

import numpy as np
import pytest

from hdgflow import basis as B
from hdgflow.errors import (InvertedElement, MeshFormatError, NonConforming, UnsupportedShape,
                            UntaggedBoundary)
from hdgflow.mesh import (Mesh, build_skeleton, parse_mesh, read_mesh, square_level, unit_square,
                          wedge_channel, write_mesh)

LOCAL_DIMENSION = {
    "simplex2d": [27, 54, 90, 135, 189, 252],
    "simplex3d": [56, 140, 280, 490, 784, 1176],
    "parallelepiped2d": [36, 81, 144, 225, 324, 441],
    "parallelepiped3d": [112, 378, 896, 1750, 3024, 4802],
}


class TestSkeleton:
    def test_two_triangles(self):
        sk = build_skeleton([[0, 1, 2], [0, 2, 3]],
                            {(0, 0): "a", (0, 1): "a", (1, 1): "a", (1, 2): "a"})
        assert (sk.n_faces, sk.n_interior) == (5, 1)

    def test_single_triangle(self):
        sk = build_skeleton([[0, 1, 2]], {(0, f): "w" for f in range(3)})
        assert (sk.n_faces, sk.n_interior, sk.n_boundary) == (3, 0, 3)

    @pytest.mark.parametrize("level", [1, 2, 3])
    def test_euler_count(self, level):
        m = square_level(level, base=4)
        sk = m.skeleton
        assert sk.n_faces == (3 * m.n_elements + sk.n_boundary) // 2
        n = 4 * 2 ** (level - 1)
        assert sk.n_boundary == 4 * n

    def test_every_element_face_is_linked(self):
        sk = square_level(2).skeleton
        assert np.all(sk.elem_faces >= 0)
        counts = np.bincount(sk.elem_faces.ravel())
        assert set(counts[sk.face_elem[:, 1] >= 0]) == {2}

    def test_nonconforming(self):
        with pytest.raises(NonConforming):
            build_skeleton([[0, 1, 2], [1, 0, 3], [0, 1, 4]], {})

    def test_untagged_boundary(self):
        with pytest.raises(UntaggedBoundary):
            build_skeleton([[0, 1, 2]], {(0, 0): "w", (0, 1): "w"})


class TestLocalDimension:
    @pytest.mark.parametrize("shape", sorted(LOCAL_DIMENSION))
    def test_table(self, shape):
        assert [B.local_dimension(k, shape) for k in range(1, 7)] == LOCAL_DIMENSION[shape]

    def test_unknown_shape(self):
        with pytest.raises(UnsupportedShape):
            B.local_dimension(2, "prism")


class TestGeometry:
    def test_reference_identity(self):
        m = Mesh(np.array([[0.0, 0], [1, 0], [0, 1]]), np.array([[0, 1, 2]]),
                 {(0, f): "w" for f in range(3)})
        x, J, det = m.map_element(0, np.array([0.2, 0.3]))
        np.testing.assert_allclose(x, [0.2, 0.3])
        np.testing.assert_allclose(J, np.eye(2), atol=1e-14)
        assert det == pytest.approx(1.0)

    def test_affine_determinant(self):
        m = Mesh(np.array([[0.0, 0], [2, 0], [0, 1]]), np.array([[0, 1, 2]]),
                 {(0, f): "w" for f in range(3)})
        _, _, det = m.geometry(np.array([[0.1, 0.1], [0.6, 0.2], [0.3, 0.3]]))
        np.testing.assert_allclose(det, 2.0, rtol=1e-14)

    @pytest.mark.parametrize("mesh", [square_level(2), wedge_channel(),
                                      unit_square(3, geom_degree=3,
                                                  mapping=lambda x, y: (x + 0.1 * y * y, y + 0.05 * np.sin(np.pi * x)))])
    def test_area_by_quadrature(self, mesh):
        qp, qw = B.triangle_quadrature(6)
        _, _, det = mesh.geometry(qp)
        areas = det @ qw
        c = mesh.corner_coords
        if mesh.geom_degree == 1:
            d1, d2 = c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]
            np.testing.assert_allclose(areas, 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]),
                                       rtol=1e-12)
        # total area of the mapped square is preserved by the shear-like mapping
        if mesh.geom_degree == 3:
            assert areas.sum() == pytest.approx(1.0, abs=1e-12)

    def test_inverted_element(self):
        with pytest.raises(InvertedElement):
            Mesh(np.array([[0.0, 0], [0, 1], [1, 0]]), np.array([[0, 1, 2]]),
                 {(0, f): "w" for f in range(3)})


class TestQuadrature:
    @pytest.mark.parametrize("degree", range(0, 12))
    def test_monomials(self, degree):
        qp, qw = B.triangle_quadrature(degree)
        for i in range(degree + 1):
            j = degree - i
            exact = math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)
            assert np.sum(qw * qp[:, 0] ** i * qp[:, 1] ** j) == pytest.approx(exact, rel=1e-13)

    @pytest.mark.parametrize("degree", [1, 5, 9])
    def test_segment(self, degree):
        t, w = B.segment_quadrature(degree)
        for p in range(degree + 1):
            assert np.sum(w * t ** p) == pytest.approx(1 / (p + 1), rel=1e-13)


class TestBasis:
    @pytest.mark.parametrize("k", range(1, 7))
    def test_lagrange_property(self, k):
        ref = B.reference_element(k)
        N, _ = ref.basis.tabulate(ref.nodes)
        np.testing.assert_allclose(N, np.eye(ref.n_en), atol=1e-12)

    @pytest.mark.parametrize("k", range(1, 6))
    def test_partition_of_unity_and_gradients(self, k):
        ref = B.reference_element(k)
        np.testing.assert_allclose(ref.N.sum(axis=1), 1, atol=1e-12)
        np.testing.assert_allclose(ref.dN.sum(axis=1), 0, atol=1e-10)
        # gradient of x reproduced exactly
        np.testing.assert_allclose(np.einsum("qad,a->qd", ref.dN, ref.nodes[:, 0]),
                                   np.tile([1.0, 0.0], (len(ref.qp), 1)), atol=1e-10)

    @pytest.mark.parametrize("k", range(1, 6))
    def test_modal_orthonormality(self, k):
        ref = B.reference_element(k)
        np.testing.assert_allclose(ref.V.T @ ref.mass @ ref.V, np.eye(ref.n_en), atol=1e-12)

    @pytest.mark.parametrize("k,n_low,n_high", [(1, 1, 2), (2, 3, 3), (3, 6, 4), (4, 10, 5)])
    def test_projection_dimensions(self, k, n_low, n_high):
        _, P = B.modal_projection_matrices(k)
        assert int(round(np.trace(P))) == n_high
        assert P.shape[0] - n_high == n_low
        assert n_low + n_high == (k + 1) * (k + 2) // 2

    def test_gradient_finite_difference(self):
        pts = np.array([[0.2, 0.3], [0.1, 0.7]])
        h = 1e-6
        for k in (2, 4):
            psi, dpsi = B.dubiner(k, pts)
            fx = (B.dubiner(k, pts + [h, 0])[0] - B.dubiner(k, pts - [h, 0])[0]) / (2 * h)
            fy = (B.dubiner(k, pts + [0, h])[0] - B.dubiner(k, pts - [0, h])[0]) / (2 * h)
            np.testing.assert_allclose(dpsi[..., 0], fx, atol=1e-6)
            np.testing.assert_allclose(dpsi[..., 1], fy, atol=1e-6)

    def test_face_nodes_on_faces(self):
        ref = B.reference_element(3)
        for f in range(3):
            a, b = B.FACE_VERTICES[f]
            pts = B.face_points(f, ref.trace_nodes)
            np.testing.assert_allclose(ref.nodes[ref.face_nodes[f]], pts, atol=1e-12)


class TestMeshIO:
    def test_roundtrip(self, tmp_path):
        m = unit_square(2, geom_degree=2, mapping=lambda x, y: (x, y + 0.1 * x * (1 - x)))
        path = tmp_path / "m.txt"
        write_mesh(m, path)
        m2 = read_mesh(path)
        np.testing.assert_array_equal(m2.elements, m.elements)
        np.testing.assert_array_equal(m2.nodes, m.nodes)
        assert m2.boundary_tags == m.boundary_tags

    @pytest.mark.parametrize("text,line", [
        ("mesh 2d k=1\nnodes 1\n0 0 0\n", 3),
        ("mesh 3d k=1\n", 1),
        ("mesh 2d k=1\nnodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 5\n", 7),
    ])
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(MeshFormatError, match=f"m.txt:{line}:"):
            parse_mesh(text, source="m.txt")

    def test_mirror_diagonal_symmetry(self):
        m = unit_square(4, diagonal="mirror")
        c = m.corner_coords.mean(axis=1)
        mirrored = np.c_[c[:, 0], 1 - c[:, 1]]
        d = np.linalg.norm(c[:, None] - mirrored[None], axis=-1)
        assert np.all(d.min(axis=1) < 1e-12)
