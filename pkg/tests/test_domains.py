import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgrte.errors import GeometryError
from sgrte.domains import (TriangleSpace, make_circle, make_domain, make_lshape, make_unit_box,
                           ref_triangle_moment, triangle_orthobasis, triangle_rule)


@pytest.mark.parametrize("k", range(5))
def test_triangle_basis_orthonormal(k):
    tb = triangle_orthobasis(k)
    assert len(tb) == (k + 1) * (k + 2) // 2
    r, s, w = triangle_rule(k + 2)
    V = tb(r, s)
    assert np.allclose((V * w[:, None]).T @ V, np.eye(len(tb)), atol=1e-10)


def test_triangle_rule_exactness():
    r, s, w = triangle_rule(5)
    for a in range(5):
        for b in range(5 - a):
            assert np.isclose(np.sum(w * r**a * s**b), ref_triangle_moment(a, b), atol=1e-15)


def test_first_basis_function_constant():
    tb = triangle_orthobasis(2)
    assert np.allclose(tb(np.array([0.1, 0.7]), np.array([0.2, 0.1]))[:, 0], np.sqrt(2))


def test_clockwise_triangle_rejected():
    with pytest.raises(GeometryError):
        TriangleSpace(1, [[0, 0], [0, 1], [1, 0]])
    with pytest.raises(GeometryError):
        TriangleSpace(1, [[0, 0], [1, 1], [2, 2]])


@given(st.integers(0, 3), st.floats(0.1, 2), st.floats(0.1, 2), st.floats(-1, 1))
def test_physical_triangle_projection_exact_for_polynomials(k, a, b, c):
    ts = TriangleSpace(k, [[0.0, 0.0], [a, 0.0], [0.3 * c, b]])
    f = lambda x: (1 + x[..., 0] - 2 * x[..., 1]) ** k
    coeffs = ts.project(f)
    x, _ = ts.quadrature(k + 3)
    assert np.allclose(ts.evaluate(coeffs, x), f(x), atol=1e-9)


def test_triangle_outward_normals():
    ts = TriangleSpace(1, [[0, 0], [1, 0], [0, 1]])
    c = ts.vertices.mean(0)
    for e in range(3):
        a, b = ts.edge(e)
        assert ts.edge_normal(e) @ ((a + b) / 2 - c) > 0


@pytest.mark.parametrize("d,N,expected", [(2, 1, (4, 8)), (3, 1, (12, 24)), (2, 0, (0, 4)), (2, 2, (24, 16))])
def test_box_face_counts(d, N, expected):
    assert make_unit_box(d, 1, N).face_counts() == expected


def test_lshape_layout():
    topo = make_lshape(1, 1)
    assert np.isclose(topo.area(), 3.0)
    assert topo.n_elements == 12
    interior, boundary = topo.face_counts()
    # 4 per square plus 2 per glued side
    assert interior == 3 * 4 + 2 * 2
    assert boundary == 16


def test_circle_layout():
    topo = make_circle(1, 1)
    assert len(topo.patches) == 9
    # polygon area lies between the inscribed square and the disk
    R = topo.radius
    assert 2 * R**2 < topo.area() < np.pi * R**2
    verts = np.vstack([p.space.vertices for p in topo.patches[1:]])
    d = np.hypot(verts[:, 0] - topo.center[0], verts[:, 1] - topo.center[1])
    assert np.all(d <= R * (1 + 1e-12))


def test_boundary_normals_outward():
    for topo in (make_unit_box(2, 1, 1), make_lshape(1, 1), make_circle(1, 1)):
        center = np.mean([f.center for f in topo.fine_faces()], axis=0)
        for f in topo.fine_faces():
            if f.right is None and topo.name != "lshape":
                assert f.normal @ (f.center - center) > 0
            assert np.isclose(np.linalg.norm(f.normal), 1.0)


def test_fine_face_measures_telescope():
    # sum of boundary face measures is the perimeter
    topo = make_lshape(2, 2)
    per = sum(f.measure for f in topo.fine_faces() if f.right is None)
    assert np.isclose(per, 8.0)
    topo = make_unit_box(3, 1, 2)
    assert np.isclose(sum(f.measure for f in topo.fine_faces() if f.right is None), 6.0)


def test_make_domain_unknown():
    with pytest.raises(Exception):
        make_domain("torus", 2, 1, 1)
