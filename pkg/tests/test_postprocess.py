import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgrte.assembly import build_system
from sgrte.domains import make_unit_box
from sgrte.ordinates import build_sn
from sgrte.postprocess import (UndefinedError, discrete_norm, photon_flux, projection_errors, read_grid,
                               table_csv, weighted_relative_error, write_grid)
from sgrte.problems import example1, example5_source2d
from sgrte.solver import SolutionField, gauss_seidel
from sgrte.sparse_space import SparseSpace


def sines(x):
    return np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])


def test_projection_errors_decrease():
    e = [projection_errors(SparseSpace(2, 1, N), sines)[0] for N in range(1, 5)]
    assert all(b < a for a, b in zip(e, e[1:]))


def test_projection_of_space_member_is_exact():
    sp = SparseSpace(2, 2, 2)
    l2, _ = projection_errors(sp, lambda x: x[..., 0] ** 2 * x[..., 1])
    assert l2 < 1e-13


def test_relative_error_of_exact_coefficients():
    # coefficients of the projection of u give the projection error
    pr = example1()
    topo = make_unit_box(3, 2, 1)
    oset = build_sn(2)
    sp = topo.patches[0].space
    c = sp.project(lambda x: pr.exact(x, None))
    sol = SolutionField(np.tile(c, (len(oset), 1)), topo, oset)
    l2, _ = projection_errors(sp, lambda x: pr.exact(x, None))
    assert np.isclose(weighted_relative_error(sol, pr.exact), l2 / np.sqrt(1 / 8), rtol=1e-10)
    assert np.isclose(discrete_norm(sol), np.sqrt(4 * np.pi) * np.linalg.norm(c))


def test_relative_error_undefined_for_zero_exact():
    topo = make_unit_box(2, 0, 0)
    oset = build_sn(2)
    sol = SolutionField(np.zeros((len(oset), topo.M)), topo, oset)
    with pytest.raises(UndefinedError):
        weighted_relative_error(sol, lambda x, om: np.zeros(x.shape[:-1]))


def test_flux_of_constant_field():
    topo = make_unit_box(2, 1, 1)
    oset = build_sn(2)
    sp = topo.patches[0].space
    c = sp.project(lambda x: np.full(x.shape[:-1], 3.0))
    sol = SolutionField(np.tile(c, (len(oset), 1)), topo, oset)
    q = photon_flux(sol, [np.linspace(0, 1, 5), np.linspace(0, 1, 4)])
    assert q.shape == (5, 4) and np.allclose(q, 3.0)


def test_flux_nan_outside_mesh():
    pr = example5_source2d()
    topo = make_unit_box(2, 1, 1)
    sol = gauss_seidel(build_system(pr, topo, build_sn(2)))
    q = photon_flux(sol, [np.array([0.5, 1.5]), np.array([0.5])])
    assert np.isfinite(q[0, 0]) and np.isnan(q[1, 0])


def test_grid_roundtrip(tmp_path):
    g = [np.linspace(0, 1, 3), np.linspace(-1, 2, 4)]
    v = np.random.default_rng(0).normal(size=(3, 4))
    write_grid(tmp_path / "g.txt", g, v)
    g2, v2 = read_grid(tmp_path / "g.txt")
    assert np.array_equal(v, v2) and all(np.allclose(a, b) for a, b in zip(g, g2))


@given(st.lists(st.floats(1e-12, 1e3), min_size=1, max_size=4))
def test_table_csv_five_digits(vals):
    rows = [{"N": i, "error": v} for i, v in enumerate(vals)]
    lines = table_csv(rows, ["N", "error"]).splitlines()
    assert lines[0] == "N,error" and len(lines) == len(vals) + 1
    for line, v in zip(lines[1:], vals):
        txt = line.split(",")[1]
        assert len(txt.split("e")[0].replace(".", "")) == 5
        assert abs(float(txt) - v) <= 5e-5 * v
