import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgrte.errors import ArgumentError
from sgrte.wavelet1d import (Basis1D, build_mother_wavelets, build_transfer, gauss01, hier_size,
                             legendre01, wavelet_at)


@pytest.mark.parametrize("k", range(5))
def test_mother_wavelets_orthonormal_and_vanishing_moments(k):
    mw = build_mother_wavelets(k)
    x, w = gauss01(k + 3)
    x = np.concatenate([x / 2, 0.5 + x / 2])
    w = np.concatenate([w, w]) / 2
    V = mw.values(x)
    assert np.allclose((V * w[:, None]).T @ V, np.eye(k + 1), atol=1e-12)
    # orthogonal to all polynomials of degree <= k
    P = legendre01(k, x)
    assert np.abs((V * w[:, None]).T @ P).max() < 1e-12


@pytest.mark.parametrize("N,k", [(0, 0), (1, 1), (3, 2), (4, 3), (2, 4)])
def test_hierarchical_basis_orthonormal(N, k):
    b = Basis1D(N, k)
    assert b.H == hier_size(N, k) == (k + 1) * 2**N
    x, P = b.projector(k + 2)
    assert np.allclose(P @ b.values(x), np.eye(b.H), atol=1e-12)


@pytest.mark.parametrize("N,k", [(2, 1), (3, 2)])
def test_transfer_is_orthogonal(N, k):
    T = build_transfer(N, k).T.toarray()
    assert np.allclose(T.T @ T, np.eye(T.shape[1]), atol=1e-12)


def test_half_open_cells():
    # level-2 cells are (0, 1/2] and (1/2, 1]; x = 0 joins the first cell
    k = 1
    left = wavelet_at(k, 2, 0, 1, 0.5)
    inside_left = wavelet_at(k, 2, 0, 1, 0.5 - 1e-12)
    assert left != 0.0 and abs(left - inside_left) < 1e-9
    assert wavelet_at(k, 2, 1, 1, 0.5) == 0.0
    assert wavelet_at(k, 2, 1, 1, 0.5 + 1e-12) != 0.0
    assert wavelet_at(k, 2, 0, 0, 0.0) != 0.0


def test_trace_matches_values():
    b = Basis1D(3, 2)
    assert np.allclose(b.trace(0), b.values([0.0])[0])
    assert np.allclose(b.trace(1), b.values([1.0])[0])


def test_out_of_range_point():
    with pytest.raises(ArgumentError):
        Basis1D(2, 1).values([1.5])


@given(st.integers(0, 3), st.integers(0, 4), st.lists(st.floats(-2, 2), min_size=1, max_size=5))
def test_polynomials_reproduced_by_projection(k, N, c):
    # degree <= k polynomials live in V_0 and are reproduced exactly
    coef = np.array(c[: k + 1])
    b = Basis1D(N, k)
    x, P = b.projector(k + 2)
    f = np.polynomial.polynomial.polyval(x, coef)
    y = np.linspace(0, 1, 17)
    assert np.allclose(b.values(y) @ (P @ f), np.polynomial.polynomial.polyval(y, coef), atol=1e-10)


@given(st.integers(1, 5), st.integers(0, 3))
def test_derivative_consistent_with_values(N, k):
    b = Basis1D(N, k)
    rng = np.random.default_rng(N * 7 + k)
    x = rng.uniform(0.01, 0.99, 20)
    h = 1e-6
    # skip points whose stencil crosses a cell boundary
    cell = np.floor(x * 2**N)
    ok = (np.floor((x - h) * 2**N) == cell) & (np.floor((x + h) * 2**N) == cell)
    fd = (b.values(x[ok] + h) - b.values(x[ok] - h)) / (2 * h)
    assert np.allclose(fd, b.derivs(x[ok]), rtol=1e-5, atol=1e-4 * 2 ** (1.5 * N))
