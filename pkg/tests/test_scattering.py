import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from sgrte.errors import ArgumentError, AssumptionError, DataError
from sgrte.ordinates import build_sn, product_rule
from sgrte.scattering import PhaseFunction, build_kernel, kernel_matrix


@pytest.mark.parametrize("kind", ["hg", "sam"])
@pytest.mark.parametrize("eta", [0.0, 0.1, -0.1, 0.5, -0.5, 0.9])
def test_normalization(kind, eta):
    pf = PhaseFunction(kind, eta)
    assert abs(pf.normalization() - 1.0) < 1e-10
    # independent oracle
    val, _ = integrate.quad(lambda t: pf(np.array(t)), -1, 1, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert abs(2 * np.pi * val - 1.0) < 1e-9


@given(st.floats(-0.9, 0.9))
def test_hg_first_moment_is_eta(eta):
    pf = PhaseFunction("hg", eta)
    assert np.isclose(pf.first_moment(), eta, atol=1e-10)


def test_sam_first_moment():
    pf = PhaseFunction("sam", 0.5)
    p = pf.sam_index
    assert np.isclose(pf.first_moment(), p / (p + 2))


def test_hg_scattering_of_linear_function():
    # int g(omega . w) w_3 dw = eta * omega_3 for HG
    pf = PhaseFunction("hg", 0.3)
    dirs, w = product_rule(64, 128)
    omega = np.array([0.3, -0.4, np.sqrt(1 - 0.25)])
    val = np.sum(w * pf(dirs @ omega) * dirs[:, 2])
    assert np.isclose(val, 0.3 * omega[2], atol=1e-10)


def test_isotropic_kernel_rows():
    K = kernel_matrix(PhaseFunction(), build_sn(4))
    assert np.allclose(K.row_sums, 1.0)
    assert np.isclose(K.m, 1.0)


def test_margin_example1():
    _, rep = build_kernel(PhaseFunction(), build_sn(2), 1.0, 2.0)
    assert abs(rep.margin - 1.0) < 1e-9


def test_margin_violation():
    with pytest.raises(AssumptionError) as ei:
        build_kernel(PhaseFunction(), build_sn(2), 2.0, 1.0)
    assert ei.value.margin < 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, rep = build_kernel(PhaseFunction(), build_sn(2), 2.0, 1.0, strict=False)
    assert rep.margin == pytest.approx(-1.0)


def test_strong_forward_peak_needs_override():
    # HG eta = 0.9 on S2 overshoots the row sum far beyond 1
    pf = PhaseFunction("hg", 0.9)
    with pytest.raises(AssumptionError):
        build_kernel(pf, build_sn(2), 1.0, 3.0)


def test_sam_negative_eta_infinite_on_symmetric_sets():
    with pytest.raises(DataError):
        kernel_matrix(PhaseFunction("sam", -0.5), build_sn(2))


def test_bad_eta():
    with pytest.raises(ArgumentError):
        PhaseFunction("hg", 1.0)


def test_unnormalized_table():
    with pytest.raises(DataError):
        PhaseFunction("table", table=((-1.0, 1.0), (1.0, 1.0)))
    pf = PhaseFunction("table", table=((-1.0, 1.0), (1 / (4 * np.pi), 1 / (4 * np.pi))))
    assert np.isclose(pf.normalization(), 1.0)
