"""Phase functions and the discrete scattering kernel.

The kernel matrix is ``G[l, i] = w_i g(omega_l . omega_i)``; the scattering
source seen by direction l is ``sigma_s * sum_i G[l, i] u_i``.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ArgumentError, AssumptionError, DataError

log = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-10
_T_SLACK = 1e-12
_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class PhaseFunction:
    """Normalized phase function g(t), t the cosine of the scattering angle.

    kind is one of ``isotropic``, ``hg`` (Henyey-Greenstein), ``sam``
    (simplified approximate Mie) or ``table`` (piecewise-linear g(t)).
    """

    kind: str = "isotropic"
    eta: float = 0.0
    table: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("isotropic", "hg", "sam", "table"):
            raise ArgumentError(f"unknown phase function kind {self.kind!r}")
        if self.kind in ("hg", "sam") and not -1.0 < self.eta < 1.0:
            raise ArgumentError("anisotropy factor eta must lie in (-1, 1)")
        if self.kind == "table":
            t, g = (np.asarray(a, dtype=float) for a in self.table)
            if t[0] != -1.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0) or np.any(g < 0):
                raise DataError("tabulated g needs increasing t from -1 to 1 and g >= 0")
        err = abs(self.normalization() - 1.0)
        if err > NORMALIZATION_TOL:
            raise DataError(f"phase function not normalized: 2*pi*int g dt - 1 = {err:.3e}")

    @classmethod
    def from_file(cls, path):
        t, g = np.loadtxt(path, unpack=True)
        return cls("table", table=(tuple(t), tuple(g)))

    @property
    def sam_index(self):
        return 2.0 * self.eta / (1.0 - self.eta)

    def __call__(self, t):
        return phase_eval(self, t)

    def normalization(self):
        """``2*pi * int_{-1}^{1} g(t) dt`` by adaptive quadrature."""
        if self.kind == "table":
            t, g = (np.asarray(a) for a in self.table)
            return 2 * np.pi * integrate.trapezoid(g, t)
        if self.kind == "sam":
            # (1+t)^n_p is singular at t = -1 for eta < 0; integrate with an algebraic weight
            p = self.sam_index
            ks = (p + 1) / 2 ** (p + 1) / (2 * np.pi)
            val, _ = integrate.quad(lambda t: ks, -1.0, 1.0, weight="alg", wvar=(p, 0.0),
                                    epsabs=1e-14, epsrel=1e-13)
            return 2 * np.pi * val
        pts = [1.0 - 1e-3] if self.kind == "hg" and self.eta > 0.5 else None
        val, _ = integrate.quad(lambda t: float(phase_eval(self, t)), -1.0, 1.0,
                                epsabs=1e-14, epsrel=1e-13, limit=200, points=pts)
        return 2 * np.pi * val

    def first_moment(self):
        """Mean cosine ``2*pi * int t g(t) dt``.

        By the Funk-Hecke formula, ``int g(w.w') s3' dsigma(w') = first_moment * s3``.
        """
        if self.kind == "isotropic":
            return 0.0
        if self.kind == "hg":
            return self.eta
        if self.kind == "sam":
            p = self.sam_index
            return p / (p + 2.0)
        t, g = (np.asarray(a) for a in self.table)
        return 2 * np.pi * integrate.trapezoid(t * g, t)


def phase_eval(pf, t):
    t = np.asarray(t, dtype=float)
    if np.any((t < -1 - _T_SLACK) | (t > 1 + _T_SLACK)):
        raise ArgumentError("cosine argument outside [-1, 1]")
    t = np.clip(t, -1.0, 1.0)
    if pf.kind == "isotropic":
        return np.full_like(t, 1.0 / (4 * np.pi))
    if pf.kind == "hg":
        eta = pf.eta
        denom = 1 + eta**2 - 2 * eta * t
        if np.any(denom < _DENOM_FLOOR):
            raise ArgumentError(f"HG denominator below {_DENOM_FLOOR} (eta={eta}, t near sign(eta))")
        return (1 - eta**2) / (4 * np.pi * denom**1.5)
    if pf.kind == "sam":
        p = pf.sam_index
        ks = (p + 1) / 2 ** (p + 1) / (2 * np.pi)
        return ks * (1 + t) ** p
    tt, gg = pf.table
    return np.interp(t, tt, gg)


@dataclass
class KernelMatrix:
    G: np.ndarray  # (L, L)
    row_sums: np.ndarray
    m: float


@dataclass
class AssumptionReport:
    """Outcome of the check ``sigma_t - m*sigma_s >= c0' > 0``."""

    m: float
    margin: float
    location: object = None

    @property
    def ok(self):
        return self.margin > 0


def kernel_matrix(pf, oset):
    cos = np.clip(oset.directions @ oset.directions.T, -1.0, 1.0)
    with np.errstate(divide="ignore"):
        G = phase_eval(pf, cos) * oset.weights[None, :]
    if not np.all(np.isfinite(G)):
        raise DataError("phase function is infinite at an ordinate pair (SAM with eta < 0 at t = -1)")
    row = G.sum(axis=1)
    return KernelMatrix(G, row, float(row.max()))


def build_kernel(pf, oset, sigma_s, sigma_t, samples=None, strict=True):
    """Kernel matrix plus the coercivity-margin report.

    sigma_s and sigma_t are constants or callables of points (n, d); for
    callables, ``samples`` (n, d) are the points where the margin is checked
    (normally the volume quadrature points).  With ``strict`` a non-positive
    margin raises :class:`AssumptionError`; otherwise it only warns.
    """
    K = kernel_matrix(pf, oset)
    if callable(sigma_s) or callable(sigma_t):
        if samples is None:
            raise ArgumentError("spatially varying cross sections need sample points")
        ss = np.broadcast_to(sigma_s(samples) if callable(sigma_s) else sigma_s, len(samples))
        st = np.broadcast_to(sigma_t(samples) if callable(sigma_t) else sigma_t, len(samples))
    else:
        ss, st, samples = np.array([sigma_s]), np.array([sigma_t]), None
    if np.any(ss < 0):
        raise DataError("sigma_s must be nonnegative")
    margin = st - K.m * ss
    i = int(np.argmin(margin))
    loc = None if samples is None else np.asarray(samples[i])
    report = AssumptionReport(K.m, float(margin[i]), loc)
    if not report.ok:
        msg = (f"sigma_t - m*sigma_s = {report.margin:.6g} <= 0 (m = {K.m:.6g})"
               + ("" if loc is None else f" at x = {loc}"))
        if strict:
            raise AssumptionError(msg, margin=report.margin, location=loc)
        warnings.warn(msg, stacklevel=2)
        log.warning(msg)
    return K, report
