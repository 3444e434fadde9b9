"""Orthonormal scaling functions and Alpert multiwavelets on [0, 1].

Cells are half-open, ``(a, b]``, with ``x = 0`` attached to the first cell.
Every piecewise polynomial is stored through its coefficients in the
orthonormal (scaled Legendre) basis of each interval, so mass matrices are
identities and changes of basis are orthogonal.

The hierarchical 1-D basis of level ``N`` is ordered level-major:

    level 0:  i = 0..k                      (Legendre on [0, 1])
    level n:  j = 0..2**(n-1)-1, i = 0..k   (wavelets at scale 2**-(n-1))

so the flat index of ``(n, j, i)`` is ``offset(n) + j*(k+1) + i`` with
``offset(0) = 0`` and ``offset(n) = (k+1) * 2**(n-1)``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy import sparse

from .errors import ArgumentError, InternalError

RANK_TOL = 1e-10


def gauss01(q):
    """Gauss-Legendre points and weights on [0, 1]."""
    x, w = npleg.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def legendre01(p_max, t):
    """Orthonormal Legendre values on [0, 1]: ``sqrt(2p+1) P_p(2t-1)``.

    Returns an array of shape ``(len(t), p_max+1)``.
    """
    t = np.asarray(t, dtype=float)
    V = npleg.legvander(2.0 * t - 1.0, p_max)
    return V * np.sqrt(2.0 * np.arange(p_max + 1) + 1.0)


def legendre01_deriv(p_max, t):
    """d/dt of :func:`legendre01`."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (p_max + 1,))
    for p in range(1, p_max + 1):
        c = np.zeros(p + 1)
        c[p] = 1.0
        out[..., p] = 2.0 * np.sqrt(2.0 * p + 1.0) * npleg.legval(2.0 * t - 1.0, npleg.legder(c))
    return out


def locate_cell(x, breakpoints):
    """Index of the half-open interval ``(b_i, b_{i+1}]`` containing x (x = b_0 -> 0)."""
    idx = np.searchsorted(breakpoints, x, side="left") - 1
    return np.clip(idx, 0, len(breakpoints) - 2)


@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise polynomial on [0, 1] in per-interval orthonormal Legendre form."""

    breakpoints: np.ndarray
    coeffs: np.ndarray  # (n_intervals, k+1)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if bp[0] != 0.0 or bp[-1] != 1.0 or np.any(np.diff(bp) <= 0):
            raise ArgumentError("breakpoints must increase strictly from 0 to 1")
        if c.shape[0] != len(bp) - 1:
            raise ArgumentError("need one coefficient row per interval")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        return self.coeffs.shape[1] - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        cell = locate_cell(x, self.breakpoints)
        a = self.breakpoints[cell]
        h = self.breakpoints[cell + 1] - a
        L = legendre01(self.degree, (x - a) / h)
        return np.sum(L * self.coeffs[cell], axis=-1) / np.sqrt(h)

    def inner(self, other, extra=0):
        """L2([0,1]) inner product, exact for the product degree (+ ``extra``)."""
        bp = np.union1d(self.breakpoints, other.breakpoints)
        t, w = gauss01((self.degree + other.degree + extra) // 2 + 1)
        total = 0.0
        for a, b in zip(bp[:-1], bp[1:]):
            x = a + (b - a) * t
            total += (b - a) * np.sum(w * self(x) * other(x))
        return total


def scaling_basis(k, n, j):
    """The k+1 orthonormal Legendre functions supported on cell ``I_n^j``."""
    if n < 0 or not 0 <= j <= 2**n - 1:
        raise ArgumentError(f"cell index j={j} invalid for level n={n}")
    h = 2.0**-n
    a, b = j * h, (j + 1) * h
    bp = np.unique([0.0, a, b, 1.0])
    cell = int(np.searchsorted(bp, a))
    out = []
    for p in range(k + 1):
        c = np.zeros((len(bp) - 1, k + 1))
        c[cell, p] = 1.0
        out.append(PiecewisePoly(bp, c))
    return out


@dataclass(frozen=True)
class MotherWaveletSet:
    """k+1 orthonormal wavelets on [0,1], polynomial on each half.

    ``halves[i, h, p]`` is the coefficient of wavelet i on half h in the
    orthonormal Legendre basis of that half.
    """

    k: int
    halves: np.ndarray

    @property
    def wavelets(self):
        bp = np.array([0.0, 0.5, 1.0])
        return [PiecewisePoly(bp, self.halves[i]) for i in range(self.k + 1)]

    def values(self, y):
        """Values of all wavelets at points y in [0, 1], shape (len(y), k+1)."""
        y = np.asarray(y, dtype=float)
        right = y > 0.5
        t = np.where(right, 2.0 * y - 1.0, 2.0 * y)
        L = legendre01(self.k, t) * np.sqrt(2.0)
        c = np.where(right[:, None, None], self.halves[:, 1, :][None], self.halves[:, 0, :][None])
        return np.einsum("np,nip->ni", L, c)


def _half_projection(k, func):
    # coefficients of func on the two halves of [0,1] in the half-cell bases;
    # exact for polynomials of degree <= k+1
    t, w = gauss01(k + 2)
    out = np.zeros((2, k + 1))
    L = legendre01(k, t) * np.sqrt(2.0)
    for h in range(2):
        x = 0.5 * (h + t)
        out[h] = 0.5 * (w * func(x, h)) @ L
    return out


@lru_cache(maxsize=None)
def build_mother_wavelets(k):
    """Alpert-type mother wavelets of degree k.

    Seeds ``x**i`` times a sign flip on the right half (i = 0..k) are
    Gram-Schmidt orthogonalized against P_k[0,1] and then among themselves.
    Each wavelet is made positive at 0+ (or, if it vanishes there, given a
    positive slope).
    """
    if k < 0:
        raise ArgumentError("degree must be >= 0")
    poly = [
        _half_projection(k, lambda x, h, q=q: legendre01(k, x)[:, q]).ravel()
        for q in range(k + 1)
    ]
    seeds = [
        _half_projection(k, lambda x, h, i=i: (x**i) * (1.0 if h == 0 else -1.0)).ravel()
        for i in range(k + 1)
    ]
    basis = []
    for s in seeds:
        v = s.copy()
        for _ in range(2):
            for b in poly + basis:
                v -= (b @ v) * b
        nrm = np.linalg.norm(v)
        if nrm < RANK_TOL:
            raise InternalError(f"Gram-Schmidt breakdown building degree-{k} wavelets")
        basis.append(v / nrm)

    halves = np.array(basis).reshape(k + 1, 2, k + 1)
    # value and slope of the left-half piece at 0+
    left0 = legendre01(k, [0.0])[0] * np.sqrt(2.0)
    dleft0 = legendre01_deriv(k, [0.0])[0] * np.sqrt(2.0) * 2.0
    for i in range(k + 1):
        val = halves[i, 0] @ left0
        ref = val if abs(val) > 1e-8 else halves[i, 0] @ dleft0
        if ref < 0:
            halves[i] *= -1.0
    halves.setflags(write=False)
    return MotherWaveletSet(k, halves)


def wavelet_at(k, n, j, i, x):
    """``2**((n-1)/2) * psi_i(2**(n-1) x - j)``, zero off its support cell."""
    if n < 1 or not 0 <= j <= 2 ** (n - 1) - 1 or not 0 <= i <= k:
        raise ArgumentError(f"invalid wavelet index (n={n}, j={j}, i={i}) for k={k}")
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ArgumentError("x must lie in [0, 1]")
    scale = 2.0 ** (n - 1)
    y = scale * x - j
    inside = (y > 0.0) & (y <= 1.0)
    if j == 0:
        inside |= x == 0.0
    vals = build_mother_wavelets(k).values(np.clip(np.atleast_1d(y), 0.0, 1.0))[:, i]
    out = np.where(np.atleast_1d(inside), np.sqrt(scale) * vals, 0.0)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def level_offset(n, k):
    return 0 if n == 0 else (k + 1) * 2 ** (n - 1)


def hier_size(N, k):
    return (k + 1) * 2**N


def hier_indices(N, k):
    """(level, cell, poly) arrays for the flat 1-D hierarchical ordering."""
    lv, cl, po = [], [], []
    for n in range(N + 1):
        ncell = 1 if n == 0 else 2 ** (n - 1)
        for j in range(ncell):
            for i in range(k + 1):
                lv.append(n)
                cl.append(j)
                po.append(i)
    return np.array(lv), np.array(cl), np.array(po)


def _hier_values_direct(N, k, x):
    """Values of every hierarchical function at points x strictly inside fine cells."""
    x = np.asarray(x, dtype=float)
    H = hier_size(N, k)
    F = np.zeros((H, x.size))
    F[: k + 1] = legendre01(k, x).T
    mother = build_mother_wavelets(k)
    for n in range(1, N + 1):
        scale = 2.0 ** (n - 1)
        y = scale * x
        jp = np.clip(np.ceil(y).astype(int) - 1, 0, int(scale) - 1)
        vals = mother.values(y - jp) * np.sqrt(scale)
        off = level_offset(n, k)
        rows = off + jp[:, None] * (k + 1) + np.arange(k + 1)[None, :]
        cols = np.broadcast_to(np.arange(x.size)[:, None], rows.shape)
        F[rows, cols] = vals
    return F


@dataclass(frozen=True)
class Transfer1D:
    """Hierarchical -> finest-level elementwise Legendre change of basis.

    Rows are ``cell*(k+1) + p`` on the 2**N cells of level N, columns follow the
    flat hierarchical ordering.
    """

    N: int
    k: int
    T: sparse.csr_matrix


@lru_cache(maxsize=None)
def _transfer_dense(N, k):
    ncell = 2**N
    t, w = gauss01(k + 1)
    h = 1.0 / ncell
    x = ((np.arange(ncell)[:, None] + t[None, :]) * h).ravel()
    F = _hier_values_direct(N, k, x).reshape(-1, ncell, k + 1)  # (H, cell, q)
    phi = legendre01(k, t) / np.sqrt(h)  # (q, p)
    T = h * np.einsum("hcq,q,qp->cph", F, w, phi).reshape(ncell * (k + 1), -1)
    T[np.abs(T) < 1e-13] = 0.0
    T.setflags(write=False)
    return T


def build_transfer(N, k):
    if N < 0:
        raise ArgumentError("N must be >= 0")
    return Transfer1D(N, k, sparse.csr_matrix(_transfer_dense(N, k)))


class Basis1D:
    """Hierarchical 1-D basis up to level N with evaluation helpers on [0, 1]."""

    def __init__(self, N, k):
        self.N, self.k = N, k
        self.H = hier_size(N, k)
        self.ncell = 2**N
        self.levels, self.cells, self.polys = hier_indices(N, k)
        self.T = _transfer_dense(N, k)
        # (cell, p, H) view for row gathers
        self._T3 = self.T.reshape(self.ncell, k + 1, self.H)

    def _elem(self, x, deriv=False):
        x = np.asarray(x, dtype=float).ravel()
        if np.any((x < -1e-12) | (x > 1 + 1e-12)):
            raise ArgumentError("evaluation point outside [0, 1]")
        y = np.clip(x, 0.0, 1.0) * self.ncell
        c = np.clip(np.ceil(y).astype(int) - 1, 0, self.ncell - 1)
        t = y - c
        if deriv:
            L = legendre01_deriv(self.k, t) * self.ncell * np.sqrt(self.ncell)
        else:
            L = legendre01(self.k, t) * np.sqrt(self.ncell)
        return c, L

    def values(self, x):
        """Matrix ``E[r, a] = h_a(x_r)``, shape (len(x), H)."""
        c, L = self._elem(x)
        return np.einsum("np,nph->nh", L, self._T3[c])

    def derivs(self, x):
        c, L = self._elem(x, deriv=True)
        return np.einsum("np,nph->nh", L, self._T3[c])

    def trace(self, side):
        """Values at x = 0 (side 0) or x = 1 (side 1), from inside [0, 1]."""
        return self.values([float(side)])[0]

    def quadrature(self, q):
        """Composite q-point Gauss rule on the fine cells: points, weights."""
        t, w = gauss01(q)
        h = 1.0 / self.ncell
        x = ((np.arange(self.ncell)[:, None] + t[None, :]) * h).ravel()
        return x, np.tile(w * h, self.ncell)

    def projector(self, q):
        """Points x and matrix P with ``P @ f(x) ~= [int_0^1 f h_a]_a``."""
        x, w = self.quadrature(q)
        return x, (self.values(x) * w[:, None]).T
