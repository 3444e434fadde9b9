"""Truncated sparse tensor-product multiwavelet spaces on box patches.

A degree of freedom is a tensor product of 1-D hierarchical functions, one per
axis, with level multi-index n satisfying ``|n|_1 <= N``.  Internally each dof
is stored by its per-axis flat 1-D index (see :mod:`sgrte.wavelet1d`), which
makes the sparse space a set of entries of the full ``H**d`` hierarchical
coefficient array.  All transforms are axis-by-axis contractions with 1-D
matrices.
"""

import itertools
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError, DataError
from .wavelet1d import Basis1D, level_offset

ORDERING_TAG = "levelsum-level-cell-poly"


class HierIndex(NamedTuple):
    levels: tuple
    cells: tuple
    polys: tuple


def dim_w(n, k):
    """Dimension of the 1-D detail space W_n^k on [0, 1]."""
    return k + 1 if n == 0 else (k + 1) * 2 ** (n - 1)


def level_vectors(d, N):
    """All n >= 0 with |n|_1 <= N, ordered by level sum then lexicographically."""
    out = [lv for lv in itertools.product(range(N + 1), repeat=d) if sum(lv) <= N]
    return sorted(out, key=lambda lv: (sum(lv), lv))


def dof_count(d, k, N):
    """Closed-form ``sum_{|n|_1<=N} prod_m dimW(n_m)``.

    Counting level vectors with z zero entries and positive part summing to s
    (stars and bars) gives ``(k+1)^d * sum_z C(d,z) sum_s C(s-1, d-z-1) 2^(s-d+z)``.
    """
    from math import comb

    total = 0
    for z in range(d + 1):
        p = d - z  # number of positive levels
        if p == 0:
            total += (k + 1) ** d
            continue
        for s in range(p, N + 1):
            total += comb(d, z) * comb(s - 1, p - 1) * (k + 1) ** d * 2 ** (s - p)
    return total


def _dof_arrays(d, k, N):
    levels, cells, polys = [], [], []
    for lv in level_vectors(d, N):
        ncell = [1 if n == 0 else 2 ** (n - 1) for n in lv]
        for j in itertools.product(*(range(c) for c in ncell)):
            for i in itertools.product(range(k + 1), repeat=d):
                levels.append(lv)
                cells.append(j)
                polys.append(i)
    levels = np.array(levels, dtype=int).reshape(-1, d)
    cells = np.array(cells, dtype=int).reshape(-1, d)
    polys = np.array(polys, dtype=int).reshape(-1, d)
    offs = np.vectorize(lambda n: level_offset(n, k))(levels) if levels.size else levels
    flat = offs + cells * (k + 1) + polys
    return levels, cells, polys, flat


def enumerate_dofs(d, k, N):
    """Ordered list of :class:`HierIndex` for the sparse space."""
    if d not in (2, 3):
        raise ArgumentError("only d = 2 or 3 is supported")
    if k < 0 or N < 0:
        raise ArgumentError("need k >= 0 and N >= 0")
    lv, cl, po, _ = _dof_arrays(d, k, N)
    return [HierIndex(tuple(a), tuple(b), tuple(c)) for a, b, c in zip(lv, cl, po)]


def dof_growth_report(d, k, N_max):
    """Rows ``(N, sparse dofs, full dofs, sparse/full)`` for N = 0..N_max."""
    limit = 12 if d == 2 else 8
    if N_max > limit:
        raise ArgumentError(f"N_max <= {limit} for d = {d}")
    rows = []
    for N in range(N_max + 1):
        s, f = dof_count(d, k, N), ((k + 1) * 2**N) ** d
        rows.append((N, s, f, s / f))
    return rows


def _contract(arr, mats):
    """Apply ``mats[m]`` along axis m of ``arr`` (leading batch axes allowed)."""
    d = len(mats)
    lead = arr.ndim - d
    for m, A in enumerate(mats):
        if A is None:
            continue
        arr = np.moveaxis(np.tensordot(A, arr, axes=(1, lead + m)), 0, lead + m)
    return arr


class SparseSpace:
    """Sparse DG space ``sum_{|n|_1 <= N} W_n^k`` on an axis-aligned box patch.

    Basis functions are orthonormal in L2 of the physical patch:
    ``Phi(x) = prod_m h_{a_m}(xi_m) / sqrt(L_m)`` with ``x = corner + L*xi``.
    """

    def __init__(self, d, k, N, corner=None, lengths=None):
        if d not in (2, 3):
            raise ArgumentError("only d = 2 or 3 is supported")
        if k < 0 or N < 0:
            raise ArgumentError("need k >= 0 and N >= 0")
        self.d, self.k, self.N = d, k, N
        self.corner = np.zeros(d) if corner is None else np.asarray(corner, dtype=float)
        self.lengths = np.ones(d) if lengths is None else np.asarray(lengths, dtype=float)
        if np.any(self.lengths <= 0):
            raise ArgumentError("patch lengths must be positive")
        self.basis = Basis1D(N, k)
        self.H = self.basis.H
        self.levels, self.cells, self.polys, self.flat = _dof_arrays(d, k, N)
        self.M = len(self.flat)
        self._flat_tuple = tuple(self.flat.T)
        self.volume = float(np.prod(self.lengths))

    # -- geometry -----------------------------------------------------------
    def to_ref(self, x, tol=1e-12):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xi = (x - self.corner) / self.lengths
        if np.any((xi < -tol) | (xi > 1 + tol)):
            raise ArgumentError("point outside the patch")
        return np.clip(xi, 0.0, 1.0)

    def to_phys(self, xi):
        return self.corner + np.asarray(xi) * self.lengths

    def contains(self, x, tol=1e-12):
        xi = (np.atleast_2d(x) - self.corner) / self.lengths
        return np.all((xi >= -tol) & (xi <= 1 + tol), axis=-1)

    @property
    def dofs(self):
        return enumerate_dofs(self.d, self.k, self.N)

    # -- hierarchical <-> full array ------------------------------------------
    def to_full(self, coeffs):
        coeffs = np.asarray(coeffs)
        full = np.zeros(coeffs.shape[:-1] + (self.H,) * self.d, dtype=coeffs.dtype)
        full[(Ellipsis,) + self._flat_tuple] = coeffs
        return full

    def from_full(self, full):
        return full[(Ellipsis,) + self._flat_tuple]

    # -- quadrature grids -----------------------------------------------------
    def quadrature_grid(self, q):
        """Per-axis reference points and weights of the composite Gauss rule."""
        x, w = self.basis.quadrature(q)
        return [x] * self.d, [w] * self.d

    def grid_points(self, axes_ref):
        mesh = np.meshgrid(*axes_ref, indexing="ij")
        xi = np.stack(mesh, axis=-1)
        return self.to_phys(xi)

    # -- projection and evaluation --------------------------------------------
    def project_values(self, values, q):
        """Coefficients from samples on the q-point tensor quadrature grid."""
        x, P = self.basis.projector(q)
        full = _contract(values, [P] * self.d)
        return self.from_full(full) * np.sqrt(self.volume)

    def project(self, f, q=None):
        """L2 projection of f (callable on points (..., d)) onto the space."""
        q = q or max(self.k + 2, 4)
        x, _ = self.basis.quadrature(q)
        pts = self.grid_points([x] * self.d)
        vals = np.asarray(f(pts), dtype=float)
        check_finite(vals, pts)
        return self.project_values(vals, q)

    def evaluate_grid(self, coeffs, axes_ref, deriv_axis=None):
        """Values (or one partial derivative) on the tensor grid of reference axes."""
        mats = []
        for m, x in enumerate(axes_ref):
            if m == deriv_axis:
                mats.append(self.basis.derivs(x) / self.lengths[m])
            else:
                mats.append(self.basis.values(x))
        return _contract(self.to_full(coeffs), mats) / np.sqrt(self.volume)

    def evaluate(self, coeffs, x):
        """Values of the expansion at scattered points x (n, d) or (d,)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        xi = self.to_ref(x)
        prod = np.ones((len(xi), self.M))
        for m in range(self.d):
            prod *= self.basis.values(xi[:, m])[:, self.flat[:, m]]
        out = prod @ np.asarray(coeffs) / np.sqrt(self.volume)
        return out[0] if single else out

    # -- elementwise representation ---------------------------------------------
    def fine_cell_restriction(self, coeffs):
        """Per-fine-cell local Legendre blocks.

        Returns an array of shape ``(2**N,)*d + (k+1,)*d`` (cells first, then
        local polynomial indices) holding the coefficients of the restriction
        in each cell's orthonormal Legendre basis.
        """
        T = self.basis.T
        elem = _contract(self.to_full(coeffs), [T] * self.d)
        nc, kp = 2**self.N, self.k + 1
        elem = elem.reshape(elem.shape[:-self.d] + sum(((nc, kp),) * self.d, ()))
        lead = elem.ndim - 2 * self.d
        order = list(range(lead)) + [lead + 2 * m for m in range(self.d)] + [lead + 2 * m + 1 for m in range(self.d)]
        return elem.transpose(order)

    def restriction_transpose(self, blocks):
        """Adjoint (= inverse on the space) of :meth:`fine_cell_restriction`."""
        d, nc, kp = self.d, 2**self.N, self.k + 1
        lead = blocks.ndim - 2 * d
        order = list(range(lead))
        for m in range(d):
            order += [lead + m, lead + d + m]
        elem = blocks.transpose(order).reshape(blocks.shape[:lead] + (nc * kp,) * d)
        return self.from_full(_contract(elem, [self.basis.T.T] * d))


def check_finite(vals, pts):
    if not np.all(np.isfinite(vals)):
        idx = np.unravel_index(np.flatnonzero(~np.isfinite(vals))[0], vals.shape)
        raise DataError(f"non-finite sample at quadrature point {pts[idx[:pts.ndim - 1]]}")


def save_coefficients(path, space, coeffs):
    """Write a coefficient vector as text with a one-line header."""
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    header = f"d={space.d} k={space.k} N={space.N} dofs={space.M} ordering={ORDERING_TAG}"
    np.savetxt(path, coeffs, fmt="%.17e", header=header)


def load_coefficients(path):
    """Inverse of :func:`save_coefficients`: returns (header dict, coeffs)."""
    with open(path) as fh:
        first = fh.readline().lstrip("#").split()
    meta = dict(item.split("=", 1) for item in first)
    for key in ("d", "k", "N", "dofs"):
        meta[key] = int(meta[key])
    coeffs = np.atleast_1d(np.loadtxt(path))
    if len(coeffs) != meta["dofs"]:
        raise DataError(f"{path}: header says {meta['dofs']} dofs, found {len(coeffs)}")
    return meta, coeffs
