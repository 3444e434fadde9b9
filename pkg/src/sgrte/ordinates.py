"""Level-symmetric discrete-ordinate sets on the unit sphere."""

import itertools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.special import gamma

from .errors import ArgumentError, DataError

SUPPORTED_ORDERS = (2, 4, 6, 8, 10, 12)
FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class OrdinateSet:
    """L unit directions with positive weights summing to 4*pi."""

    directions: np.ndarray  # (L, 3)
    weights: np.ndarray  # (L,)
    order: int

    def __len__(self):
        return len(self.weights)

    @property
    def exact_degree(self):
        """Largest total degree integrated exactly.

        The level-symmetric S12 set cannot match every mixed degree-12 moment
        (one unknown short), so it is exact only through degree 11.
        """
        return self.order if self.order < 12 else 11


def read_octant_file(path):
    """Parse a first-octant table: a header line with n, then rows s1 s2 s3 w."""
    n = None
    rows = []
    for num, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            if n is None:
                n = int(line)
                continue
            rows.append([float(v) for v in line.split()])
        except ValueError:
            raise DataError(f"{path}:{num}: cannot parse {line!r}") from None
    if n is None or not rows:
        raise DataError(f"{path}: missing order header or ordinate rows")
    rows = np.array(rows)
    if rows.shape[1] != 4:
        raise DataError(f"{path}: expected 4 columns (s1 s2 s3 w)")
    return n, rows[:, :3], rows[:, 3]


def expand_octants(octant_dirs, octant_weights, order):
    """Reflect first-octant nodes into all eight octants (octant-major order)."""
    dirs, wts = [], []
    for signs in itertools.product((1.0, -1.0), repeat=3):
        dirs.append(octant_dirs * np.array(signs))
        wts.append(octant_weights)
    dirs = np.vstack(dirs)
    wts = np.concatenate(wts)
    wts = wts * (FOUR_PI / wts.sum())
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    return OrdinateSet(dirs, wts, order)


def build_sn(n):
    """Level-symmetric S_n set with n(n+2) directions."""
    if n not in SUPPORTED_ORDERS:
        raise ArgumentError(f"unsupported S_n order {n}; choose from {SUPPORTED_ORDERS}")
    ref = resources.files("sgrte") / "data" / f"lq_{n:02d}.txt"
    with resources.as_file(ref) as path:
        order, d, w = read_octant_file(path)
    assert order == n
    return expand_octants(d, w, n)


def load_ordinates(path):
    """Ordinate set from a user file in the first-octant table format."""
    n, d, w = read_octant_file(path)
    if np.any(w <= 0):
        raise DataError(f"{path}: weights must be positive")
    return expand_octants(d, w, n)


def sphere_quad(oset, F):
    """``sum_l w_l F(omega_l)``; F is a callable on (L, 3) directions or an array."""
    vals = F(oset.directions) if callable(F) else np.asarray(F, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals.reshape(len(oset), -1)).any(axis=1))[0])
        raise DataError(f"non-finite integrand at direction {bad}: {oset.directions[bad]}")
    return np.tensordot(oset.weights, vals, axes=(0, 0))


def sphere_moment(a, b, c):
    """Exact integral of s1^a s2^b s3^c over the unit sphere."""
    if a % 2 or b % 2 or c % 2:
        return 0.0
    return 2.0 * gamma((a + 1) / 2) * gamma((b + 1) / 2) * gamma((c + 1) / 2) / gamma((a + b + c + 3) / 2)


@dataclass
class PrecisionReport:
    degree: int
    max_error: float
    worst: tuple
    n_monomials: int

    def passed(self, tol=1e-9):
        return self.max_error < tol


def validate_precision(oset, degree):
    """Max abs error over all monomials s1^a s2^b s3^c with a+b+c <= degree."""
    if degree > 16:
        raise ArgumentError("moment validation limited to degree <= 16")
    s = oset.directions
    worst, max_err, count = (0, 0, 0), 0.0, 0
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                q = np.sum(oset.weights * s[:, 0] ** a * s[:, 1] ** b * s[:, 2] ** c)
                err = abs(q - sphere_moment(a, b, c))
                count += 1
                if err > max_err:
                    max_err, worst = err, (a, b, c)
    return PrecisionReport(degree, max_err, worst, count)


def product_rule(n_polar, n_azimuth=None):
    """Gauss-Legendre (in s3) x trapezoid (in azimuth) rule on the sphere.

    Exact for spherical polynomials of degree < min(2*n_polar, n_azimuth).
    Used as a high-order oracle, not as a transport ordinate set.
    """
    n_azimuth = n_azimuth or 2 * n_polar
    mu, wmu = npleg.leggauss(n_polar)
    phi = 2 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
    M, P = np.meshgrid(mu, phi, indexing="ij")
    st = np.sqrt(1 - M**2)
    dirs = np.stack([st * np.cos(P), st * np.sin(P), M], axis=-1).reshape(-1, 3)
    w = np.outer(wmu, np.full(n_azimuth, 2 * np.pi / n_azimuth)).ravel()
    return dirs, w
