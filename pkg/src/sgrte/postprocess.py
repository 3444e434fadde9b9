"""Error norms, photon flux sampling and plain-text exports."""

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ArgumentError, DataError


class UndefinedError(DataError):
    """Relative error requested against an exact solution of zero norm."""


def _quad_q(k):
    return max(k + 3, 5)


def _patch_samples(patch, q):
    """Quadrature points, weights and a coefficient->values evaluator for one patch."""
    sp = patch.space
    if patch.kind == "box":
        axes, wts = sp.quadrature_grid(q)
        pts = sp.grid_points(axes)
        w = np.ones(())
        for wm in wts:
            w = np.multiply.outer(w, wm)
        w = w * sp.volume
        return pts, w, lambda c: sp.evaluate_grid(c, axes)
    pts, w = sp.quadrature(q)
    V = sp.values_at(pts)
    return pts, w, lambda c: V @ c


def direction_errors(solution, exact, q=None):
    """Per-direction squared L2 error and squared L2 norm of the exact field."""
    topo, oset, U = solution.topo, solution.oset, solution.U
    k = topo.patches[0].space.k
    q = q or _quad_q(k)
    err = np.zeros(len(oset))
    ref = np.zeros(len(oset))
    for p in topo.patches:
        pts, w, ev = _patch_samples(p, q)
        for l, omega in enumerate(oset.directions):
            ue = np.asarray(exact(pts, omega), dtype=float)
            uh = ev(U[l, p.slice])
            err[l] += np.sum(w * (ue - uh) ** 2)
            ref[l] += np.sum(w * ue**2)
    return err, ref


def weighted_relative_error(solution, exact, q=None):
    """``(sum_l w_l ||u_l - u_h^l||^2 / sum_l w_l ||u_l||^2)^(1/2)``."""
    err, ref = direction_errors(solution, exact, q)
    w = solution.oset.weights
    den = float(w @ ref)
    if den <= 0.0:
        raise UndefinedError("exact solution has zero weighted norm; relative error undefined")
    return float(np.sqrt((w @ err) / den))


def discrete_norm(solution, q=None):
    """``(sum_l w_l ||u_h^l||^2)^(1/2)``; coefficients are orthonormal so this is exact."""
    return float(np.sqrt(solution.oset.weights @ np.sum(solution.U**2, axis=1)))


def projection_errors(space, f, grad_f=None, q=None):
    """L2 error (and broken H1 seminorm error) of the sparse L2 projection of f."""
    q = q or _quad_q(space.k)
    c = space.project(f)
    axes, wts = space.quadrature_grid(q)
    pts = space.grid_points(axes)
    w = np.ones(())
    for wm in wts:
        w = np.multiply.outer(w, wm)
    w = w * space.volume
    l2 = np.sqrt(np.sum(w * (f(pts) - space.evaluate_grid(c, axes)) ** 2))
    if grad_f is None:
        return float(l2), None
    g = grad_f(pts)
    h1 = 0.0
    for m in range(space.d):
        h1 += np.sum(w * (g[..., m] - space.evaluate_grid(c, axes, deriv_axis=m)) ** 2)
    return float(l2), float(np.sqrt(h1))


# ---------------------------------------------------------------------------
# photon flux
# ---------------------------------------------------------------------------

def flux_coefficients(solution):
    """Coefficients of q = (1/4 pi) sum_l w_l u_h^l."""
    return solution.oset.weights @ solution.U / (4 * np.pi)


def evaluate_field(topo, coeffs, pts):
    """Evaluate a global coefficient vector at points (n, d); NaN outside the mesh."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    out = np.full(len(pts), np.nan)
    todo = np.ones(len(pts), dtype=bool)
    for p in topo.patches:
        inside = todo & p.space.contains(pts)
        if np.any(inside):
            out[inside] = p.space.evaluate(coeffs[p.slice], pts[inside])
            todo &= ~inside
    return out


def photon_flux(solution, grid):
    """Flux samples on ``grid`` = list of 1-D coordinate arrays (one per axis).

    A fixed coordinate (e.g. a slice z = 0.1) is given as a length-1 array.
    """
    c = flux_coefficients(solution)
    mesh = np.meshgrid(*[np.atleast_1d(g) for g in grid], indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    return evaluate_field(solution.topo, c, pts).reshape(mesh[0].shape)


def uniform_grid(topo, n=None, slice_z=None):
    """Default sampling grid: 101^2 in 2-D, 51^2 on a z-slice (or 51^3) in 3-D."""
    lo = np.min([p.space.corner if p.kind == "box" else p.space.vertices.min(0) for p in topo.patches], axis=0)
    hi = np.max([p.space.corner + p.space.lengths if p.kind == "box" else p.space.vertices.max(0)
                 for p in topo.patches], axis=0)
    n = n or (101 if topo.d == 2 else 51)
    grid = [np.linspace(lo[m], hi[m], n) for m in range(topo.d)]
    if topo.d == 3 and slice_z is not None:
        grid[2] = np.array([float(slice_z)])
    return grid


# ---------------------------------------------------------------------------
# reports and exports
# ---------------------------------------------------------------------------

@dataclass
class ErrorReport:
    problem: str
    N: int
    k: int
    n: int
    theta0: float
    dofs: int
    error: float = None
    direction_errors: list = field(default_factory=list)
    sweeps: int = 0
    change: float = None
    residual: float = None
    wall: float = None
    status: str = ""

    def as_dict(self):
        return asdict(self)


def _fmt(v, precise=False):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if precise else f"{v:.4e}"
    return str(v)


def table_csv(rows, columns, precise=False):
    """CSV text with a header row; floats in 5 significant digits unless precise."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c), precise) for c in columns])
    return buf.getvalue()


def write_table(path, rows, columns, precise=False):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(table_csv(rows, columns, precise))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_grid(path, grid, values):
    """Header ``nx ny [nz]`` and bounds, then row-major values (17 digits)."""
    grid = [np.atleast_1d(np.asarray(g, dtype=float)) for g in grid]
    values = np.asarray(values, dtype=float)
    if values.shape != tuple(len(g) for g in grid):
        raise ArgumentError("values shape does not match the grid")
    lines = [" ".join(str(len(g)) for g in grid),
             " ".join(f"{float(g[0])!r} {float(g[-1])!r}" for g in grid)]
    lines += [repr(float(v)) for v in values.ravel()]
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_grid(path):
    with open(path) as fh:
        shape = tuple(int(v) for v in fh.readline().split())
        b = [float(v) for v in fh.readline().split()]
        vals = np.array([float(line) for line in fh if line.strip()])
    grid = [np.linspace(b[2 * m], b[2 * m + 1], n) for m, n in enumerate(shape)]
    return grid, vals.reshape(shape)
