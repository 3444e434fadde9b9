"""Block Gauss-Seidel (source iteration) over directions with one cached
sparse LU factorization per direction block."""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import ArgumentError, SolverError

log = logging.getLogger(__name__)

PIVOT_RTOL = 1e-14
EPS = 1e-300


def factor_blocks(system):
    """splu handles for every D_l; raises SolverError on a (near) singular block."""
    out = []
    for l, D in enumerate(system.blocks):
        D = sparse.csc_matrix(D)
        scale = abs(D).sum(axis=1).max() if D.nnz else 0.0
        try:
            lu = splu(D)
        except RuntimeError as exc:
            raise SolverError(f"direction block {l} is singular ({exc})") from exc
        piv = np.abs(lu.U.diagonal()).min() if D.shape[0] else 1.0
        if not scale or piv < PIVOT_RTOL * scale:
            raise SolverError(f"direction block {l} is near singular: pivot {piv:.3e} vs norm {scale:.3e}"
                              " (check theta0 and the sigma_t - m sigma_s margin)")
        out.append(lu)
    return out


@dataclass
class SweepStats:
    converged: bool
    sweeps: int
    change: float
    residual: float
    wall: float
    history: list = field(default_factory=list)

    @property
    def status(self):
        if self.converged:
            return "converged"
        if len(self.history) > 1 and self.history[-1] > self.history[0]:
            return "diverged"
        return "stalled"

    def csv_row(self):
        return f"{self.sweeps},{self.change:.6e},{self.residual:.6e},{self.wall:.3f}"


@dataclass
class SolutionField:
    """Per-direction coefficient vectors U[l] on a mesh."""

    U: np.ndarray  # (L, M)
    topo: object
    oset: object
    stats: SweepStats = None


def _sweep_loop(system, factors, tol, max_sweeps, jacobi):
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    L, M = system.L, system.M
    # without scattering the blocks are independent: one sweep is exact
    decoupled = system.sigma_s == 0 or not np.any(system.G - np.diag(np.diag(system.G)))
    U = np.zeros((L, M))
    hist = []
    converged = False
    change = np.inf
    t0 = time.perf_counter()
    for sweep in range(1, max_sweeps + 1):
        old = U.copy()
        src = U if not jacobi else old
        for l in range(L):
            rhs = system.F[l] if decoupled else system.F[l] + system.coupling(src, l)
            U[l] = factors[l].solve(rhs)
            if not np.all(np.isfinite(U[l])):
                raise SolverError(f"non-finite iterate in direction {l} at sweep {sweep}")
        nrm = np.linalg.norm(U)
        change = np.linalg.norm(U - old) / max(nrm, EPS)
        hist.append(change)
        log.debug("sweep %d change %.3e", sweep, change)
        if decoupled or change < tol or nrm == 0.0:
            converged = True
            break
    wall = time.perf_counter() - t0
    res = relative_residual(system, U)
    return U, SweepStats(converged, sweep, change, res, wall, hist)


def relative_residual(system, U):
    r = system.apply(U) - system.F
    fn = np.linalg.norm(system.F)
    return float(np.linalg.norm(r) / fn) if fn > 0 else float(np.linalg.norm(r))


def gauss_seidel(system, factors=None, tol=1e-10, max_sweeps=500):
    """Sweep l = 1..L using the latest iterates; zero initial guess."""
    factors = factors or factor_blocks(system)
    U, stats = _sweep_loop(system, factors, tol, max_sweeps, jacobi=False)
    return SolutionField(U, system.topo, system.oset, stats)


def jacobi(system, factors=None, tol=1e-10, max_sweeps=500):
    """As gauss_seidel, but every direction uses the previous sweep's iterates."""
    factors = factors or factor_blocks(system)
    U, stats = _sweep_loop(system, factors, tol, max_sweeps, jacobi=True)
    return SolutionField(U, system.topo, system.oset, stats)


def solve(system, variant="gauss_seidel", tol=1e-10, max_sweeps=500):
    if variant not in ("gauss_seidel", "jacobi"):
        raise ArgumentError(f"unknown solver variant {variant!r}")
    fn = gauss_seidel if variant == "gauss_seidel" else jacobi
    sol = fn(system, tol=tol, max_sweeps=max_sweeps)
    if sol.stats.converged and sol.stats.residual > 100 * tol:
        log.warning("converged by change but residual %.3e > 100*tol", sol.stats.residual)
    return sol
