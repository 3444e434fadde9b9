"""Galerkin matrices and load vectors of the stabilized discrete-ordinate DG
scheme in the sparse multiwavelet basis.

For direction omega_l the transport block is

    D_l = (sigma_t - sigma_s G[l, l]) I
          + sum_m omega_m Adv_m                           (volume advection)
          + sum_interior (omega.n) Avg_e + theta0 |omega.n| Jump_e
          + sum_{boundary, omega.n > 0} (omega.n) Trace_e

with row index = test function and column index = trial function.  The
geometric matrices Adv, Avg, Jump and Trace do not depend on omega; they are
built once per mesh and stored keyed by (coefficient kind, normal), so a
direction block is a short linear combination of sparse matrices.

On a box patch every term is a tensor product of a 1-D operator along one
axis with the identity along the others (orthonormal tangential bases), so its
restriction to the sparse index set pairs dofs that agree in all other axes.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse

from .errors import ArgumentError, DataError
from .scattering import build_kernel
from .wavelet1d import Basis1D, gauss01, legendre01, legendre01_deriv

log = logging.getLogger(__name__)

_DROP = 1e-14


# ---------------------------------------------------------------------------
# 1-D operators on [0, 1]
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LineOperators:
    """Hierarchical 1-D matrices on [0, 1] (rows = test, cols = trial).

    vol[p, q]  = -int h_q h_p'
    avg        = sum over interior nodes of 1/2 (v_L - v_R)(u_L + u_R)
    jump       = sum over interior nodes of (v_L - v_R)(u_L - u_R)
    e0, e1     = outer products of the traces at x = 0 and x = 1
    """

    vol: np.ndarray
    avg: np.ndarray
    jump: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    h0: np.ndarray
    h1: np.ndarray


@lru_cache(maxsize=None)
def line_operators(N, k):
    basis = Basis1D(N, k)
    T = basis.T
    n, kp = 2**N, k + 1
    t, w = gauss01(k + 1)
    Lv, Ld = legendre01(k, t), legendre01_deriv(k, t)
    dref = (Ld * w[:, None]).T @ Lv  # dref[p, q] = int L_p' L_q
    He = n * kp
    vol_e = np.zeros((He, He))
    for c in range(n):
        sl = slice(c * kp, (c + 1) * kp)
        vol_e[sl, sl] = -n * dref
    ends = legendre01(k, np.array([0.0, 1.0])) * np.sqrt(n)  # (2, kp): values at t=0, t=1
    avg_e = np.zeros((He, He))
    jump_e = np.zeros((He, He))
    for c in range(n - 1):
        a = np.zeros(He)
        b = np.zeros(He)
        a[c * kp:(c + 1) * kp] = ends[1]
        a[(c + 1) * kp:(c + 2) * kp] = -ends[0]
        b[c * kp:(c + 1) * kp] = ends[1]
        b[(c + 1) * kp:(c + 2) * kp] = ends[0]
        avg_e += 0.5 * np.outer(a, b)
        jump_e += np.outer(a, a)
    h0, h1 = basis.trace(0), basis.trace(1)

    def hier(X):
        Y = T.T @ X @ T
        Y[np.abs(Y) < _DROP * max(1.0, np.abs(Y).max())] = 0.0
        return Y

    return LineOperators(hier(vol_e), hier(avg_e), hier(jump_e),
                         np.outer(h0, h0), np.outer(h1, h1), h0, h1)


# ---------------------------------------------------------------------------
# sparse restriction of axis operators
# ---------------------------------------------------------------------------

def _axis_groups(space, axis):
    others = [m for m in range(space.d) if m != axis]
    key = np.ravel_multi_index(tuple(space.flat[:, others].T), (space.H,) * len(others))
    order = np.argsort(key, kind="stable")
    ks = key[order]
    cut = np.flatnonzero(np.diff(ks)) + 1
    return dict(zip(ks[np.r_[0, cut]].tolist(), np.split(order, cut)))


def axis_pairs(sp_p, sp_q, axis, mats):
    """COO data of ``A (x) I_other`` restricted to the sparse dofs of two spaces.

    Returns rows (dofs of sp_p), cols (dofs of sp_q) and one value array per
    matrix in ``mats``; entries pair dofs whose other-axis indices coincide.
    """
    gp = _axis_groups(sp_p, axis)
    gq = gp if sp_q is sp_p else _axis_groups(sp_q, axis)
    fp, fq = sp_p.flat[:, axis], sp_q.flat[:, axis]
    rows, cols = [], []
    for key, r in gp.items():
        c = gq.get(key)
        if c is None:
            continue
        R, C = np.meshgrid(r, c, indexing="ij")
        rows.append(R.ravel())
        cols.append(C.ravel())
    if not rows:
        e = np.zeros(0, dtype=int)
        return e, e, [np.zeros(0) for _ in mats]
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    vals = [A[fp[rows], fq[cols]] for A in mats]
    return rows, cols, vals


def _coo(rows, cols, vals, shape, offsets=(0, 0)):
    keep = vals != 0.0
    return sparse.coo_matrix((vals[keep], (rows[keep] + offsets[0], cols[keep] + offsets[1])), shape=shape)


# ---------------------------------------------------------------------------
# triangle helpers
# ---------------------------------------------------------------------------

def _edge_rule(a, b, q):
    t, w = gauss01(q)
    pts = a[None, :] + np.outer(t, b - a)
    return pts, w * np.linalg.norm(b - a)


def triangle_advection(ts, q=None):
    """``[-int psi_trial d_m psi_test]`` for m = x, y."""
    q = q or ts.k + 1
    x, w = ts.quadrature(q)
    v, g = ts.values_at(x), ts.grads_at(x)
    return [-np.einsum("q,qj,qi->ij", w, v, g[..., m]) for m in range(2)]


def triangle_edge_mass(ts_p, ts_q, a, b, q):
    x, w = _edge_rule(a, b, q)
    return (ts_p.values_at(x) * w[:, None]).T @ ts_q.values_at(x)


def box_side_rule(space, axis, side, lo, hi, q):
    """Gauss points along a segment of a 2-D box side, split at fine-cell lines."""
    t = 1 - axis
    h = space.lengths[t] / 2**space.N
    grid = space.corner[t] + h * np.arange(2**space.N + 1)
    brk = np.unique(np.r_[lo, hi, grid[(grid > lo) & (grid < hi)]])
    tt, ww = gauss01(q)
    xs = (brk[:-1, None] + np.outer(np.diff(brk), tt)).ravel()
    ws = np.outer(np.diff(brk), ww).ravel()
    pts = np.empty((len(xs), 2))
    pts[:, t] = xs
    pts[:, axis] = space.corner[axis] + side * space.lengths[axis]
    return pts, ws


def box_trace_values(space, axis, side, pts):
    """Values of every sparse dof of a 2-D box at points on one of its sides."""
    t = 1 - axis
    xi = (pts[:, t] - space.corner[t]) / space.lengths[t]
    Et = space.basis.values(xi)[:, space.flat[:, t]]
    hs = space.basis.trace(side)[space.flat[:, axis]]
    return Et * hs[None, :] / np.sqrt(space.volume)


# ---------------------------------------------------------------------------
# geometric operators
# ---------------------------------------------------------------------------

class TransportOperators:
    """Direction-independent pieces of the transport blocks of a mesh."""

    def __init__(self, topo, q_face=None):
        self.topo = topo
        self.d = topo.d
        self.M = topo.M
        self._terms = {}
        self.counts = {}
        for ip, p in enumerate(topo.patches):
            if p.kind == "box":
                self._box_volume(p)
            else:
                self._tri_volume(p)
        for g in topo.groups:
            self._group(g, q_face)
        self.terms = [(kind, np.array(n), A.tocsr()) for (kind, n), A in sorted(self._terms.items())]
        for _, _, A in self.terms:
            A.sum_duplicates()
            A.eliminate_zeros()

    def _add(self, kind, normal, mat):
        key = (kind, tuple(float(v) for v in np.round(np.asarray(normal, dtype=float), 14) + 0.0))
        prev = self._terms.get(key)
        self._terms[key] = mat.tocsr() if prev is None else prev + mat.tocsr()

    def _shape(self):
        return (self.M, self.M)

    def _box_volume(self, p):
        sp = p.space
        ops = line_operators(sp.N, sp.k)
        for m in range(sp.d):
            r, c, (vol, avg, jmp) = axis_pairs(sp, sp, m, [ops.vol, ops.avg, ops.jump])
            s = 1.0 / sp.lengths[m]
            off = (p.offset, p.offset)
            e = np.eye(self.d)[m]
            self._add("linear", e, _coo(r, c, (vol + avg) * s, self._shape(), off))
            self._add("penalty", e, _coo(r, c, jmp * s, self._shape(), off))

    def _tri_volume(self, p):
        ts = p.space
        for m, A in enumerate(triangle_advection(ts)):
            blk = sparse.coo_matrix(A)
            self._add("linear", np.eye(2)[m],
                      sparse.coo_matrix((blk.data, (blk.row + p.offset, blk.col + p.offset)), shape=self._shape()))

    def _two_sided(self, normal, spp, spq, spq_pq, offp, offq):
        """Register avg/jump from the blocks S_PP, S_QQ (local) and S_PQ."""
        shp = self._shape()

        def place(A, ro, co):
            A = sparse.coo_matrix(A)
            return sparse.coo_matrix((A.data, (A.row + ro, A.col + co)), shape=shp)

        PP, QQ = place(spp, offp, offp), place(spq, offq, offq)
        PQ = place(spq_pq, offp, offq)
        QP = PQ.T
        self._add("linear", normal, 0.5 * (PP + PQ - QP - QQ))
        self._add("penalty", normal, PP - PQ - QP + QQ)

    def _group(self, g, q_face):
        topo = self.topo
        P = topo.patches[g.p]
        if g.kind == "box_internal":
            return  # handled with the volume terms
        if g.kind == "box_boundary":
            sp = P.space
            ops = line_operators(sp.N, sp.k)
            E = ops.e1 if g.side == 1 else ops.e0
            r, c, (v,) = axis_pairs(sp, sp, g.axis, [E])
            self._add("outflow", g.normal, _coo(r, c, v / sp.lengths[g.axis], self._shape(), (P.offset, P.offset)))
            return
        if g.kind == "box_box":
            Q = topo.patches[g.q]
            sp, sq = P.space, Q.space
            _check_glued(sp, sq, g.axis)
            ops = line_operators(sp.N, sp.k)
            lp, lq = sp.lengths[g.axis], sq.lengths[g.axis]
            r, c, (epp,) = axis_pairs(sp, sp, g.axis, [ops.e1])
            spp = sparse.coo_matrix((epp / lp, (r, c)), shape=(sp.M, sp.M))
            r, c, (eqq,) = axis_pairs(sq, sq, g.axis, [ops.e0])
            sqq = sparse.coo_matrix((eqq / lq, (r, c)), shape=(sq.M, sq.M))
            r, c, (epq,) = axis_pairs(sp, sq, g.axis, [np.outer(ops.h1, ops.h0)])
            spq = sparse.coo_matrix((epq / np.sqrt(lp * lq), (r, c)), shape=(sp.M, sq.M))
            self._two_sided(g.normal, spp, sqq, spq, P.offset, Q.offset)
            return
        if g.kind == "box_tri":
            sp = P.space
            if sp.d != 2:
                raise ArgumentError("box-triangle faces are 2-D only")
            q = q_face or max(sp.k + 2, 4)
            ops = line_operators(sp.N, sp.k)
            E = ops.e1 if g.side == 1 else ops.e0
            r, c, (v,) = axis_pairs(sp, sp, g.axis, [E])
            spp = sparse.coo_matrix((v / sp.lengths[g.axis], (r, c)), shape=(sp.M, sp.M))
            t = 1 - g.axis
            self._add("linear", g.normal, _place(0.5 * spp, P.offset, P.offset, self._shape()))
            self._add("penalty", g.normal, _place(spp, P.offset, P.offset, self._shape()))
            for iq, e in g.tri_edges:
                Q = topo.patches[iq]
                a, b = Q.space.edge(e)
                lo, hi = sorted((a[t], b[t]))
                pts, w = box_side_rule(sp, g.axis, g.side, lo, hi, q)
                Bv = box_trace_values(sp, g.axis, g.side, pts)
                Tv = Q.space.values_at(pts)
                spq = (Bv * w[:, None]).T @ Tv
                sqq = (Tv * w[:, None]).T @ Tv
                PQ = _place(spq, P.offset, Q.offset, self._shape())
                QQ = _place(sqq, Q.offset, Q.offset, self._shape())
                self._add("linear", g.normal, 0.5 * (PQ - PQ.T - QQ))
                self._add("penalty", g.normal, QQ - PQ - PQ.T)
            return
        if g.kind == "tri_tri":
            Q = topo.patches[g.q]
            a, b = P.space.edge(g.edge)
            q = q_face or max(P.space.k + 2, 4)
            spp = triangle_edge_mass(P.space, P.space, a, b, q)
            sqq = triangle_edge_mass(Q.space, Q.space, a, b, q)
            spq = triangle_edge_mass(P.space, Q.space, a, b, q)
            self._two_sided(g.normal, spp, sqq, spq, P.offset, Q.offset)
            return
        if g.kind == "tri_boundary":
            a, b = P.space.edge(g.edge)
            q = q_face or max(P.space.k + 2, 4)
            S = triangle_edge_mass(P.space, P.space, a, b, q)
            self._add("outflow", g.normal, _place(S, P.offset, P.offset, self._shape()))
            return
        raise ArgumentError(f"unknown face group kind {g.kind}")

    # -- per-direction combination -------------------------------------------
    def advection_face_matrix(self, omega, theta0):
        """Sum of the omega-dependent terms for one direction (no reaction)."""
        w = np.asarray(omega, dtype=float)[: self.d]
        A = sparse.csr_matrix(self._shape())
        for kind, n, mat in self.terms:
            a = float(w @ n)
            if kind == "linear":
                coef = a
            elif kind == "penalty":
                coef = theta0 * abs(a)
            else:
                coef = a if a > 0 else 0.0
            if coef != 0.0:
                A = A + coef * mat
        return A


def _place(A, ro, co, shape):
    A = sparse.coo_matrix(A)
    return sparse.coo_matrix((A.data, (A.row + ro, A.col + co)), shape=shape).tocsr()


def _check_glued(sp, sq, axis):
    t = [m for m in range(sp.d) if m != axis]
    ok = (sp.N == sq.N and sp.k == sq.k
          and np.allclose(sp.corner[t], sq.corner[t]) and np.allclose(sp.lengths[t], sq.lengths[t])
          and np.isclose(sp.corner[axis] + sp.lengths[axis], sq.corner[axis]))
    if not ok:
        raise ArgumentError("glued boxes must share the full side and the same (N, k)")


# ---------------------------------------------------------------------------
# loads
# ---------------------------------------------------------------------------

def _interval_projection(basis, lo, hi, q):
    """``int_lo^hi h_a`` for all hierarchical functions, exactly (fine-cell split)."""
    n = basis.ncell
    lo, hi = np.clip(lo, 0, 1), np.clip(hi, 0, 1)
    if hi <= lo:
        return np.zeros(basis.H)
    grid = np.arange(n + 1) / n
    brk = np.unique(np.r_[lo, hi, grid[(grid > lo) & (grid < hi)]])
    t, w = gauss01(q)
    x = (brk[:-1, None] + np.outer(np.diff(brk), t)).ravel()
    ww = np.outer(np.diff(brk), w).ravel()
    return basis.values(x).T @ ww


def box_source_load(space, boxes):
    """Exact L2 projection of a sum of constant-valued axis-aligned boxes."""
    out = np.zeros(space.M)
    q = space.k + 1
    for lo, hi, val in boxes:
        lo = (np.asarray(lo, dtype=float) - space.corner) / space.lengths
        hi = (np.asarray(hi, dtype=float) - space.corner) / space.lengths
        prod = np.full(space.M, float(val) * np.sqrt(space.volume))
        for m in range(space.d):
            prod *= _interval_projection(space.basis, lo[m], hi[m], q)[space.flat[:, m]]
        out += prod
    return out


def triangle_source_load(ts, boxes, q):
    x, w = ts.quadrature(q)
    f = np.zeros(len(x))
    for lo, hi, val in boxes:
        inside = np.all((x >= np.asarray(lo)[:2]) & (x <= np.asarray(hi)[:2]), axis=1)
        f += val * inside
    return (ts.values_at(x) * w[:, None]).T @ f


def volume_load(topo, f, omega, q):
    """``int f(x, omega) phi`` for every dof."""
    F = np.zeros(topo.M)
    fx = lambda x: f(x, omega)
    for p in topo.patches:
        F[p.slice] = p.space.project(fx, q)
    return F


def _box_side_points(space, axis, side, q):
    x, _ = space.basis.quadrature(q)
    axes = [x if m != axis else np.array([float(side)]) for m in range(space.d)]
    return space.grid_points(axes)


def inflow_load(topo, alpha, omega, q):
    """``- sum_{inflow faces} int (omega.n) alpha phi``."""
    F = np.zeros(topo.M)
    w = np.asarray(omega, dtype=float)[: topo.d]
    for g in topo.boundary_groups():
        a = float(w @ g.normal)
        if a >= 0:
            continue
        p = topo.patches[g.p]
        if g.kind == "box_boundary":
            sp = p.space
            pts = _box_side_points(sp, g.axis, g.side, q)
            vals = np.asarray(alpha(pts, omega), dtype=float)
            _finite(vals, pts)
            _, P = sp.basis.projector(q)
            mats = [P if m != g.axis else np.ones((1, 1)) for m in range(sp.d)]
            from .sparse_space import _contract
            full = _contract(vals, mats)  # tangential projections, normal axis of size 1
            t_idx = tuple(sp.flat[:, m] if m != g.axis else np.zeros(sp.M, dtype=int) for m in range(sp.d))
            tang = full[t_idx]
            tlen = np.prod(np.delete(sp.lengths, g.axis))
            hs = sp.basis.trace(g.side)[sp.flat[:, g.axis]]
            F[p.slice] += -a * hs * tang * np.sqrt(tlen) / np.sqrt(sp.lengths[g.axis])
        else:
            a0, b0 = p.space.edge(g.edge)
            pts, ww = _edge_rule(a0, b0, q)
            vals = np.asarray(alpha(pts, omega), dtype=float)
            _finite(vals, pts)
            F[p.slice] += -a * (p.space.values_at(pts) * ww[:, None]).T @ vals
    return F


def _finite(vals, pts):
    if not np.all(np.isfinite(vals)):
        i = np.unravel_index(np.flatnonzero(~np.isfinite(vals))[0], vals.shape)
        raise DataError(f"non-finite sample at quadrature point {pts[i]}")


def assemble_load(topo, problem, omega, q=None):
    q = q or max(_degree(topo) + 2, 4)
    F = np.zeros(topo.M)
    if problem.source is not None:
        F += volume_load(topo, problem.source, omega, q)
    if problem.source_boxes:
        for p in topo.patches:
            if p.kind == "box":
                F[p.slice] += box_source_load(p.space, problem.source_boxes)
            else:
                F[p.slice] += triangle_source_load(p.space, problem.source_boxes, q + 4)
    if problem.inflow is not None:
        F += inflow_load(topo, problem.inflow, omega, q)
    return F


def _degree(topo):
    return topo.patches[0].space.k


# ---------------------------------------------------------------------------
# the block system
# ---------------------------------------------------------------------------

def default_theta0(N, k):
    return 10.0 ** (N + k)


@dataclass
class BlockSystem:
    """``D_l U_l - sigma_s sum_{i != l} G[l, i] U_i = F_l`` for l = 1..L.

    The scattering couplings are kept factored: B_i^(l) = G[l, i] * Msigma with
    Msigma = sigma_s * I (orthonormal basis, constant sigma_s).
    """

    blocks: list
    G: np.ndarray
    sigma_s: float
    F: np.ndarray  # (L, M)
    theta0: float
    topo: object = None
    oset: object = None
    report: object = None
    info: dict = field(default_factory=dict)

    @property
    def L(self):
        return len(self.blocks)

    @property
    def M(self):
        return self.F.shape[1]

    @property
    def dimension(self):
        return self.L * self.M

    def coupling(self, U, l):
        """``sigma_s * sum_{i != l} G[l, i] U_i``."""
        return self.sigma_s * (self.G[l] @ U - self.G[l, l] * U[l])

    def apply(self, U):
        """Global operator applied to U of shape (L, M)."""
        out = np.empty_like(U)
        S = self.sigma_s * (self.G @ U)
        for l, D in enumerate(self.blocks):
            out[l] = D @ U[l] - (S[l] - self.sigma_s * self.G[l, l] * U[l])
        return out

    def global_matrix(self):
        L, M = self.L, self.M
        eye = sparse.identity(M, format="csr")
        rows = []
        for l in range(L):
            row = []
            for i in range(L):
                if i == l:
                    row.append(self.blocks[l])
                else:
                    c = -self.sigma_s * self.G[l, i]
                    row.append(c * eye if c != 0 else None)
            rows.append(row)
        return sparse.bmat(rows, format="csr")

    def sparsity(self):
        A = self.global_matrix()
        n = A.shape[0]
        return n, A.nnz, 1.0 - A.nnz / float(n) ** 2


def assemble_transport(ops, sigma_t, omega, theta0):
    """``sigma_t I + advection + face terms`` for one direction."""
    return (sigma_t * sparse.identity(ops.M, format="csr") + ops.advection_face_matrix(omega, theta0)).tocsr()


def build_system(problem, topo, oset, theta0=None, strict=True, ops=None):
    """Assemble every direction block and load vector."""
    N = topo.patches[0].space.N if topo.patches[0].kind == "box" else 0
    k = _degree(topo)
    theta0 = default_theta0(N, k) if theta0 is None else float(theta0)
    if theta0 < 0:
        raise ArgumentError("theta0 must be nonnegative")
    K, report = build_kernel(problem.phase, oset, problem.sigma_s, problem.sigma_t, strict=strict)
    ops = ops or TransportOperators(topo)
    blocks, F = [], np.zeros((len(oset), topo.M))
    eye = sparse.identity(topo.M, format="csr")
    for l, omega in enumerate(oset.directions):
        D = assemble_transport(ops, problem.sigma_t, omega, theta0) - problem.sigma_s * K.G[l, l] * eye
        blocks.append(D.tocsc())
        F[l] = assemble_load(topo, problem, omega)
    return BlockSystem(blocks, K.G, float(problem.sigma_s), F, theta0, topo, oset, report,
                       info={"N": N, "k": k})


def scattering_blocks(system, l):
    """Explicit B_i^(l) = G[l, i] * sigma_s * I for all i (for inspection only)."""
    eye = sparse.identity(system.M, format="csr")
    return [system.G[l, i] * system.sigma_s * eye for i in range(system.L)]


def write_triplets(path, system):
    """Global matrix as ``row col value`` lines plus a sparsity summary line."""
    A = system.global_matrix().tocoo()
    order = np.lexsort((A.col, A.row))
    n, nnz, ratio = A.shape[0], A.nnz, 1.0 - A.nnz / float(A.shape[0]) ** 2
    with open(path, "w") as fh:
        fh.write(f"# dimension {n} nnz {nnz} sparsity {100 * ratio:.2f}%\n")
        for i in order:
            fh.write(f"{A.row[i]} {A.col[i]} {A.data[i]:.16e}\n")
    return n, nnz, ratio
