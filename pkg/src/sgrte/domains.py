"""Spatial domains built from affine patches: boxes carrying sparse spaces
and triangles carrying single-element P_k spaces, plus the face topology
needed for DG coupling terms.

Geometry is described at two granularities.  ``FaceGroup`` objects are what
assembly consumes: a set of faces sharing one outward normal whose matrices
have tensor or closed-form structure (for instance every interior face of a
box normal to one axis).  ``MeshTopology.fine_faces`` expands them into
individual faces between finest-level elements, for counting and checks.
"""

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import ArgumentError, GeometryError
from .sparse_space import SparseSpace
from .wavelet1d import gauss01


# ---------------------------------------------------------------------------
# orthonormal polynomials on the reference triangle
# ---------------------------------------------------------------------------

def triangle_exponents(k):
    """Monomials r^a s^b of total degree <= k in the order 1, r, s, r^2, rs, s^2, ..."""
    return [(deg - b, b) for deg in range(k + 1) for b in range(deg + 1)]


def ref_triangle_moment(a, b):
    """``int_0^1 int_0^{1-r} r^a s^b ds dr = a! b! / (a+b+2)!``."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@dataclass(frozen=True)
class TriangleBasis:
    """Orthonormal basis on tau = {r, s >= 0, r + s <= 1} for the inner product
    ``(f, g)_tau = int_tau f g``; row i of ``coeffs`` holds the monomial
    coefficients of phi_i."""

    k: int
    exponents: tuple
    coeffs: np.ndarray

    def __len__(self):
        return len(self.exponents)

    def monomials(self, r, s):
        r, s = np.asarray(r, dtype=float), np.asarray(s, dtype=float)
        return np.stack([r**a * s**b for a, b in self.exponents], axis=-1)

    def monomial_grads(self, r, s):
        r, s = np.asarray(r, dtype=float), np.asarray(s, dtype=float)
        dr = [a * r ** max(a - 1, 0) * s**b if a else np.zeros_like(r) for a, b in self.exponents]
        ds = [b * r**a * s ** max(b - 1, 0) if b else np.zeros_like(r) for a, b in self.exponents]
        return np.stack(dr, axis=-1), np.stack(ds, axis=-1)

    def __call__(self, r, s):
        """phi_i(r, s), shape (..., n_basis)."""
        return self.monomials(r, s) @ self.coeffs.T

    def grads(self, r, s):
        dr, ds = self.monomial_grads(r, s)
        return dr @ self.coeffs.T, ds @ self.coeffs.T


@lru_cache(maxsize=None)
def triangle_orthobasis(k):
    """Gram-Schmidt of {1, r, s, r^2, rs, s^2, ...} in (.,.)_tau.

    Classical Gram-Schmidt in this order is the inverse Cholesky factor of the
    monomial Gram matrix, computed here from exact moments.  Signs follow
    positive leading coefficients.
    """
    if not 0 <= k <= 4:
        raise ArgumentError("triangle bases are provided for 0 <= k <= 4")
    exps = tuple(triangle_exponents(k))
    G = np.array([[ref_triangle_moment(a1 + a2, b1 + b2) for a2, b2 in exps] for a1, b1 in exps])
    Lc = np.linalg.cholesky(G)
    C = np.linalg.solve(Lc, np.eye(len(exps)))  # rows: phi_i in monomials
    C.setflags(write=False)
    return TriangleBasis(k, exps, C)


def triangle_rule(q):
    """Collapsed (Duffy) Gauss rule on tau, exact for degree <= 2q - 2.

    Returns r, s, w with sum(w) = 1/2.
    """
    t, wt = gauss01(q)
    U, V = np.meshgrid(t, t, indexing="ij")
    r = U.ravel()
    s = ((1 - U) * V).ravel()
    w = (np.outer(wt, wt) * (1 - U)).ravel()
    return r, s, w


class TriangleSpace:
    """P_k on a physical triangle with basis psi_i = phi_i(lambda) / sqrt(2|T|).

    Barycentric coordinates (r, s) = (lambda_1, lambda_2) refer to the first two
    vertices: ``x = z3 + (z1 - z3) r + (z2 - z3) s``.
    """

    def __init__(self, k, vertices):
        V = np.asarray(vertices, dtype=float)
        if V.shape != (3, 2):
            raise ArgumentError("triangle needs three 2-D vertices")
        self.k = k
        self.vertices = V
        self.J = np.column_stack([V[0] - V[2], V[1] - V[2]])  # d x / d(r, s)
        det = np.linalg.det(self.J)
        if abs(det) < 1e-14 * max(1.0, np.abs(V).max() ** 2):
            raise GeometryError("degenerate (collinear) triangle")
        if det < 0:
            raise GeometryError("triangle vertices must be counterclockwise")
        self.area = 0.5 * det
        self.basis = triangle_orthobasis(k)
        self.M = len(self.basis)
        self.scale = 1.0 / np.sqrt(2 * self.area)
        self.Jinv = np.linalg.inv(self.J)

    def to_phys(self, r, s):
        return self.vertices[2] + np.multiply.outer(r, self.J[:, 0]) + np.multiply.outer(s, self.J[:, 1])

    def to_bary(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rs = (x - self.vertices[2]) @ self.Jinv.T
        return rs[:, 0], rs[:, 1]

    def contains(self, x, tol=1e-12):
        r, s = self.to_bary(x)
        return (r >= -tol) & (s >= -tol) & (r + s <= 1 + tol)

    def values_at(self, x):
        r, s = self.to_bary(x)
        return self.basis(r, s) * self.scale

    def grads_at(self, x):
        """Physical gradients, shape (n, n_basis, 2)."""
        r, s = self.to_bary(x)
        gr, gs = self.basis.grads(r, s)
        # grad_x = Jinv^T grad_(r,s)
        return (np.stack([gr, gs], axis=-1) @ self.Jinv) * self.scale

    def quadrature(self, q):
        """Physical points and weights of the collapsed Gauss rule."""
        r, s, w = triangle_rule(q)
        return self.to_phys(r, s), w * 2 * self.area

    def project(self, f, q=None):
        q = q or max(self.k + 2, 4)
        x, w = self.quadrature(q)
        vals = np.asarray(f(x), dtype=float)
        if not np.all(np.isfinite(vals)):
            from .errors import DataError
            i = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise DataError(f"non-finite sample at quadrature point {x[i]}")
        return (self.values_at(x) * w[:, None]).T @ vals

    def evaluate(self, coeffs, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if not np.all(self.contains(x, 1e-10)):
            raise ArgumentError("point outside the triangle")
        out = self.values_at(x) @ np.asarray(coeffs)
        return out[0] if single else out

    def edge(self, e):
        """Endpoints of edge e (edge e joins vertex e to vertex e+1)."""
        return self.vertices[e], self.vertices[(e + 1) % 3]

    def edge_normal(self, e):
        a, b = self.edge(e)
        t = b - a
        n = np.array([t[1], -t[0]])  # outward for counterclockwise order
        return n / np.linalg.norm(n)


# ---------------------------------------------------------------------------
# patches and face groups
# ---------------------------------------------------------------------------

@dataclass
class Patch:
    kind: str  # "box" | "triangle"
    space: object
    offset: int = 0

    @property
    def ndof(self):
        return self.space.M

    @property
    def slice(self):
        return slice(self.offset, self.offset + self.ndof)


def box_patch(d, k, N, corner, lengths):
    return Patch("box", SparseSpace(d, k, N, corner, lengths))


def triangle_patch(k, vertices):
    return Patch("triangle", TriangleSpace(k, vertices))


@dataclass
class FaceGroup:
    """Faces sharing one outward normal (outward from patch ``p``).

    kind:
      box_internal  all interior faces of box p normal to ``axis``
      box_boundary  side ``side`` (0 or 1) of box p along ``axis`` on the domain boundary
      box_box       side 1 of box p along ``axis`` glued to side 0 of box q (same tangential grid)
      box_tri       side ``side`` of box p along ``axis``, fully covered by triangle edges ``tri_edges``
      tri_tri       edge ``edge`` of triangle p glued to edge ``edge_q`` of triangle q
      tri_boundary  edge ``edge`` of triangle p on the domain boundary
    """

    kind: str
    p: int
    normal: np.ndarray
    axis: int = None
    side: int = None
    q: int = None
    edge: int = None
    edge_q: int = None
    tri_edges: list = field(default_factory=list)

    @property
    def boundary(self):
        return self.kind in ("box_boundary", "tri_boundary")


@dataclass
class FineFace:
    left: tuple  # element id
    right: tuple  # element id or None on the boundary
    normal: np.ndarray  # outward from left
    measure: float
    center: np.ndarray


class MeshTopology:
    """Patches with global dof offsets and the face groups coupling them."""

    def __init__(self, d, patches, groups, name=""):
        self.d = d
        self.patches = patches
        self.groups = groups
        self.name = name
        off = 0
        for p in patches:
            p.offset = off
            off += p.ndof
        self.M = off

    # -- element / face bookkeeping ----------------------------------------
    def elements(self):
        out = []
        for ip, p in enumerate(self.patches):
            if p.kind == "box":
                nc = 2**p.space.N
                out += [(ip, c) for c in itertools.product(range(nc), repeat=self.d)]
            else:
                out.append((ip, None))
        return out

    @property
    def n_elements(self):
        return len(self.elements())

    def area(self):
        tot = 0.0
        for p in self.patches:
            tot += p.space.volume if p.kind == "box" else p.space.area
        return tot

    def boundary_groups(self):
        return [g for g in self.groups if g.boundary]

    def fine_faces(self):
        """Expand the face groups into faces between single finest-level elements."""
        faces = []
        for g in self.groups:
            faces += list(_expand_group(self, g))
        return faces

    def face_counts(self):
        faces = self.fine_faces()
        nb = sum(f.right is None for f in faces)
        return len(faces) - nb, nb


def _box_side_cells(space, axis, side):
    """Cells (multi-indices) touching side ``side`` of the box along ``axis``."""
    nc = 2**space.N
    fixed = 0 if side == 0 else nc - 1
    ranges = [range(nc) if m != axis else [fixed] for m in range(space.d)]
    return list(itertools.product(*ranges))


def _cell_face(space, cell, axis, side):
    h = space.lengths / 2**space.N
    lo = space.corner + np.array(cell) * h
    center = lo + h / 2
    center[axis] = lo[axis] + side * h[axis]
    measure = float(np.prod(np.delete(h, axis)))
    return center, measure


def _expand_group(topo, g):
    P = topo.patches[g.p]
    d = topo.d
    if g.kind == "box_internal":
        sp, m = P.space, g.axis
        nc = 2**sp.N
        for cell in itertools.product(range(nc), repeat=d):
            if cell[m] == nc - 1:
                continue
            nb = list(cell)
            nb[m] += 1
            c, a = _cell_face(sp, cell, m, 1)
            yield FineFace((g.p, cell), (g.p, tuple(nb)), g.normal, a, c)
    elif g.kind == "box_boundary":
        for cell in _box_side_cells(P.space, g.axis, g.side):
            c, a = _cell_face(P.space, cell, g.axis, g.side)
            yield FineFace((g.p, cell), None, g.normal, a, c)
    elif g.kind == "box_box":
        Q = topo.patches[g.q]
        for cell in _box_side_cells(P.space, g.axis, 1):
            other = list(cell)
            other[g.axis] = 0
            c, a = _cell_face(P.space, cell, g.axis, 1)
            yield FineFace((g.p, cell), (g.q, tuple(other)), g.normal, a, c)
    elif g.kind == "box_tri":
        sp, m = P.space, g.axis
        t = 1 - m  # 2-D only
        h = sp.lengths[t] / 2**sp.N
        for iq, e in g.tri_edges:
            a, b = topo.patches[iq].space.edge(e)
            lo, hi = sorted((a[t], b[t]))
            grid = sp.corner[t] + h * np.arange(2**sp.N + 1)
            brk = np.unique(np.r_[lo, hi, grid[(grid > lo) & (grid < hi)]])
            for x0, x1 in zip(brk[:-1], brk[1:]):
                ci = int(np.clip(np.floor(((x0 + x1) / 2 - sp.corner[t]) / h), 0, 2**sp.N - 1))
                cell = [0, 0]
                cell[t] = ci
                cell[m] = 0 if g.side == 0 else 2**sp.N - 1
                center = np.empty(2)
                center[t] = (x0 + x1) / 2
                center[m] = sp.corner[m] + g.side * sp.lengths[m]
                yield FineFace((g.p, tuple(cell)), (iq, None), g.normal, x1 - x0, center)
    elif g.kind in ("tri_tri", "tri_boundary"):
        a, b = P.space.edge(g.edge)
        right = (g.q, None) if g.kind == "tri_tri" else None
        yield FineFace((g.p, None), right, g.normal, float(np.linalg.norm(b - a)), (a + b) / 2)
    else:
        raise ArgumentError(f"unknown face group kind {g.kind}")


def _unit(d, m, sign=1.0):
    e = np.zeros(d)
    e[m] = sign
    return e


def _box_groups(d, ip, sides_taken=()):
    groups = [FaceGroup("box_internal", ip, _unit(d, m), axis=m) for m in range(d)]
    for m in range(d):
        for s in (0, 1):
            if (m, s) not in sides_taken:
                groups.append(FaceGroup("box_boundary", ip, _unit(d, m, 2 * s - 1.0), axis=m, side=s))
    return groups


# ---------------------------------------------------------------------------
# geometries
# ---------------------------------------------------------------------------

def make_unit_box(d, k, N):
    """Unit square (d=2) or unit cube (d=3) as a single box patch."""
    if d not in (2, 3):
        raise ArgumentError("d must be 2 or 3")
    patch = box_patch(d, k, N, np.zeros(d), np.ones(d))
    return MeshTopology(d, [patch], _box_groups(d, 0), name="cube" if d == 3 else "square")


LSHAPE_SQUARES = ((0.0, 1.0), (0.0, 0.0), (1.0, 0.0))  # lower-left corners of R1, R2, R3


def make_lshape(k, N):
    """Three unit squares R1 = [0,1]x[1,2], R2 = [0,1]^2, R3 = [1,2]x[0,1]."""
    patches = [box_patch(2, k, N, np.array(c), np.ones(2)) for c in LSHAPE_SQUARES]
    groups = []
    groups += _box_groups(2, 0, sides_taken={(1, 0)})
    groups += _box_groups(2, 1, sides_taken={(1, 1), (0, 1)})
    groups += _box_groups(2, 2, sides_taken={(0, 0)})
    # R2 top meets R1 bottom; R2 right meets R3 left
    groups.append(FaceGroup("box_box", 1, _unit(2, 1), axis=1, q=0))
    groups.append(FaceGroup("box_box", 1, _unit(2, 0), axis=0, q=2))
    return MeshTopology(2, patches, groups, name="lshape")


CIRCLE_RADIUS = 0.5
CIRCLE_CENTER = (0.5, 0.5)


def make_circle(k, N, radius=CIRCLE_RADIUS, center=CIRCLE_CENTER, inner_rect=None):
    """Rectangle plus 8 triangles approximating a disk by a polygon.

    inner_rect is ``(x0, y0, x1, y1)``; by default the square whose corners lie
    on the circle at the diagonal directions.  Each rectangle side, its midpoint
    and the circle point straight out from that midpoint span two triangles,
    so every rectangle side is covered by exactly two triangle edges.
    """
    R = float(radius)
    cx, cy = map(float, center)
    if R <= 0:
        raise GeometryError("radius must be positive")
    if inner_rect is None:
        a = R / np.sqrt(2)
        inner_rect = (cx - a, cy - a, cx + a, cy + a)
    x0, y0, x1, y1 = map(float, inner_rect)
    if not (x0 < x1 and y0 < y1):
        raise GeometryError("inner rectangle must have positive size")
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    if np.any(np.hypot(corners[:, 0] - cx, corners[:, 1] - cy) > R * (1 + 1e-12)):
        raise GeometryError("inner rectangle is not inside the circle")
    if not (x0 < cx < x1 and y0 < cy < y1):
        raise GeometryError("circle center must lie inside the inner rectangle")

    rect = box_patch(2, k, N, np.array([x0, y0]), np.array([x1 - x0, y1 - y0]))
    patches = [rect]
    groups = [FaceGroup("box_internal", 0, _unit(2, m), axis=m) for m in range(2)]

    # (axis, side): rectangle side, corners in counterclockwise order along it
    sides = [(1, 0, corners[0], corners[1]), (0, 1, corners[1], corners[2]),
             (1, 1, corners[2], corners[3]), (0, 0, corners[3], corners[0])]
    for axis, side, c1, c2 in sides:
        mid = (c1 + c2) / 2
        out = _unit(2, axis, 2 * side - 1.0)
        # circle point along the outward normal through the midpoint
        rel = mid - np.array([cx, cy])
        b = rel @ out
        t = -b + np.sqrt(b**2 - rel @ rel + R**2)
        apex = mid + t * out
        t1 = triangle_patch(k, [c1, apex, mid])
        t2 = triangle_patch(k, [mid, apex, c2])
        i1, i2 = len(patches), len(patches) + 1
        patches += [t1, t2]
        # edges: t1 = (c1, apex, mid): 0 chord, 1 split segment, 2 rectangle side
        #        t2 = (mid, apex, c2): 0 split segment, 1 chord, 2 rectangle side
        groups.append(FaceGroup("box_tri", 0, out, axis=axis, side=side, tri_edges=[(i1, 2), (i2, 2)]))
        groups.append(FaceGroup("tri_tri", i1, t1.space.edge_normal(1), edge=1, q=i2, edge_q=0))
        groups.append(FaceGroup("tri_boundary", i1, t1.space.edge_normal(0), edge=0))
        groups.append(FaceGroup("tri_boundary", i2, t2.space.edge_normal(1), edge=1))
    topo = MeshTopology(2, patches, groups, name="circle")
    topo.radius, topo.center = R, (cx, cy)
    return topo


def make_domain(name, d, k, N, **kw):
    if name in ("cube", "square", "box"):
        return make_unit_box(d, k, N)
    if name == "lshape":
        return make_lshape(k, N)
    if name == "circle":
        return make_circle(k, N, **kw)
    raise ArgumentError(f"unknown geometry {name!r}")
