"""Catalog of test problems: coefficients, phase function, source, inflow data
and exact solution where one is known.

Callables take points ``x`` of shape (..., d) and one direction ``omega``
(a 3-vector) and return arrays of shape (...).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArgumentError
from .ordinates import product_rule
from .scattering import PhaseFunction

PI = np.pi


@dataclass
class ProblemSpec:
    name: str
    geometry: str  # cube | square | lshape | circle
    d: int
    sigma_t: float
    sigma_s: float
    phase: PhaseFunction
    source: object = None  # f(x, omega)
    source_boxes: list = field(default_factory=list)  # [(lo, hi, value)]
    inflow: object = None  # alpha(x, omega) on the inflow boundary
    exact: object = None  # u(x, omega)
    exact_grad: object = None  # grad_x u(x, omega), shape (..., d)
    geometry_params: dict = field(default_factory=dict)

    @property
    def has_exact(self):
        return self.exact is not None


def _arr(x):
    """Points as an array; complex input is kept for complex-step derivatives."""
    x = np.asarray(x)
    return x if np.iscomplexobj(x) else x.astype(float)


def _sines(x):
    return np.prod(np.sin(PI * x), axis=-1)


def _grad_sines(x):
    s, c = np.sin(PI * x), np.cos(PI * x)
    d = x.shape[-1]
    out = []
    for m in range(d):
        t = PI * c[..., m]
        for j in range(d):
            if j != m:
                t = t * s[..., j]
        out.append(t)
    return np.stack(out, axis=-1)


def _omega_independent(fn):
    return lambda x, omega: fn(_arr(x))


def _manufactured_isotropic(sigma_t, sigma_s):
    """f = omega.grad u + (sigma_t - sigma_s) u for u = prod sin(pi x_m)."""
    def f(x, omega):
        x = _arr(x)
        d = x.shape[-1]
        return _grad_sines(x) @ np.asarray(omega)[:d] + (sigma_t - sigma_s) * _sines(x)
    return f


def example1():
    """Unit cube, sigma_t = 2, sigma_s = 1, isotropic; u = sin sin sin."""
    st, ss = 2.0, 1.0
    return ProblemSpec(
        "example1", "cube", 3, st, ss, PhaseFunction("isotropic"),
        source=_manufactured_isotropic(st, ss),
        exact=_omega_independent(_sines),
        exact_grad=lambda x, omega: _grad_sines(_arr(x)),
    )


def _third_component_solution(first_moment, sigma_t, sigma_s):
    """u = 10 s3 prod sin(pi x_m); S u = c1 u with c1 the phase first moment."""
    def u(x, omega):
        return 10.0 * omega[2] * _sines(_arr(x))

    def du(x, omega):
        return 10.0 * omega[2] * _grad_sines(_arr(x))

    def f(x, omega):
        x = _arr(x)
        s3 = omega[2]
        return (10.0 * (sigma_t - first_moment * sigma_s) * s3 * _sines(x)
                + 10.0 * s3 * (_grad_sines(x) @ np.asarray(omega)))
    return u, du, f


def example2(eta=0.1):
    """HG scattering with anisotropy eta; u = 10 s3 sin sin sin."""
    st, ss = 3.0, 1.0
    pf = PhaseFunction("hg", eta)
    u, du, f = _third_component_solution(pf.first_moment(), st, ss)
    return ProblemSpec("example2", "cube", 3, st, ss, pf, source=f, exact=u, exact_grad=du,
                       geometry_params={"eta": eta})


def example3(eta=0.9):
    """As example2 with the SAM phase function; f uses the SAM first moment."""
    st, ss = 3.0, 1.0
    pf = PhaseFunction("sam", eta)
    u, du, f = _third_component_solution(pf.first_moment(), st, ss)
    return ProblemSpec("example3", "cube", 3, st, ss, pf, source=f, exact=u, exact_grad=du,
                       geometry_params={"eta": eta})


DEFAULT_SOURCE_3D = [((0.0, 0.0, 0.0), (0.2, 0.2, 0.2), 1.0)]
DEFAULT_SOURCE_2D = [((0.0, 0.0), (0.2, 0.2), 1.0)]

# two-dimensional source layouts: a single corner source and a few variants
SOURCE_LAYOUTS_2D = {
    "corner": DEFAULT_SOURCE_2D,
    "center": [((0.4, 0.4), (0.6, 0.6), 1.0)],
    "two_corners": [((0.0, 0.0), (0.2, 0.2), 1.0), ((0.8, 0.0), (1.0, 0.2), 1.0)],
    "diagonal": [((0.0, 0.0), (0.2, 0.2), 1.0), ((0.8, 0.8), (1.0, 1.0), 1.0)],
    "four_corners": [((0.0, 0.0), (0.2, 0.2), 1.0), ((0.8, 0.0), (1.0, 0.2), 1.0),
                     ((0.0, 0.8), (0.2, 1.0), 1.0), ((0.8, 0.8), (1.0, 1.0), 1.0)],
    "bottom_middle": [((0.4, 0.0), (0.6, 0.2), 1.0)],
}


def example4_source3d(boxes=None):
    """Unit cube with a uniform source on [0, 0.2]^3, vacuum boundary."""
    return ProblemSpec("example4", "cube", 3, 1.0, 0.4, PhaseFunction("isotropic"),
                       source_boxes=list(DEFAULT_SOURCE_3D if boxes is None else boxes))


def example5_source2d(variant="corner", boxes=None):
    """Unit square in (x, y)-geometry with one or more 0.2 x 0.2 sources."""
    if boxes is None:
        if variant not in SOURCE_LAYOUTS_2D:
            raise ArgumentError(f"unknown source layout {variant!r}; choose from {sorted(SOURCE_LAYOUTS_2D)}")
        boxes = SOURCE_LAYOUTS_2D[variant]
    return ProblemSpec("example5", "square", 2, 1.0, 0.4, PhaseFunction("isotropic"),
                       source_boxes=list(boxes), geometry_params={"variant": variant})


def _planar_sines_problem(name, geometry, **params):
    st, ss = 2.0, 1.0
    u = _omega_independent(_sines)
    return ProblemSpec(
        name, geometry, 2, st, ss, PhaseFunction("isotropic"),
        source=_manufactured_isotropic(st, ss), inflow=u, exact=u,
        exact_grad=lambda x, omega: _grad_sines(_arr(x)),
        geometry_params=params,
    )


def example6_lshape():
    return _planar_sines_problem("example6", "lshape")


def example7_circle(radius=None, center=None):
    from .domains import CIRCLE_CENTER, CIRCLE_RADIUS
    return _planar_sines_problem("example7", "circle",
                                 radius=CIRCLE_RADIUS if radius is None else radius,
                                 center=tuple(CIRCLE_CENTER if center is None else center))


def custom(geometry="cube", sigma_t=1.0, sigma_s=0.0, phase=None, boxes=(), boundary=0.0, d=None):
    """Constant coefficients, box sources and a constant inflow value."""
    d = d or (2 if geometry in ("square", "lshape", "circle") else 3)
    boundary = float(boundary)
    inflow = None if boundary == 0.0 else (lambda x, omega: np.full(np.shape(x)[:-1], boundary))
    return ProblemSpec("custom", geometry, d, float(sigma_t), float(sigma_s), phase or PhaseFunction(),
                       source_boxes=[(tuple(lo), tuple(hi), float(v)) for lo, hi, v in boxes], inflow=inflow)


CATALOG = {
    "example1": example1, "example2": example2, "example3": example3,
    "example4": example4_source3d, "example5": example5_source2d,
    "example6": example6_lshape, "example7": example7_circle, "custom": custom,
}


def get_problem(name, **params):
    if name not in CATALOG:
        raise ArgumentError(f"unknown problem {name!r}; choose from {sorted(CATALOG)}")
    return CATALOG[name](**params)


def with_sigmas(problem, sigma_t=None, sigma_s=None):
    return replace(problem, sigma_t=problem.sigma_t if sigma_t is None else sigma_t,
                   sigma_s=problem.sigma_s if sigma_s is None else sigma_s)


# ---------------------------------------------------------------------------
# manufactured-solution self-check
# ---------------------------------------------------------------------------

def _directional_derivative(u, x, omega, d, step=1e-20):
    """omega . grad_x u by complex step (u must accept complex points)."""
    w = np.asarray(omega, dtype=float)[:d]
    return np.imag(u(x + 1j * step * w, omega)) / step


def scattering_oracle(problem, x, omega, n_polar=48):
    """``int g(omega . w') u(x, w') dw'`` with a high-order product rule."""
    dirs, wts = product_rule(n_polar, 2 * n_polar)
    g = problem.phase(np.clip(dirs @ omega, -1, 1))
    vals = np.array([problem.exact(x, wp) for wp in dirs])  # (n_dirs, ...)
    return np.tensordot(wts * g, vals, axes=(0, 0))


def manufactured_residual(problem, n_samples=100, seed=0, n_polar=48):
    """Max |omega.grad u + sigma_t u - sigma_s S u - f| over random (x, omega)."""
    if problem.exact is None or problem.source is None:
        raise ArgumentError("problem has no manufactured solution")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        x = _sample_point(problem, rng)
        v = rng.normal(size=3)
        omega = v / np.linalg.norm(v)
        adv = _directional_derivative(problem.exact, x.astype(complex), omega, problem.d)
        su = scattering_oracle(problem, x, omega, n_polar)
        res = adv + problem.sigma_t * problem.exact(x, omega) - problem.sigma_s * su - problem.source(x, omega)
        worst = max(worst, float(np.abs(res)))
    return worst


def _sample_point(problem, rng):
    if problem.geometry == "lshape":
        while True:
            x = rng.uniform(0, 2, size=2)
            if x[0] <= 1 or x[1] <= 1:
                return x
    if problem.geometry == "circle":
        R = problem.geometry_params["radius"]
        c = np.asarray(problem.geometry_params["center"])
        r, t = R * np.sqrt(rng.uniform()), rng.uniform(0, 2 * PI)
        return c + r * np.array([np.cos(t), np.sin(t)])
    return rng.uniform(0, 1, size=problem.d)
