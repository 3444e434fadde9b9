"""Command-line driver: ``sgrte {solve,study,check,dump-matrix,dof-report}``.

Runs are described by a YAML file (nested key-value) and flag overrides;
flags win.  Recognized keys::

    problem:
      name: example1            # example1..example7 | custom
      params: {}                # keyword arguments of the problem factory
      sigma_t: null             # optional overrides of the constant cross sections
      sigma_s: null
    discretization:
      N: 2
      k: 2
      n: 2                      # S_n order
      theta0: auto              # or a number; auto = 10**(N + k)
    solver:
      variant: gauss_seidel     # or jacobi
      tol: 1.0e-10
      max_sweeps: 500
      strict: true              # false: warn instead of failing the margin check
    output:
      dir: .
      table: results.csv
      field: null               # flux samples file (problems without exact solution)
      grid: null                # points per axis of the flux grid
      slice_z: 0.1              # 3-D flux slice; null for the full 3-D grid
    study:
      N: [1, 2, 3, 4]
      k: [2]
      n: [2]
      jobs: 1

Exit codes: 0 success, 2 config error, 3 solver failure, 4 assumption violation.
"""

import argparse
import copy
import csv
import logging
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import yaml

from .assembly import build_system, default_theta0, write_triplets
from .domains import make_domain, triangle_orthobasis, triangle_rule
from .errors import (ArgumentError, AssumptionError, ConfigError, DataError, GeometryError,
                     SolverError)
from .ordinates import SUPPORTED_ORDERS, build_sn, validate_precision
from .postprocess import (ErrorReport, UndefinedError, direction_errors, photon_flux,
                          uniform_grid, write_grid)
from .problems import get_problem, with_sigmas
from .scattering import PhaseFunction, build_kernel
from .solver import solve
from .sparse_space import dof_growth_report
from .wavelet1d import Basis1D, build_mother_wavelets

log = logging.getLogger("sgrte")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ASSUMPTION = 0, 2, 3, 4

DEFAULTS = {
    "problem": {"name": "example1", "params": {}, "sigma_t": None, "sigma_s": None},
    "discretization": {"N": 2, "k": 2, "n": 2, "theta0": "auto"},
    "solver": {"variant": "gauss_seidel", "tol": 1e-10, "max_sweeps": 500, "strict": True},
    "output": {"dir": ".", "table": "results.csv", "field": None, "grid": None, "slice_z": 0.1},
    "study": {"N": [1, 2, 3, 4], "k": [2], "n": [2], "jobs": 1},
}

MAX_K = 4
MAX_N = {2: 8, 3: 5}
STUDY_COLUMNS = ["problem", "k", "n", "N", "theta0", "dofs", "error", "rate",
                 "sweeps", "change", "residual", "status"]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _merge(base, over, path=""):
    for key, val in over.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict) and key != "params":
            if not isinstance(val, dict):
                raise ConfigError(f"config key '{where}' must be a mapping")
            _merge(base[key], val, where)
        else:
            base[key] = val
    return base


def load_config(path=None, text=None):
    """Defaults merged with a YAML file (or string); raises ConfigError with the line."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is None and text is None:
        return cfg
    try:
        if text is None:
            with open(path) as fh:
                text = fh.read()
        data = yaml.safe_load(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"config parse error{where}: {getattr(exc, 'problem', exc)}") from exc
    if data is None:
        return cfg
    if not isinstance(data, dict):
        raise ConfigError("config top level must be a mapping")
    return _merge(cfg, data)


def _number(cfg, section, key, kind):
    val = cfg[section][key]
    try:
        if kind is int:
            if isinstance(val, bool) or float(val) != int(val):
                raise ValueError
            return int(val)
        return float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"'{section}.{key}' must be {'an integer' if kind is int else 'a number'},"
                          f" got {val!r}") from None


def _int_list(cfg, key):
    val = cfg["study"][key]
    vals = val if isinstance(val, list) else [val]
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
            raise ConfigError(f"'study.{key}' entries must be integers, got {v!r}")
        out.append(int(v))
    return out


def problem_dim(cfg):
    name = cfg["problem"]["name"]
    if name in ("example5", "example6", "example7"):
        return 2
    if name == "custom":
        geo = cfg["problem"]["params"].get("geometry", "cube")
        return cfg["problem"]["params"].get("d") or (2 if geo in ("square", "lshape", "circle") else 3)
    return 3


def check_discretization(d, N, k, n):
    if not 0 <= k <= MAX_K:
        raise ConfigError(f"k = {k} outside 0..{MAX_K}")
    if not 0 <= N <= MAX_N[d]:
        raise ConfigError(f"N = {N} outside 0..{MAX_N[d]} for d = {d}")
    if n not in SUPPORTED_ORDERS:
        raise ConfigError(f"S_n order n = {n} not supported; choose from {list(SUPPORTED_ORDERS)}")


def validate(cfg):
    """Type and range checks done before anything is allocated."""
    if cfg["problem"]["name"] not in ("example1", "example2", "example3", "example4", "example5",
                                      "example6", "example7", "custom"):
        raise ConfigError(f"unknown problem '{cfg['problem']['name']}'")
    if not isinstance(cfg["problem"]["params"] or {}, dict):
        raise ConfigError("'problem.params' must be a mapping")
    d = problem_dim(cfg)
    N = _number(cfg, "discretization", "N", int)
    k = _number(cfg, "discretization", "k", int)
    n = _number(cfg, "discretization", "n", int)
    check_discretization(d, N, k, n)
    th = cfg["discretization"]["theta0"]
    if th != "auto":
        if _number(cfg, "discretization", "theta0", float) < 0:
            raise ConfigError("'discretization.theta0' must be nonnegative or 'auto'")
    if cfg["solver"]["variant"] not in ("gauss_seidel", "jacobi"):
        raise ConfigError(f"'solver.variant' must be gauss_seidel or jacobi, got {cfg['solver']['variant']!r}")
    if _number(cfg, "solver", "tol", float) <= 0:
        raise ConfigError("'solver.tol' must be positive")
    if _number(cfg, "solver", "max_sweeps", int) < 1:
        raise ConfigError("'solver.max_sweeps' must be at least 1")
    for key in ("sigma_t", "sigma_s"):
        if cfg["problem"][key] is not None:
            _number(cfg, "problem", key, float)
    return cfg


def _phase_from(val):
    if isinstance(val, PhaseFunction) or val is None:
        return val
    if isinstance(val, str):
        return PhaseFunction(val)
    if isinstance(val, dict):
        if "file" in val:
            return PhaseFunction.from_file(val["file"])
        return PhaseFunction(val.get("kind", "isotropic"), float(val.get("eta", 0.0)))
    raise ConfigError(f"cannot interpret phase function {val!r}")


def make_problem(cfg):
    params = dict(cfg["problem"]["params"] or {})
    if "phase" in params:
        params["phase"] = _phase_from(params["phase"])
    try:
        pr = get_problem(cfg["problem"]["name"], **params)
    except TypeError as exc:
        raise ConfigError(f"bad 'problem.params': {exc}") from exc
    st, ss = cfg["problem"]["sigma_t"], cfg["problem"]["sigma_s"]
    if st is not None or ss is not None:
        pr = with_sigmas(pr, None if st is None else float(st), None if ss is None else float(ss))
    return pr


def resolve_theta0(cfg, N, k):
    th = cfg["discretization"]["theta0"]
    return default_theta0(N, k) if th == "auto" else float(th)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def build_case(cfg, N=None, k=None, n=None):
    """Problem, mesh, ordinates and assembled block system for one run."""
    dsc = cfg["discretization"]
    N = int(dsc["N"] if N is None else N)
    k = int(dsc["k"] if k is None else k)
    n = int(dsc["n"] if n is None else n)
    pr = make_problem(cfg)
    check_discretization(pr.d, N, k, n)
    topo = make_domain(pr.geometry, pr.d, k, N, **pr.geometry_params) if pr.geometry == "circle" \
        else make_domain(pr.geometry, pr.d, k, N)
    oset = build_sn(n)
    system = build_system(pr, topo, oset, theta0=resolve_theta0(cfg, N, k),
                          strict=bool(cfg["solver"]["strict"]))
    return pr, topo, oset, system


def run_case(cfg, N=None, k=None, n=None):
    """Assemble, solve and measure; returns (ErrorReport, SolutionField, problem)."""
    pr, topo, oset, system = build_case(cfg, N, k, n)
    s = cfg["solver"]
    sol = solve(system, s["variant"], _number(cfg, "solver", "tol", float),
                _number(cfg, "solver", "max_sweeps", int))
    st = sol.stats
    rep = ErrorReport(pr.name, system.info["N"], system.info["k"], oset.order,
                      system.theta0, topo.M, sweeps=st.sweeps, change=st.change,
                      residual=st.residual, wall=st.wall, status=st.status)
    if pr.exact is not None:
        err, ref = direction_errors(sol, pr.exact)
        w = oset.weights
        den = float(w @ ref)
        if den <= 0:
            raise UndefinedError("exact solution has zero weighted norm")
        rep.error = float(np.sqrt((w @ err) / den))
        rep.direction_errors = [float(v) for v in np.sqrt(err / np.where(ref > 0, ref, 1.0))]
    return rep, sol, pr


def cmd_solve(cfg, out=None):
    out = out or sys.stdout
    validate(cfg)
    rep, sol, pr = run_case(cfg)
    print(f"problem {rep.problem}  N={rep.N} k={rep.k} n={rep.n}  dofs={rep.dofs}"
          f"  directions={sol.oset.directions.shape[0]}  theta0={rep.theta0:g}", file=out)
    print(f"solver {rep.status}: sweeps={rep.sweeps} change={rep.change:.3e}"
          f" residual={rep.residual:.3e} wall={rep.wall:.2f}s", file=out)
    if rep.error is not None:
        print(f"relative L2 error {rep.error:.4e}", file=out)
    o = cfg["output"]
    path = o["field"]
    if path is None and pr.exact is None:
        path = "flux.txt"
    if path:
        path = os.path.join(o["dir"], path)
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        grid = uniform_grid(sol.topo, o["grid"], o["slice_z"])
        q = photon_flux(sol, grid)
        write_grid(path, grid, q)
        if np.nanmin(q) < 0:
            # DG gives no positivity guarantee; report but do not fail
            log.warning("flux is negative at %d of %d samples (min %.3e)",
                        int(np.sum(q < 0)), int(np.sum(np.isfinite(q))), float(np.nanmin(q)))
        print(f"flux field written to {path}", file=out)
    if not sol.stats.converged:
        return EXIT_SOLVER
    return EXIT_OK


# study ---------------------------------------------------------------------

def _fmt_err(v):
    return "" if v is None else f"{v:.4e}"


def _study_row(args):
    cfg, k, n, N = args
    row = {"problem": cfg["problem"]["name"], "k": k, "n": n, "N": N, "rate": ""}
    try:
        rep, _, _ = run_case(cfg, N, k, n)
        row.update(theta0=f"{rep.theta0:g}", dofs=rep.dofs, error=_fmt_err(rep.error),
                   sweeps=rep.sweeps, change=f"{rep.change:.3e}", residual=f"{rep.residual:.3e}",
                   status=rep.status)
    except (ArgumentError, AssumptionError, ConfigError, DataError, GeometryError, SolverError) as exc:
        row.update(theta0="", dofs="", error="", sweeps="", change="", residual="",
                   status=f"failed: {type(exc).__name__}: {exc}".replace("\n", " "))
    return row


def add_rates(rows):
    """rate_N = log2(err_{N-1} / err_N) from the printed errors, for consecutive N."""
    by = {}
    for r in rows:
        by[(str(r["k"]), str(r["n"]), int(r["N"]))] = r
    for (k, n, N), r in by.items():
        prev = by.get((k, n, N - 1))
        r["rate"] = ""
        if prev and prev.get("error") and r.get("error"):
            e0, e1 = float(prev["error"]), float(r["error"])
            if e0 > 0 and e1 > 0:
                r["rate"] = f"{math.log2(e0 / e1):.4f}"
    return rows


def read_study(path):
    if not os.path.exists(path):
        return []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != STUDY_COLUMNS:
            raise ConfigError(f"{path} exists but is not a study table (columns {rd.fieldnames})")
        return list(rd)


def write_study(path, rows):
    rows = sorted(rows, key=lambda r: (int(r["k"]), int(r["n"]), int(r["N"])))
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.DictWriter(fh, STUDY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: r.get(c, "") for c in STUDY_COLUMNS})
    os.replace(tmp, path)


def cmd_study(cfg, out=None):
    out = out or sys.stdout
    validate(cfg)
    st = cfg["study"]
    Ns, ks, ns = _int_list(cfg, "N"), _int_list(cfg, "k"), _int_list(cfg, "n")
    d = problem_dim(cfg)
    for N in Ns:
        for k in ks:
            for n in ns:
                check_discretization(d, N, k, n)
    path = os.path.join(cfg["output"]["dir"], cfg["output"]["table"])
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    rows = read_study(path)
    done = {(int(r["k"]), int(r["n"]), int(r["N"])) for r in rows if not r["status"].startswith("failed")}
    rows = [r for r in rows if (int(r["k"]), int(r["n"]), int(r["N"])) in done]
    todo = [(cfg, k, n, N) for k in ks for n in ns for N in Ns if (k, n, N) not in done]
    if done:
        print(f"resuming: {len(done)} rows already in {path}", file=out)
    jobs = max(1, int(st.get("jobs") or 1))
    results = map(_study_row, todo) if jobs == 1 else ProcessPoolExecutor(jobs).map(_study_row, todo)
    for row in results:
        rows.append(row)
        print(f"k={row['k']} n={row['n']} N={row['N']}  error={row['error'] or '-'}  {row['status']}",
              file=out)
        write_study(path, add_rates(rows))  # checkpoint after every row
    write_study(path, add_rates(rows))
    print(f"table written to {path}", file=out)
    return EXIT_OK


# check ---------------------------------------------------------------------

def _line(out, ok, name, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", file=out)
    return ok


def run_checks(cfg, out=None):
    """Property suites; returns a list of (name, passed)."""
    out = out or sys.stdout
    results = []
    for n in SUPPORTED_ORDERS:
        oset = build_sn(n)
        rep = validate_precision(oset, oset.exact_degree)
        results.append((f"S{n} moments", _line(out, rep.passed(1e-9), f"S{n} moments degree <= {rep.degree}",
                                               f"max error {rep.max_error:.2e}")))
    k = int(cfg["discretization"]["k"])
    N = min(int(cfg["discretization"]["N"]), 5)
    b = Basis1D(N, k)
    x, P = b.projector(k + 2)
    err = np.abs(P @ b.values(x) - np.eye(b.H)).max()
    results.append(("1-D basis", _line(out, err < 1e-12, f"1-D multiwavelet orthonormality (N={N}, k={k})",
                                       f"max |Gram - I| {err:.2e}")))
    tb = triangle_orthobasis(k)
    r, s, w = triangle_rule(k + 2)
    V = tb(r, s)
    err = np.abs((V * w[:, None]).T @ V - np.eye(len(tb))).max()
    results.append(("triangle basis", _line(out, err < 1e-10, f"triangle basis orthonormality (k={k})",
                                            f"max |Gram - I| {err:.2e}")))
    for kind, etas in (("hg", (0.0, 0.1, -0.1, 0.5, -0.5, 0.9)), ("sam", (0.0, 0.1, -0.1, 0.5, -0.5, 0.9))):
        for eta in etas:
            e = abs(PhaseFunction(kind, eta).normalization() - 1.0)
            results.append((f"{kind} {eta}", _line(out, e < 1e-10, f"{kind.upper()} normalization eta={eta:+.1f}",
                                                   f"|2 pi int g - 1| {e:.2e}")))
    try:
        pr = make_problem(cfg)
        oset = build_sn(int(cfg["discretization"]["n"]))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, rep = build_kernel(pr.phase, oset, pr.sigma_s, pr.sigma_t, strict=False)
        results.append(("margin", _line(out, rep.ok, f"assumption margin ({pr.name}, S{oset.order})",
                                        f"sigma_t - m sigma_s = {rep.margin:.6g} (m = {rep.m:.6g})")))
    except (ArgumentError, DataError) as exc:
        results.append(("margin", _line(out, False, "assumption margin", str(exc))))
    return results


def cmd_check(cfg, out=None):
    out = out or sys.stdout
    validate(cfg)
    res = run_checks(cfg, out)
    print(f"{sum(ok for _, ok in res)}/{len(res)} checks passed", file=out)
    return EXIT_OK


# dump-matrix / dof-report ----------------------------------------------------

def dump_basis(path, k):
    """Mother-wavelet coefficient tables (Legendre basis on each half)."""
    mw = build_mother_wavelets(k)
    with open(path, "w") as fh:
        fh.write(f"# k={k}: wavelet half p coefficient\n")
        for i in range(k + 1):
            for h in range(2):
                for p in range(k + 1):
                    fh.write(f"{i} {h} {p} {mw.halves[i, h, p]:.16e}\n")


def cmd_dump_matrix(cfg, path, basis_path=None, out=None):
    out = out or sys.stdout
    validate(cfg)
    _, _, _, system = build_case(cfg)
    n, nnz, ratio = write_triplets(path, system)
    print(f"dimension {n} nnz {nnz} sparsity {100 * ratio:.2f}%  ({path})", file=out)
    if basis_path:
        dump_basis(basis_path, int(cfg["discretization"]["k"]))
        print(f"basis tables written to {basis_path}", file=out)
    return EXIT_OK


def cmd_dof_report(d, k, N_max, out=None):
    out = out or sys.stdout
    if d not in (2, 3):
        raise ConfigError("d must be 2 or 3")
    print("N,sparse_dofs,full_dofs,ratio", file=out)
    for N, s, f, r in dof_growth_report(d, k, N_max):
        print(f"{N},{s},{f},{r:.6f}", file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _parser():
    ap = argparse.ArgumentParser(prog="sgrte", description="Sparse-grid DG discrete-ordinate RTE solver")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="YAML run configuration")
        p.add_argument("--problem")
        p.add_argument("-N", type=int)
        p.add_argument("-k", type=int)
        p.add_argument("-n", type=int, help="S_n order")
        p.add_argument("--theta0", help="penalty parameter or 'auto'")
        p.add_argument("--sigma-t", type=float)
        p.add_argument("--sigma-s", type=float)
        p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                       help="problem factory argument (YAML value), repeatable")
        p.add_argument("--variant", choices=["gauss_seidel", "jacobi"])
        p.add_argument("--tol", type=float)
        p.add_argument("--max-sweeps", type=int)
        p.add_argument("--no-strict", action="store_true", help="warn on a failed margin check")
        p.add_argument("--out-dir")

    p = sub.add_parser("solve", help="one pipeline run")
    common(p)
    p.add_argument("--field", help="flux samples output file")
    p.add_argument("--grid", type=int, help="points per axis of the flux grid")

    p = sub.add_parser("study", help="grid of runs written as a CSV table")
    common(p)
    p.add_argument("--table")
    p.add_argument("--Ns", type=int, nargs="*")
    p.add_argument("--ks", type=int, nargs="*")
    p.add_argument("--ns", type=int, nargs="*")
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("check", help="quadrature, basis, kernel and margin checks")
    common(p)

    p = sub.add_parser("dump-matrix", help="global matrix as coordinate triplets")
    common(p)
    p.add_argument("output")
    p.add_argument("--basis-table", help="also write the mother-wavelet tables here")

    p = sub.add_parser("dof-report", help="sparse vs full dof counts")
    p.add_argument("-d", type=int, default=3)
    p.add_argument("-k", type=int, default=2)
    p.add_argument("--N-max", type=int, default=5)
    return ap


def _apply_flags(cfg, a):
    pairs = [("problem", "name", "problem"), ("discretization", "N", "N"), ("discretization", "k", "k"),
             ("discretization", "n", "n"), ("problem", "sigma_t", "sigma_t"), ("problem", "sigma_s", "sigma_s"),
             ("solver", "variant", "variant"), ("solver", "tol", "tol"), ("solver", "max_sweeps", "max_sweeps"),
             ("output", "dir", "out_dir"), ("output", "field", "field"), ("output", "grid", "grid"),
             ("output", "table", "table"), ("study", "N", "Ns"), ("study", "k", "ks"), ("study", "n", "ns"),
             ("study", "jobs", "jobs")]
    for sec, key, attr in pairs:
        v = getattr(a, attr, None)
        if v is not None:
            cfg[sec][key] = v
    if getattr(a, "theta0", None) is not None:
        cfg["discretization"]["theta0"] = a.theta0 if a.theta0 == "auto" else yaml.safe_load(a.theta0)
    if getattr(a, "no_strict", False):
        cfg["solver"]["strict"] = False
    params = dict(cfg["problem"]["params"] or {})
    for item in getattr(a, "param", []):
        if "=" not in item:
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        try:
            params[key.strip()] = yaml.safe_load(val)
        except yaml.YAMLError as exc:
            raise ConfigError(f"--param {key}: {exc}") from exc
    cfg["problem"]["params"] = params
    return cfg


def main(argv=None):
    a = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if a.command == "dof-report":
            return cmd_dof_report(a.d, a.k, a.N_max)
        cfg = _apply_flags(load_config(a.config), a)
        t0 = time.perf_counter()
        if a.command == "solve":
            code = cmd_solve(cfg)
        elif a.command == "study":
            code = cmd_study(cfg)
        elif a.command == "check":
            code = cmd_check(cfg)
        else:
            code = cmd_dump_matrix(cfg, a.output, a.basis_table)
        log.info("done in %.2fs", time.perf_counter() - t0)
        return code
    except (ConfigError, ArgumentError, DataError, GeometryError) as exc:
        print(f"sgrte: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionError as exc:
        print(f"sgrte: assumption violated: {exc} (margin {exc.margin})", file=sys.stderr)
        return EXIT_ASSUMPTION
    except SolverError as exc:
        print(f"sgrte: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
