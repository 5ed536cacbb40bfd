"""Command-line front end.

Usage::

    psihilfer solve --f 1 --g y --y0 1 --mu 0.5 --nu 1 --out out/
    psihilfer verify ml-identity
    psihilfer --config run.json

Every command writes plot-ready CSV curves (columns ``t``,
``psi_increment``, ``weighted_value``, ``unweighted_value``) and a
``report.json`` into the output directory. Exit status is 0 on success, 1 if
a verification fails and 2 on any error, in which case a JSON error record is
printed to stderr (and written to ``error.json`` when possible).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from psihilfer import __version__
from psihilfer import expr as ex
from psihilfer.errors import ExprError, HypothesisViolation, PsiHilferError, ValidationError
from psihilfer.extremal import (
    ExtremalConfig,
    comparison_bound,
    maximal_solution,
    minimal_solution,
    uniqueness_probe,
)
from psihilfer.grid import FractionalOrder, GradedMesh, GridFunction
from psihilfer.inequalities import (
    TouchpointCase,
    ml_identity_sweep,
    strict_comparison_check,
    touchpoint_derivative,
)
from psihilfer.operators import hilfer_derivative, psi_rl_integral
from psihilfer.psi import parse_psi_spec
from psihilfer.solver import HybridProblem, SolverConfig, solve_picard
from psihilfer.weighted import Order, weighted_compare

COMMANDS = ("integrate", "derive", "solve", "extremal", "compare", "verify", "probe-uniqueness")
VERIFY_TARGETS = ("touchpoint", "ml-identity", "comparison")
CSV_COLUMNS = ("t", "psi_increment", "weighted_value", "unweighted_value")

#: version of the CSV columns and JSON report keys
FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


# {{{ configuration


@dataclass(frozen=True)
class ProblemBlock:
    f: str = "1"
    g: str = "0"
    y0: float = 0.0
    y0_anchor: float | None = None
    T: float = 1.0
    psi: str = "identity"
    mu: float = 0.5
    nu: float = 1.0


@dataclass(frozen=True)
class SolverBlock:
    N: int = 1024
    r: float = 2.0
    tol: float = 1.0e-10
    max_iters: int = 200
    damping: float = 1.0


@dataclass(frozen=True)
class ExtremalBlock:
    eps0: float = 0.1
    q: float = 0.5
    stop_tol: float = 1.0e-6
    max_levels: int = 12
    aitken: bool = False


@dataclass(frozen=True)
class TaskBlock:
    """Command-specific inputs."""

    #: integrand / function to differentiate, in ``t`` (integrate, derive)
    h: str = "1"
    #: integration order (defaults to mu)
    order: float | None = None
    #: verify target
    target: str = "ml-identity"
    #: Mittag-Leffler rates and order sweep (defaults to the problem's mu, nu)
    L_values: tuple[float, ...] = (0.25, 0.5)
    mu_values: tuple[float, ...] | None = None
    nu_values: tuple[float, ...] | None = None
    #: number of randomized touchpoint cases and their seed
    cases: int = 50
    seed: int = 0
    #: function compared against the extremal solutions, in ``t`` (compare)
    u: str | None = None
    side: str = "lower"
    #: comparison function of the uniqueness probe, in ``t`` and ``m``
    G: str | None = None
    #: constant weighted values of the uniqueness starts
    starts: tuple[float, ...] = (0.0, 5.0)


@dataclass(frozen=True)
class RunConfig:
    command: str
    problem: ProblemBlock = field(default_factory=ProblemBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    extremal: ExtremalBlock = field(default_factory=ExtremalBlock)
    task: TaskBlock = field(default_factory=TaskBlock)
    out: str = "out"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # {{{ assembled objects

    def psi(self):
        return parse_psi_spec(self.problem.psi, self.problem.T)

    def order(self) -> FractionalOrder:
        return FractionalOrder(self.problem.mu, self.problem.nu)

    def solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(N=s.N, r=s.r, picard_tol=s.tol, max_iters=s.max_iters, damping=s.damping)

    def extremal_config(self) -> ExtremalConfig:
        e = self.extremal
        return ExtremalConfig(e.eps0, e.q, e.stop_tol, e.max_levels, e.aitken)

    def mesh(self) -> GradedMesh:
        return GradedMesh(self.problem.T, self.solver.N, self.solver.r)

    def hybrid_problem(self) -> HybridProblem:
        p = self.problem
        try:
            return HybridProblem(p.f, p.g, p.y0, p.T, self.psi(), self.order(), p.y0_anchor)
        except HypothesisViolation as exc:
            raise ValidationError(str(exc), field="f") from exc

    # }}}


_BLOCKS = {"problem": ProblemBlock, "solver": SolverBlock, "extremal": ExtremalBlock, "task": TaskBlock}

#: flag name -> (block, field)
_FLAG_FIELDS = {
    "f": ("problem", "f"),
    "g": ("problem", "g"),
    "y0": ("problem", "y0"),
    "y0_anchor": ("problem", "y0_anchor"),
    "T": ("problem", "T"),
    "psi": ("problem", "psi"),
    "mu": ("problem", "mu"),
    "nu": ("problem", "nu"),
    "mesh_n": ("solver", "N"),
    "mesh_r": ("solver", "r"),
    "tol": ("solver", "tol"),
    "max_iters": ("solver", "max_iters"),
    "damping": ("solver", "damping"),
    "eps0": ("extremal", "eps0"),
    "q": ("extremal", "q"),
    "stop_tol": ("extremal", "stop_tol"),
    "max_levels": ("extremal", "max_levels"),
    "h": ("task", "h"),
    "order": ("task", "order"),
    "target": ("task", "target"),
    "u": ("task", "u"),
    "side": ("task", "side"),
    "G": ("task", "G"),
}


def _coerce(block: str, name: str, value: Any, ftype: str) -> Any:
    if value is None:
        return None
    try:
        if ftype in ("float", "float | None"):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if ftype == "int":
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if ftype == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if ftype in ("str", "str | None"):
            if not isinstance(value, str):
                raise TypeError
            return value
        if ftype.startswith("tuple[float"):
            return tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(
            f"{block}.{name}: expected {ftype}, got {value!r}", field=name
        ) from exc
    return value


def _make_block(name: str, data: dict) -> Any:
    cls = _BLOCKS[name]
    if not isinstance(data, dict):
        raise ValidationError(f"'{name}' must be an object", field=name)
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ValidationError(f"unknown key(s) in '{name}': {', '.join(unknown)}", field=unknown[0])
    kwargs = {k: _coerce(name, k, v, str(known[k].type)) for k, v in data.items()}
    return cls(**kwargs)


def _read_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path!r}: {exc.strerror}", field="config") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"config {path!r} is not valid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}",
            field="config",
        ) from exc
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object", field="config")
    return data


def load_config(path: str | None = None, flags: dict | None = None) -> RunConfig:
    """Read a JSON config (optional), apply flag overrides and validate.

    *flags* maps flag names (``mu``, ``mesh_n``, ``command``, ``out``, ...)
    to values; ``None`` values are ignored.

    :raises ValidationError: naming the offending field.
    """
    data = _read_json(path) if path else {}
    unknown = sorted(set(data) - {"command", "out", *_BLOCKS})
    if unknown:
        raise ValidationError(f"unknown top-level key(s): {', '.join(unknown)}", field=unknown[0])
    blocks = {name: dict(data.get(name, {})) for name in _BLOCKS}
    command = data.get("command")
    out = data.get("out", "out")

    for key, value in (flags or {}).items():
        if value is None:
            continue
        if key == "command":
            command = value
        elif key == "out":
            out = value
        elif key in _FLAG_FIELDS:
            block, name = _FLAG_FIELDS[key]
            blocks[block][name] = value
        else:
            raise ValidationError(f"unknown flag {key!r}", field=key)

    if command not in COMMANDS:
        raise ValidationError(
            f"command must be one of {', '.join(COMMANDS)}, got {command!r}", field="command"
        )
    cfg = RunConfig(command=command, out=str(out),
                    **{name: _make_block(name, blocks[name]) for name in _BLOCKS})
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Check every invariant that can be checked before running."""
    p = cfg.problem
    if not math.isfinite(p.T) or p.T <= 0:
        raise ValidationError(f"T must be positive, got {p.T}", field="T")
    cfg.order()
    cfg.solver_config()
    cfg.extremal_config()
    psi = cfg.psi()
    psi.validate_nodes(cfg.mesh().nodes)

    for name in ("f", "g"):
        try:
            ex.parse(getattr(p, name), ["t", "y"])
        except ExprError as exc:
            raise ValidationError(f"{name}: {exc}", field=name) from exc
    cfg.hybrid_problem()

    t = cfg.task
    try:
        ex.parse(t.h, ["t"])
        if t.u is not None:
            ex.parse(t.u, ["t"])
        if t.G is not None:
            ex.parse(t.G, ["t", "m"])
    except ExprError as exc:
        raise ValidationError(str(exc), field="task") from exc
    if t.target not in VERIFY_TARGETS:
        raise ValidationError(
            f"verify target must be one of {', '.join(VERIFY_TARGETS)}, got {t.target!r}",
            field="target",
        )
    if t.side not in ("lower", "upper"):
        raise ValidationError(f"side must be 'lower' or 'upper', got {t.side!r}", field="side")
    if t.order is not None and not t.order > 0:
        raise ValidationError(f"integration order must be positive, got {t.order}", field="order")
    if cfg.command == "compare" and t.u is None:
        raise ValidationError("compare needs a function u", field="u")
    if cfg.command == "probe-uniqueness" and len(t.starts) < 2:
        raise ValidationError("probe-uniqueness needs at least two starts", field="starts")


# }}}


# {{{ output


def _num(x: float) -> str:
    x = float(x)
    return repr(x) if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))


def write_csv(path: str, t, u, weighted, values) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in zip(t, u, weighted, values):
            w.writerow([_num(v) for v in row])


def write_function(path: str, h: GridFunction) -> None:
    write_csv(path, h.nodes, h.increments, h.weighted, h.values())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(_num(x))
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def write_json(path: str, data: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


# }}}


# {{{ commands


def _weighted_curve(cfg: RunConfig, values: np.ndarray):
    u = np.asarray(cfg.psi().increment(cfg.mesh().nodes))
    xi = cfg.order().xi
    w = np.empty_like(values)
    w[1:] = u[1:] ** (1.0 - xi) * values[1:]
    w[0] = values[0] if xi == 1.0 else (0.0 if np.isfinite(values[0]) else np.nan)
    return u, w


def cmd_integrate(cfg: RunConfig) -> tuple[int, dict]:
    h = ex.compile_function(ex.parse(cfg.task.h, ["t"]))
    mesh = cfg.mesh()
    order = cfg.problem.mu if cfg.task.order is None else cfg.task.order
    values = psi_rl_integral(h, order, cfg.psi(), mesh=mesh)
    u, w = _weighted_curve(cfg, values)
    write_csv(os.path.join(cfg.out, "integral.csv"), mesh.nodes, u, w, values)
    return EXIT_OK, {"order": order, "value_at_T": float(values[-1])}


def cmd_derive(cfg: RunConfig) -> tuple[int, dict]:
    h = ex.compile_function(ex.parse(cfg.task.h, ["t"]))
    hf = GridFunction.from_callable(h, cfg.mesh(), cfg.psi(), cfg.order())
    D = hilfer_derivative(hf)
    u, w = _weighted_curve(cfg, D)
    write_csv(os.path.join(cfg.out, "derivative.csv"), hf.nodes, u, w, D)
    return EXIT_OK, {"value_at_T": float(D[-1]), "excluded_nodes": int(np.sum(np.isnan(D)))}


def cmd_solve(cfg: RunConfig) -> tuple[int, dict]:
    sol, rep = solve_picard(cfg.hybrid_problem(), cfg.solver_config())
    write_function(os.path.join(cfg.out, "solution.csv"), sol)
    status = EXIT_OK if rep.converged else EXIT_FAIL
    return status, {"solver": rep.to_dict(), "value_at_T": float(sol.values()[-1])}


def cmd_extremal(cfg: RunConfig) -> tuple[int, dict]:
    problem = cfg.hybrid_problem()
    scfg, ecfg = cfg.solver_config(), cfg.extremal_config()
    base, base_rep = solve_picard(problem, scfg)
    write_function(os.path.join(cfg.out, "solution.csv"), base)

    out: dict[str, Any] = {"base": base_rep.to_dict()}
    ok = base_rep.converged
    extremes = {}
    for kind, build in (("maximal", maximal_solution), ("minimal", minimal_solution)):
        res = build(problem, ecfg, scfg)
        extremes[kind] = res.solution
        write_function(os.path.join(cfg.out, f"{kind}.csv"), res.solution)
        for n, (_, level) in enumerate(res.ladder):
            write_function(os.path.join(cfg.out, f"{kind}_level_{n:03d}.csv"), level)
        out[kind] = res.report.to_dict()
        ok = ok and res.report.monotone

    below = weighted_compare(extremes["minimal"], base, slack=1e-8)
    above = weighted_compare(base, extremes["maximal"], slack=1e-8)
    sandwich = below in (Order.PRECEDES, Order.EQUALS) and above in (Order.PRECEDES, Order.EQUALS)
    out["sandwich"] = bool(sandwich)
    return (EXIT_OK if ok and sandwich else EXIT_FAIL), out


def cmd_compare(cfg: RunConfig) -> tuple[int, dict]:
    problem = cfg.hybrid_problem()
    ufun = ex.compile_function(ex.parse(cfg.task.u, ["t"]))
    u = GridFunction.from_callable(ufun, cfg.mesh(), problem.psi, problem.order)
    verdict = comparison_bound(u, problem, cfg.task.side, cfg.extremal_config(), cfg.solver_config())
    return (EXIT_OK if verdict.passed else EXIT_FAIL), {"comparison": verdict.to_dict()}


def _random_touchpoint_cases(n: int, seed: int, T: float, N: int):
    """Admissible cases ``m = c (DeltaPsi)^(xi-1) p(DeltaPsi)`` with ``p <= 0``
    before ``t1`` and ``p(t1) = 0``."""
    from psihilfer.psi import make_preset

    rng = np.random.default_rng(seed)
    presets = [("identity", None), ("power", 2.0), ("shifted_log", None)]
    mesh = GradedMesh(T, N)
    for k in range(n):
        kind, rho = presets[k % 3]
        psi = make_preset(kind, rho)
        order = FractionalOrder(float(rng.uniform(0.1, 0.9)), float(rng.choice([0.0, 0.5, 1.0, rng.uniform()])))
        i1 = int(rng.integers(int(0.3 * N), N))
        u = psi.increment(mesh.nodes)
        s = u / u[i1]
        # a touching profile: power of (1 - s) before t1, arbitrary after
        p = float(rng.uniform(1.0, 3.0))
        bump = -np.abs(1.0 - s) ** p * (1.0 + 0.5 * np.sin(float(rng.uniform(0, 6)) * s))
        bump[i1] = 0.0
        sign = rng.choice(["nonpositive", "nonnegative"])
        w = bump if sign == "nonpositive" else -bump
        m = GridFunction(mesh, float(rng.uniform(0.5, 2.0)) * w, order, psi, f"case{k}")
        yield TouchpointCase(m, i1, str(sign))


def cmd_verify(cfg: RunConfig) -> tuple[int, dict]:
    target = cfg.task.target
    if target == "ml-identity":
        mus = cfg.task.mu_values or (cfg.problem.mu,)
        nus = cfg.task.nu_values or (cfg.problem.nu,)
        mesh = GradedMesh(cfg.problem.T, cfg.solver.N, cfg.solver.r)
        psi = cfg.psi()
        cases = []
        for L in cfg.task.L_values:
            for mu in mus:
                for nu in nus:
                    sw = ml_identity_sweep(L, FractionalOrder(mu, nu), psi, mesh)
                    k = int(np.argmax(sw.rel_err))
                    cases.append({
                        "L": L, "mu": mu, "nu": nu,
                        "max_rel_err": float(sw.rel_err[k]),
                        "at_t": float(sw.t[k]),
                        "max_constant_term": float(np.max(np.abs(sw.constant_term))),
                        "passed": bool(sw.rel_err[k] < 1.0e-3),
                    })
        passed = all(c["passed"] for c in cases)
        summary = {"target": target, "passed": passed, "cases": cases,
                   "max_rel_err": max(c["max_rel_err"] for c in cases)}
    elif target == "touchpoint":
        cases = []
        for case in _random_touchpoint_cases(cfg.task.cases, cfg.task.seed, cfg.problem.T, cfg.solver.N):
            d = touchpoint_derivative(case)
            scale = float(np.max(np.abs(case.m.weighted)))
            ok = case.expected_sign * d >= -1.0e-6 * scale
            cases.append({"case": case.m.label, "t1": float(case.m.nodes[case.t1]),
                          "sign_before": case.sign_before, "derivative": d, "passed": bool(ok)})
        passed = all(c["passed"] for c in cases)
        summary = {"target": target, "passed": passed, "cases": cases,
                   "failures": sum(not c["passed"] for c in cases)}
    else:
        problem = cfg.hybrid_problem()
        scfg = cfg.solver_config()
        eps = cfg.extremal.eps0
        y, ry = solve_picard(problem, scfg)
        z, rz = solve_picard(problem.perturbed(eps), scfg)
        write_function(os.path.join(cfg.out, "lower.csv"), y)
        write_function(os.path.join(cfg.out, "upper.csv"), z)
        verdict = strict_comparison_check(y, z, problem, "z-side")
        passed = verdict.passed and ry.converged and rz.converged
        summary = {"target": target, "passed": passed, "eps": eps, "comparison": verdict.to_dict()}
    return (EXIT_OK if passed else EXIT_FAIL), {"verify": summary}


def cmd_probe_uniqueness(cfg: RunConfig) -> tuple[int, dict]:
    problem = cfg.hybrid_problem()
    scfg = cfg.solver_config()
    mesh = problem.mesh(scfg)
    starts = [GridFunction(mesh, np.full(mesh.N + 1, c), problem.order, problem.psi)
              for c in cfg.task.starts]
    verdict = uniqueness_probe(problem, starts, scfg, cfg.task.G)
    status = EXIT_OK if verdict.verdict == "supported" else EXIT_FAIL
    return status, {"uniqueness": verdict.to_dict()}


_DISPATCH = {
    "integrate": cmd_integrate,
    "derive": cmd_derive,
    "solve": cmd_solve,
    "extremal": cmd_extremal,
    "compare": cmd_compare,
    "verify": cmd_verify,
    "probe-uniqueness": cmd_probe_uniqueness,
}


def run(cfg: RunConfig) -> int:
    """Execute *cfg* and write its artifacts; returns the exit status."""
    os.makedirs(cfg.out, exist_ok=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        status, report = _DISPATCH[cfg.command](cfg)
    report = {
        "format_version": FORMAT_VERSION,
        "command": cfg.command,
        "config": cfg.to_dict(),
        "status": status,
        **report,
    }
    write_json(os.path.join(cfg.out, "report.json"), report)
    return status


# }}}


# {{{ entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="psihilfer",
        description="Psi-Hilfer fractional operators and hybrid FDE solver.",
    )
    p.add_argument("words", nargs="*", metavar="COMMAND",
                   help=f"one of {', '.join(COMMANDS)}; 'verify' takes a target "
                        f"({', '.join(VERIFY_TARGETS)})")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--f", metavar="EXPR", help="nonvanishing f(t, y)")
    p.add_argument("--g", metavar="EXPR", help="right-hand side g(t, y)")
    p.add_argument("--y0", type=float, help="weighted initial value")
    p.add_argument("--y0-anchor", dest="y0_anchor", type=float,
                   help="value used for y(0) inside f(0, .) (default: y0)")
    p.add_argument("--T", type=float)
    p.add_argument("--psi", metavar="SPEC",
                   help="identity | power:RHO | shifted-log | custom:EXPR,EXPR")
    p.add_argument("--mu", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--mesh-n", dest="mesh_n", type=int)
    p.add_argument("--mesh-r", dest="mesh_r", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--damping", type=float)
    p.add_argument("--eps0", type=float)
    p.add_argument("--h", metavar="EXPR", help="function of t for integrate/derive")
    p.add_argument("--order", type=float, help="integration order (default: mu)")
    p.add_argument("--u", metavar="EXPR", help="function of t for compare")
    p.add_argument("--side", choices=("lower", "upper"))
    p.add_argument("--G", metavar="EXPR", help="comparison function G(t, m) for probe-uniqueness")
    p.add_argument("--out", metavar="DIR")
    return p


def _error_record(exc: BaseException) -> dict:
    rec = {"error": type(exc).__name__, "message": str(exc)}
    if getattr(exc, "field", None) is not None:
        rec["field"] = exc.field
    if getattr(exc, "offset", None) is not None:
        rec["offset"] = exc.offset
    return rec


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("words", "config")}

    out_dir = args.out
    try:
        if args.words:
            if args.command is not None and args.command != args.words[0]:
                raise ValidationError("conflicting commands", field="command")
            flags["command"] = args.words[0]
            if len(args.words) > 2 or (len(args.words) == 2 and args.words[0] != "verify"):
                raise ValidationError(f"unexpected arguments: {' '.join(args.words[1:])}",
                                      field="command")
            if len(args.words) == 2:
                flags["target"] = args.words[1]
        cfg = load_config(args.config, flags)
        out_dir = cfg.out
        return run(cfg)
    except (PsiHilferError, ArithmeticError, ValueError, OSError) as exc:
        rec = _error_record(exc)
        print(json.dumps(rec, sort_keys=True), file=sys.stderr)
        if out_dir:
            try:
                os.makedirs(out_dir, exist_ok=True)
                write_json(os.path.join(out_dir, "error.json"), rec)
            except OSError:
                pass
        return EXIT_ERROR


# }}}
