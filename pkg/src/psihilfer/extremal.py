r"""Maximal and minimal solutions of hybrid FDEs by :math:`\varepsilon`-perturbation,
comparison bounds against them, and a numerical uniqueness probe.

The maximal solution is approached from above by the solutions
:math:`r(\cdot, \varepsilon_n)` of the problems with :math:`g + \varepsilon_n`
and initial value :math:`y_0 + \varepsilon_n`, where
:math:`\varepsilon_n = \varepsilon_0 q^n`. The minimal solution uses
:math:`-\varepsilon_n` and is approached from below.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from psihilfer import expr as ex
from psihilfer.errors import ConvergenceError, PreconditionError, ValidationError
from psihilfer.grid import GridFunction
from psihilfer.inequalities import (
    ComparisonVerdict,
    LatticeCheck,
    defect,
    is_subsolution,
    is_supersolution,
)
from psihilfer.solver import (
    ExistenceParams,
    HybridProblem,
    Lattice,
    SolverConfig,
    SolverReport,
    estimate_params,
    existence_check,
    solve_picard,
)
from psihilfer.weighted import Order, violating_nodes, weighted_compare, weighted_norm

#: slack of the ladder monotonicity checks
LADDER_SLACK = 1.0e-8


@dataclass(frozen=True)
class ExtremalConfig:
    #: initial perturbation
    eps0: float
    #: ratio of the geometric ladder
    q: float = 0.5
    stop_tol: float = 1.0e-6
    max_levels: int = 12
    #: componentwise Aitken extrapolation of the last three levels
    aitken: bool = False

    def __post_init__(self) -> None:
        if not self.eps0 > 0:
            raise ValidationError(f"eps0 must be positive, got {self.eps0}", field="eps0")
        if not 0.0 < self.q < 1.0:
            raise ValidationError(f"q must be in (0,1), got {self.q}", field="q")
        if not self.stop_tol > 0:
            raise ValidationError("stop_tol must be positive", field="stop_tol")
        if self.max_levels < 1:
            raise ValidationError("max_levels must be at least 1", field="max_levels")

    def eps(self, n: int) -> float:
        return self.eps0 * self.q**n


def solve_perturbed(
    problem: HybridProblem, eps: float, config: SolverConfig | None = None,
    initial: GridFunction | None = None, *, params: ExistenceParams | None = None,
) -> tuple[GridFunction, SolverReport]:
    r"""Solve the problem with :math:`g + \varepsilon` and :math:`y_0 + \varepsilon`."""
    if params is not None and eps != 0.0:
        params = ExistenceParams(params.L, params.h_norm + abs(eps), params.K, params.source)
    return solve_picard(problem.perturbed(eps), config, initial, params=params)


def perturbed_existence_value(
    problem: HybridProblem, eps: float, params: ExistenceParams
) -> float:
    r""":math:`L\{|(y_0+\varepsilon)/f(0, \hat y_0)| + (\|h\|_\infty + |\varepsilon|)
    \Delta\Psi(T)^\mu/\Gamma(\mu+1)\}`, the existence value of the perturbed problem."""
    shifted = ExistenceParams(params.L, params.h_norm + abs(eps), params.K, params.source)
    return existence_check(problem.perturbed(eps), shifted, "printed").value


# {{{ ladders


@dataclass(frozen=True)
class ExtremalReport:
    kind: str
    eps: tuple[float, ...]
    #: weighted distances between consecutive levels
    diffs: tuple[float, ...]
    #: every level is ordered after the previous one (within LADDER_SLACK)
    monotone: bool
    #: levels (index of the later one) at which monotonicity fails
    violations: tuple[int, ...]
    #: the last level difference fell below ``stop_tol``
    converged: bool
    gate_value: float
    extrapolated: bool
    iterations: tuple[int, ...]
    #: order of the extremal candidate relative to the unperturbed solution
    base_order: str | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "eps": list(self.eps),
            "diffs": list(self.diffs),
            "monotone": self.monotone,
            "violations": list(self.violations),
            "converged": self.converged,
            "gate_value": self.gate_value,
            "extrapolated": self.extrapolated,
            "iterations": list(self.iterations),
            "base_order": self.base_order,
            **self.details,
        }


class ExtremalResult(NamedTuple):
    solution: GridFunction
    ladder: list[tuple[float, GridFunction]]
    report: ExtremalReport


def _aitken(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    d1 = b - a
    d2 = c - b
    den = d2 - d1
    scale = np.maximum(1.0, np.abs(c))
    ok = np.abs(den) > 1.0e-14 * scale
    return np.where(ok, c - d2 * d2 / np.where(ok, den, 1.0), c)


def _ladder(
    problem: HybridProblem,
    ecfg: ExtremalConfig,
    scfg: SolverConfig | None,
    sign: float,
    params: ExistenceParams | None,
    compare_base: bool,
) -> ExtremalResult:
    kind = "maximal" if sign > 0 else "minimal"
    params = estimate_params(problem) if params is None else params
    gate = perturbed_existence_value(problem, sign * ecfg.eps0, params)
    if not gate < 1.0:
        raise PreconditionError(
            f"eps0 = {ecfg.eps0:g} violates the strengthened existence bound "
            f"(value {gate:.4g} >= 1)"
        )

    # the maximal ladder decreases, the minimal one increases
    expected = Order.SUCCEEDS if sign > 0 else Order.PRECEDES
    ladder: list[tuple[float, GridFunction]] = []
    diffs: list[float] = []
    violations: list[int] = []
    iterations: list[int] = []
    converged = False
    prev = None
    for n in range(ecfg.max_levels):
        eps = ecfg.eps(n)
        sol, rep = solve_perturbed(problem, sign * eps, scfg, params=params)
        if not rep.converged:
            raise ConvergenceError(
                f"{kind} ladder: solver did not converge at level {n} (eps = {eps:g})"
            )
        iterations.append(rep.iterations)
        ladder.append((sign * eps, sol))
        if prev is not None:
            diffs.append(weighted_norm(prev - sol).value)
            if weighted_compare(prev, sol, slack=LADDER_SLACK) not in (expected, Order.EQUALS):
                violations.append(n)
            if diffs[-1] < ecfg.stop_tol:
                converged = True
                break
        prev = sol

    result = ladder[-1][1]
    extrapolated = False
    if ecfg.aitken and len(ladder) >= 3:
        a, b, c = (np.asarray(g.weighted) for _, g in ladder[-3:])
        w = _aitken(a, b, c)
        w[0] = problem.y0
        result = result.with_weighted(w, f"{kind} (Aitken)")
        extrapolated = True

    base_order = None
    if compare_base:
        base, rep = solve_picard(problem, scfg, params=params)
        if not rep.converged:
            raise ConvergenceError("the unperturbed problem did not converge")
        # for r: r >= base is expected; for q: q <= base
        base_order = weighted_compare(ladder[-1][1], base, slack=LADDER_SLACK).value

    report = ExtremalReport(
        kind=kind,
        eps=tuple(e for e, _ in ladder),
        diffs=tuple(diffs),
        monotone=not violations,
        violations=tuple(violations),
        converged=converged,
        gate_value=gate,
        extrapolated=extrapolated,
        iterations=tuple(iterations),
        base_order=base_order,
    )
    return ExtremalResult(result.with_weighted(result.weighted, kind), ladder, report)


def maximal_solution(
    problem: HybridProblem,
    extremal_cfg: ExtremalConfig,
    solver_cfg: SolverConfig | None = None,
    *,
    params: ExistenceParams | None = None,
    compare_base: bool = False,
) -> ExtremalResult:
    r"""Approach the maximal solution through the decreasing ladder
    :math:`r(\cdot, \varepsilon_n)`.

    :raises PreconditionError: if *eps0* violates the strengthened existence
        bound.
    :raises ConvergenceError: if some level does not converge.

    Monotonicity failures of the ladder do not raise; they are listed in the
    report.
    """
    return _ladder(problem, extremal_cfg, solver_cfg, +1.0, params, compare_base)


def minimal_solution(
    problem: HybridProblem,
    extremal_cfg: ExtremalConfig,
    solver_cfg: SolverConfig | None = None,
    *,
    params: ExistenceParams | None = None,
    compare_base: bool = False,
) -> ExtremalResult:
    """As :func:`maximal_solution` with perturbations of the opposite sign."""
    return _ladder(problem, extremal_cfg, solver_cfg, -1.0, params, compare_base)


# }}}


# {{{ comparison with extremal solutions


def comparison_bound(
    u: GridFunction,
    problem: HybridProblem,
    side: str,
    extremal_cfg: ExtremalConfig,
    solver_cfg: SolverConfig | None = None,
    *,
    params: ExistenceParams | None = None,
    extremal: GridFunction | None = None,
    slack: float = LADDER_SLACK,
) -> ComparisonVerdict:
    r"""Check a sub-solution against the maximal solution (``side="lower"``,
    :math:`u \preceq r`) or a super-solution against the minimal one
    (``side="upper"``, :math:`q \preceq u`).

    :arg extremal: a precomputed extremal solution; computed if not given.
    :raises PreconditionError: if the defect of *u* has the wrong sign.
    """
    if side not in ("lower", "upper"):
        raise ValidationError(f"side must be 'lower' or 'upper', got {side!r}", field="side")
    problem.check_function(u)

    d = defect(u, problem)
    if side == "lower" and not is_subsolution(d):
        k = int(np.argmax(d.defect - d.tol))
        raise PreconditionError(
            f"u is not a sub-solution: defect {d.defect[k]:.3e} at node {int(d.nodes[k])}"
        )
    if side == "upper" and not is_supersolution(d):
        k = int(np.argmin(d.defect + d.tol))
        raise PreconditionError(
            f"u is not a super-solution: defect {d.defect[k]:.3e} at node {int(d.nodes[k])}"
        )

    if extremal is None:
        build = maximal_solution if side == "lower" else minimal_solution
        extremal = build(problem, extremal_cfg, solver_cfg, params=params).solution

    if side == "lower":
        lower, upper = u, extremal
        ic_ok = bool(u.weighted[0] <= problem.y0)
    else:
        lower, upper = extremal, u
        ic_ok = bool(u.weighted[0] >= problem.y0)

    bad = violating_nodes(lower, upper, slack=slack)
    return ComparisonVerdict(
        passed=bad.size == 0,
        violating_nodes=tuple(int(i) for i in bad),
        ic_gap=float(upper.weighted[0] - lower.weighted[0]),
        lower_defect_max=float(np.max(d.defect)) if side == "lower" else float("nan"),
        upper_defect_min=float(np.min(d.defect)) if side == "upper" else float("nan"),
        details={"side": side, "ic_ok": ic_ok,
                 "order": weighted_compare(lower, upper, slack=slack).value},
    )


# }}}


# {{{ uniqueness


@dataclass(frozen=True)
class UniquenessVerdict:
    #: ``"supported"``, ``"not-supported"`` or ``"inconclusive"``
    verdict: str
    consistent: bool
    #: largest weighted distance between solutions from different starts
    spread: float
    converged: tuple[bool, ...]
    g_check: LatticeCheck | None = None
    #: weighted norms of the comparison solutions, one per start
    comparison_norms: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        d = {
            "verdict": self.verdict,
            "consistent": self.consistent,
            "spread": self.spread,
            "converged": list(self.converged),
            "comparison_norms": list(self.comparison_norms),
        }
        if self.g_check is not None:
            d["g_check"] = {"ok": self.g_check.ok, "worst": self.g_check.worst,
                            "where": list(self.g_check.where)}
        return d


def _as_tm_function(G) -> Callable:
    if isinstance(G, str):
        G = ex.parse(G, ["t", "m"])
    if isinstance(G, ex.Expr):
        if not set(G.free_variables) <= {"t", "m"}:
            raise ValidationError("G may only use the variables t and m", field="G")
        e = G if G.variables == ("t", "m") else ex.Expr(G.root, ("t", "m"), G.source)
        return ex.compile_function(e)
    if callable(G):
        return G
    raise ValidationError("G must be an expression or a callable", field="G")


def check_comparison_condition(
    problem: HybridProblem, G, lattice: Lattice | None = None, *, ny: int = 81
) -> LatticeCheck:
    r"""Sample :math:`g(t, y_1) - g(t, y_2) \le G(t, y_1/f(t,y_1) - y_2/f(t,y_2))`
    for lattice pairs :math:`y_1 > y_2`."""
    lattice = problem.lattice if lattice is None else lattice
    Gf = _as_tm_function(G)
    t, _ = lattice.points(problem.T)
    y = np.linspace(*lattice.y_range, ny)
    g = problem.eval_g(t[:, None], y[None, :])
    R = y[None, :] / problem.eval_f(t[:, None], y[None, :])
    dR = R[:, :, None] - R[:, None, :]
    with np.errstate(all="ignore"):
        bound = np.asarray(Gf(t[:, None, None] * np.ones_like(dR), dR), dtype=np.float64)
    margin = bound - (g[:, :, None] - g[:, None, :])
    pairs = np.tril(np.ones((ny, ny), dtype=bool), -1)
    margin = np.where(pairs[None], margin, np.inf)
    k = np.unravel_index(int(np.argmin(margin)), margin.shape)
    worst = float(margin[k])
    scale = max(1.0, float(np.max(np.abs(g))))
    return LatticeCheck(bool(np.isfinite(worst) and worst >= -1.0e-12 * scale), worst,
                        (float(t[k[0]]), float(y[k[1]]), float(y[k[2]])))


def uniqueness_probe(
    problem: HybridProblem,
    starts: Sequence[GridFunction],
    solver_cfg: SolverConfig | None = None,
    G=None,
    *,
    params: ExistenceParams | None = None,
    comparison_starts: Sequence[float] = (0.0, 1.0),
) -> UniquenessVerdict:
    r"""Probe uniqueness numerically.

    Solves from every start and checks that all solutions agree within
    ``10 * picard_tol``. With *G* (an expression in ``t`` and ``m``), also
    samples the comparison condition on *g* and solves
    :math:`{}^H D m = G(t, m)` with weighted initial value 0 from the
    constant weighted starts *comparison_starts*; uniqueness is supported
    only if every computed :math:`m` stays within tolerance of zero.
    """
    if len(starts) < 2:
        raise ValidationError("uniqueness_probe needs at least two starts")
    solver_cfg = SolverConfig() if solver_cfg is None else solver_cfg
    tol = 10.0 * solver_cfg.picard_tol

    sols, conv = [], []
    for s in starts:
        sol, rep = solve_picard(problem, solver_cfg, s, params=params)
        sols.append(sol)
        conv.append(rep.converged)
    spread = max(weighted_norm(a - b).value for i, a in enumerate(sols) for b in sols[i + 1:])
    consistent = bool(spread <= tol)
    if not all(conv):
        return UniquenessVerdict("inconclusive", consistent, spread, tuple(conv))

    g_check = None
    norms: tuple[float, ...] = ()
    supported = consistent
    if G is not None:
        g_check = check_comparison_condition(problem, G)
        Gf = _as_tm_function(G)
        comp = HybridProblem(
            f="1", g=lambda t, y: Gf(t, y), y0=0.0, T=problem.T, psi=problem.psi,
            order=problem.order, lattice=problem.lattice,
        )
        mesh = comp.mesh(solver_cfg)
        found = []
        for c in comparison_starts:
            start = GridFunction(mesh, np.full(mesh.N + 1, float(c)), comp.order, comp.psi)
            start = start.with_weighted(np.where(np.arange(mesh.N + 1) == 0, 0.0, start.weighted))
            m, rep = solve_picard(comp, solver_cfg, start)
            if not rep.converged:
                return UniquenessVerdict("inconclusive", consistent, spread, tuple(conv), g_check)
            found.append(weighted_norm(m).value)
        norms = tuple(found)
        supported = supported and g_check.ok and max(norms) <= tol

    verdict = "supported" if supported else "not-supported"
    return UniquenessVerdict(verdict, consistent, spread, tuple(conv), g_check, norms)


# }}}
