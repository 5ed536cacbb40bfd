r"""Numerical checks of differential inequalities for hybrid FDEs.

* sign of the Hilfer derivative at a point where a function touches zero
  from one side (:func:`touchpoint_derivative`);
* the Mittag-Leffler identity
  :math:`{}^H D^{\mu,\nu;\Psi} E_\mu(\lambda \Delta\Psi^\mu) = \lambda
  E_\mu(\lambda \Delta\Psi^\mu)` with :math:`\lambda = 2L`
  (:func:`verify_ml_identity`);
* strict and nonstrict comparison of sub- and super-solutions
  (:func:`strict_comparison_check`, :func:`perturbed_super_solution`,
  :func:`nonstrict_limit_check`).

Here :math:`\Delta\Psi = \Psi(t) - \Psi(0)`.

The Mittag-Leffler identity only holds for :math:`\nu = 1`: for
:math:`\nu < 1` the constant term of the series is not annihilated, since
:math:`{}^H D^{\mu,\nu;\Psi} 1 = \Delta\Psi^{-\mu} / \Gamma(1 - \mu)`.
:func:`verify_ml_identity` reports that term next to the comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from psihilfer.errors import (
    BracketingError,
    HypothesisViolation,
    PreconditionError,
    ValidationError,
)
from psihilfer.grid import FractionalOrder, GradedMesh, GridFunction
from psihilfer.operators import hilfer_derivative, psi_hilfer_derivative
from psihilfer.psi import PsiFunction
from psihilfer.solver import HybridProblem, Lattice
from psihilfer.special import ML_ARG_CAP, MittagLefflerParams, gamma_fn, mittag_leffler
from psihilfer.weighted import Order, violating_nodes, weighted_compare, weighted_norm

#: relative tolerance of the defect-sign checks, ``tol = DEFECT_RTOL * max(1, |g|)``
DEFECT_RTOL = 1.0e-2

#: defects are only checked where ``DeltaPsi(t) >= DEFECT_FROM * DeltaPsi(T)``
DEFECT_FROM = 0.05


# {{{ touchpoint


@dataclass(frozen=True)
class TouchpointCase:
    r"""A function :math:`m` with :math:`m(t_1) = 0` and a fixed sign on
    :math:`(0, t_1)`, both in the weighted sense."""

    m: GridFunction
    #: node index of :math:`t_1`
    t1: int
    #: ``"nonpositive"`` or ``"nonnegative"``
    sign_before: str = "nonpositive"
    tol: float = 1.0e-12
    slack: float = 1.0e-12

    def __post_init__(self) -> None:
        if self.sign_before not in ("nonpositive", "nonnegative"):
            raise ValidationError(
                f"sign_before must be 'nonpositive' or 'nonnegative', got {self.sign_before!r}"
            )
        if not 0 < self.t1 <= self.m.mesh.N:
            raise ValidationError(f"t1 index {self.t1} is not an interior node")

        w = np.asarray(self.m.weighted)
        scale = max(1.0, float(np.max(np.abs(w))))
        if abs(w[self.t1]) >= self.tol * scale:
            raise PreconditionError(
                f"touching condition violated: weighted m(t1) = {w[self.t1]:.3e}"
            )
        before = w[: self.t1]
        if self.sign_before == "nonpositive":
            bad = np.flatnonzero(before > self.slack * scale)
        else:
            bad = np.flatnonzero(before < -self.slack * scale)
        if bad.size:
            raise PreconditionError(
                f"m is not {self.sign_before} before t1 (node {int(bad[0])})"
            )

    @property
    def expected_sign(self) -> int:
        """+1 if the derivative must be nonnegative, -1 if nonpositive."""
        return 1 if self.sign_before == "nonpositive" else -1


def touchpoint_derivative(
    case: TouchpointCase,
    order: FractionalOrder | None = None,
    psi: PsiFunction | None = None,
    *,
    method: str = "fused",
) -> float:
    r""":math:`{}^H D^{\mu,\nu;\Psi} m(t_1)`.

    It is nonnegative when :math:`m \le 0` before :math:`t_1`, and
    nonpositive when :math:`m \ge 0` before :math:`t_1`.
    """
    t1 = float(case.m.nodes[case.t1])
    return psi_hilfer_derivative(case.m, order, psi, t1, method=method)


# }}}


# {{{ Mittag-Leffler identity


def ml_profile(lam: float, mesh: GradedMesh, psi: PsiFunction, order: FractionalOrder) -> GridFunction:
    r""":math:`E_\mu(\lambda \Delta\Psi^\mu)` as a GridFunction."""
    u = psi.increment(mesh.nodes)
    if abs(lam) * float(u[-1]) ** order.mu > ML_ARG_CAP:
        raise ValidationError(
            f"Mittag-Leffler argument {lam * float(u[-1]) ** order.mu:g} exceeds {ML_ARG_CAP}"
        )
    e = np.asarray(mittag_leffler(MittagLefflerParams(order.mu), lam * u**order.mu))
    w = u ** (1.0 - order.xi) * e
    # bounded profile: vanishing weighted limit unless xi = 1
    w[0] = 1.0 if order.xi == 1.0 else 0.0
    return GridFunction(mesh, w, order, psi, f"E_mu({lam:g} dpsi^mu)")


def constant_term_derivative(order: FractionalOrder, u) -> np.ndarray:
    r""":math:`{}^H D^{\mu,\nu;\Psi} 1 = \Delta\Psi^{-\mu}/\Gamma(1 - \mu)` for
    :math:`\nu < 1`, zero for :math:`\nu = 1`."""
    u = np.asarray(u, dtype=np.float64)
    if order.nu == 1.0:
        return np.zeros_like(u)
    with np.errstate(divide="ignore"):
        return u ** (-order.mu) / gamma_fn(1.0 - order.mu)


class MLIdentityCheck(NamedTuple):
    lhs: float
    rhs: float
    rel_err: float
    #: derivative of the constant series term (zero iff nu = 1)
    constant_term: float


def verify_ml_identity(
    L: float,
    order: FractionalOrder,
    psi: PsiFunction,
    t: float,
    mesh: GradedMesh | None = None,
    *,
    method: str = "fused",
) -> MLIdentityCheck:
    r"""Compare :math:`{}^H D E_\mu(2L\Delta\Psi^\mu)` with
    :math:`2L E_\mu(2L\Delta\Psi^\mu)` at the mesh node *t*.

    :arg mesh: defaults to ``GradedMesh(max(1, t), 2048)``.
    """
    if not L > 0:
        raise ValidationError(f"L must be positive, got {L}", field="L")
    mesh = GradedMesh(max(1.0, t), 2048) if mesh is None else mesh
    lam = 2.0 * L
    prof = ml_profile(lam, mesh, psi, order)
    lhs = psi_hilfer_derivative(prof, t=t, method=method)
    i = mesh.index_of(t)
    rhs = lam * float(prof.values()[i])
    ct = float(constant_term_derivative(order, prof.increments[i]))
    return MLIdentityCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs), ct)


class MLIdentitySweep(NamedTuple):
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    rel_err: np.ndarray
    constant_term: np.ndarray


def ml_identity_sweep(
    L: float, order: FractionalOrder, psi: PsiFunction, mesh: GradedMesh,
    *, t_from: float = 0.2, method: str = "fused",
) -> MLIdentitySweep:
    """:func:`verify_ml_identity` at every node with ``t >= t_from * T``."""
    lam = 2.0 * L
    prof = ml_profile(lam, mesh, psi, order)
    D = hilfer_derivative(prof, method=method)
    sel = np.flatnonzero(mesh.nodes >= t_from * mesh.T)
    rhs = lam * prof.values()[sel]
    lhs = D[sel]
    return MLIdentitySweep(
        mesh.nodes[sel], lhs, rhs, np.abs(lhs - rhs) / np.abs(rhs),
        constant_term_derivative(order, prof.increments[sel]),
    )


class MLTermCheck(NamedTuple):
    k: int
    #: Gamma-ratio coefficient of the derivative of the k-th term
    coefficient: float
    #: coefficient of the matching term of :math:`2L E_\mu`
    expected: float
    #: numerical derivative of the k-th term at *t*
    numeric: float
    #: exact value of the matching term at *t*
    exact: float


def ml_term_checks(
    L: float, order: FractionalOrder, psi: PsiFunction, t: float,
    mesh: GradedMesh | None = None, k_max: int = 5,
) -> list[MLTermCheck]:
    r"""Term-by-term check of the series derivation for :math:`1 \le k \le k_{max}`.

    The :math:`k`-th term :math:`(2L)^k\Delta\Psi^{k\mu}/\Gamma(k\mu+1)` has
    derivative :math:`(2L)^k\Delta\Psi^{(k-1)\mu}/\Gamma((k-1)\mu+1)` by the
    power rule, which is the :math:`(k-1)`-th term of :math:`2L E_\mu`.
    """
    mesh = GradedMesh(max(1.0, t), 2048) if mesh is None else mesh
    mu = order.mu
    lam = 2.0 * L
    i = mesh.index_of(t)
    out = []
    for k in range(1, k_max + 1):
        coeff = lam**k / gamma_fn(k * mu + 1.0) * gamma_fn(k * mu + 1.0) / gamma_fn(k * mu + 1.0 - mu)
        expected = lam * lam ** (k - 1) / gamma_fn((k - 1) * mu + 1.0)
        term = GridFunction.power(mesh, psi, order, k * mu, lam**k / gamma_fn(k * mu + 1.0))
        numeric = psi_hilfer_derivative(term, t=t)
        u = float(term.increments[i])
        out.append(MLTermCheck(k, coeff, expected, numeric, expected * u ** ((k - 1) * mu)))
    return out


# }}}


# {{{ sub- and super-solutions


def ratio_function(y: GridFunction, problem: HybridProblem) -> GridFunction:
    r""":math:`y / f(t, y)` in weighted form (node 0 uses the anchor in :math:`f`)."""
    yv = y.values()
    fv = np.empty_like(yv)
    fv[1:] = problem.eval_f(y.nodes[1:], yv[1:])
    fv[0] = float(problem.eval_f(0.0, problem.anchor))
    return y.with_weighted(np.asarray(y.weighted) / fv, "y/f")


class Defect(NamedTuple):
    #: nodes at which the defect was evaluated
    nodes: np.ndarray
    #: :math:`{}^H D[y/f(t,y)] - g(t, y)` at those nodes
    defect: np.ndarray
    #: sign tolerance at those nodes
    tol: np.ndarray


def defect(
    y: GridFunction, problem: HybridProblem, *,
    rtol: float = DEFECT_RTOL, t_from: float = DEFECT_FROM, method: str = "fused",
) -> Defect:
    r"""Evaluate :math:`{}^H D^{\mu,\nu;\Psi}[y/f(t,y)] - g(t, y)` at interior nodes.

    Only nodes with :math:`\Delta\Psi(t) \ge` ``t_from`` :math:`\Delta\Psi(T)`
    are used: the numerical derivative of a sampled function is least
    accurate next to the singular endpoint.
    """
    problem.check_function(y)
    D = hilfer_derivative(ratio_function(y, problem), method=method)
    u = y.increments
    idx = np.flatnonzero((u >= t_from * u[-1]) & np.isfinite(D))
    gv = problem.eval_g(y.nodes[idx], y.values()[idx])
    return Defect(idx, D[idx] - gv, rtol * np.maximum(1.0, np.abs(gv)))


def is_subsolution(d: Defect) -> bool:
    return bool(np.all(d.defect <= d.tol))


def is_supersolution(d: Defect) -> bool:
    return bool(np.all(d.defect >= -d.tol))


@dataclass(frozen=True)
class ComparisonVerdict:
    passed: bool
    #: nodes at which the expected order fails
    violating_nodes: tuple[int, ...]
    #: weighted initial gap (upper minus lower)
    ic_gap: float
    #: largest defect of the lower function and smallest of the upper one
    lower_defect_max: float
    upper_defect_min: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violating_nodes": list(self.violating_nodes),
            "ic_gap": self.ic_gap,
            "lower_defect_max": self.lower_defect_max,
            "upper_defect_min": self.upper_defect_min,
            **self.details,
        }


def strict_comparison_check(
    y: GridFunction,
    z: GridFunction,
    problem: HybridProblem,
    which_strict: str = "z-side",
    *,
    rtol: float = DEFECT_RTOL,
    slack: float = 0.0,
) -> ComparisonVerdict:
    r"""Check that a sub-solution *y* and a super-solution *z* with
    :math:`w_y(0) < w_z(0)` satisfy :math:`y \prec z`.

    The defect signs are verified with tolerance ``rtol * max(1, |g|)``;
    strictness of the *which_strict* inequality cannot be distinguished
    from equality within that tolerance and is only recorded.

    :raises PreconditionError: if the inputs are not sub/super-solutions or
        the weighted initial values are not strictly ordered.
    """
    if which_strict not in ("y-side", "z-side"):
        raise ValidationError(f"which_strict must be 'y-side' or 'z-side', got {which_strict!r}")
    y.check_compatible(z)

    gap = float(z.weighted[0] - y.weighted[0])
    if not gap > 0:
        raise PreconditionError(
            f"weighted initial values must satisfy y(0) < z(0) strictly (gap {gap:.3e})"
        )
    dy = defect(y, problem, rtol=rtol)
    dz = defect(z, problem, rtol=rtol)
    if not is_subsolution(dy):
        k = int(np.argmax(dy.defect - dy.tol))
        raise PreconditionError(
            f"y is not a sub-solution: defect {dy.defect[k]:.3e} at node {int(dy.nodes[k])}"
        )
    if not is_supersolution(dz):
        k = int(np.argmin(dz.defect + dz.tol))
        raise PreconditionError(
            f"z is not a super-solution: defect {dz.defect[k]:.3e} at node {int(dz.nodes[k])}"
        )

    verdict = weighted_compare(y, z, strict=True, slack=slack)
    bad = violating_nodes(y, z, strict=True, slack=slack)
    return ComparisonVerdict(
        passed=verdict is Order.PRECEDES,
        violating_nodes=tuple(int(i) for i in bad),
        ic_gap=gap,
        lower_defect_max=float(np.max(dy.defect)),
        upper_defect_min=float(np.min(dz.defect)),
        details={"which_strict": which_strict, "order": verdict.value},
    )


# }}}


# {{{ hypotheses on f and g


class LatticeCheck(NamedTuple):
    ok: bool
    #: worst margin found (negative means violated)
    worst: float
    #: (t, y1, y2) at the worst margin
    where: tuple[float, float, float]


def _ratio_map(problem: HybridProblem, t, v):
    return np.asarray(v) / problem.eval_f(t, v)


def check_ratio_increasing(problem: HybridProblem, lattice: Lattice | None = None) -> LatticeCheck:
    r"""Sample the hypothesis that :math:`v \mapsto v / f(t, v)` is increasing."""
    lattice = problem.lattice if lattice is None else lattice
    t, v = lattice.points(problem.T)
    R = _ratio_map(problem, t[:, None], v[None, :])
    d = np.diff(R, axis=1)
    i, j = np.unravel_index(int(np.argmin(d)), d.shape)
    worst = float(d[i, j])
    return LatticeCheck(bool(worst > 0), worst, (float(t[i]), float(v[j + 1]), float(v[j])))


def check_one_sided_lipschitz(
    problem: HybridProblem, L: float, lattice: Lattice | None = None, *, ny: int = 81
) -> LatticeCheck:
    r"""Sample :math:`g(t,x_1) - g(t,x_2) \le L(x_1/f(t,x_1) - x_2/f(t,x_2))`
    for all lattice pairs :math:`x_1 \ge x_2`."""
    lattice = problem.lattice if lattice is None else lattice
    t, _ = lattice.points(problem.T)
    x = np.linspace(*lattice.y_range, ny)
    G = problem.eval_g(t[:, None], x[None, :])
    R = _ratio_map(problem, t[:, None], x[None, :])
    # margin[t, a, b] for x_a >= x_b
    margin = L * (R[:, :, None] - R[:, None, :]) - (G[:, :, None] - G[:, None, :])
    upper = np.triu(np.ones((ny, ny), dtype=bool), 1).T
    margin = np.where(upper[None, :, :], margin, np.inf)
    k = np.unravel_index(int(np.argmin(margin)), margin.shape)
    worst = float(margin[k])
    scale = max(1.0, float(np.max(np.abs(G))))
    return LatticeCheck(bool(worst >= -1.0e-12 * scale), worst,
                        (float(t[k[0]]), float(x[k[1]]), float(x[k[2]])))


# }}}


# {{{ perturbed super-solution


def _solve_ratio(problem, t, target, start, direction, *, max_expand=80, iters=200):
    """Vectorized bisection for ``v / f(t, v) = target``."""
    lo = start.copy()
    step = np.maximum(1.0, np.abs(start))
    hi = start + direction * step
    for _ in range(max_expand):
        val = _ratio_map(problem, t, hi)
        need = (val < target) if direction > 0 else (val > target)
        need &= np.isfinite(val)
        if not np.any(need):
            break
        lo = np.where(need, hi, lo)
        step = np.where(need, 2.0 * step, step)
        hi = np.where(need, start + direction * step, hi)
    val = _ratio_map(problem, t, hi)
    unbracketed = ~np.isfinite(val) | ((val < target) if direction > 0 else (val > target))
    if np.any(unbracketed):
        k = int(np.flatnonzero(unbracketed)[0])
        raise BracketingError(f"cannot bracket v/f(t,v) = {target[k]:g} at t = {t[k]:g}", k)

    a, b = np.minimum(lo, hi), np.maximum(lo, hi)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        below = _ratio_map(problem, t, mid) < target
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
        if np.all(b - a <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(mid))):
            break
    return 0.5 * (a + b)


def perturbed_super_solution(
    z: GridFunction, problem: HybridProblem, L: float, eps: float,
    *, lattice: Lattice | None = None,
) -> GridFunction:
    r"""Solve :math:`z_\varepsilon / f(t, z_\varepsilon) = z / f(t, z) +
    \varepsilon E_\mu(2L\Delta\Psi^\mu)` node by node.

    For :math:`\xi < 1` the perturbation vanishes in weighted form at
    :math:`t = 0`, so the weighted initial value of :math:`z_\varepsilon`
    is that of :math:`z`.

    :raises HypothesisViolation: if :math:`v / f(t, v)` is not increasing on
        the lattice.
    :raises BracketingError: if the scalar equation cannot be bracketed.
    """
    if not eps >= 0:
        raise ValidationError(f"eps must be nonnegative, got {eps}", field="eps")
    if not L >= 0:
        raise ValidationError(f"L must be nonnegative, got {L}", field="L")
    problem.check_function(z)
    if eps == 0.0:
        return z

    h1 = check_ratio_increasing(problem, lattice)
    if not h1.ok:
        raise HypothesisViolation(
            f"v -> v/f(t,v) is not increasing near (t, v1, v2) = {h1.where}"
        )

    order = problem.order
    u = z.increments
    lam = 2.0 * L
    E = np.asarray(mittag_leffler(MittagLefflerParams(order.mu), lam * u**order.mu))

    zv = z.values()
    first = 0 if order.xi == 1.0 else 1
    t = z.nodes[first:]
    target = _ratio_map(problem, t, zv[first:]) + eps * E[first:]
    v = _solve_ratio(problem, t, target, zv[first:], +1)

    w = np.array(z.weighted, dtype=np.float64)
    w[first:] = u[first:] ** (1.0 - order.xi) * v
    return z.with_weighted(w, f"z_eps({eps:g})")


class LimitCheck(NamedTuple):
    eps: tuple[float, ...]
    #: weighted distances ``||z_eps - z||``
    distances: tuple[float, ...]
    monotone: bool
    ok: bool


def nonstrict_limit_check(
    z: GridFunction, problem: HybridProblem, L: float, eps_ladder, *, tol: float = 1.0e-8,
) -> LimitCheck:
    r"""Check :math:`\|z_\varepsilon - z\| \to 0` monotonically along a
    decreasing :math:`\varepsilon` ladder."""
    eps_ladder = [float(e) for e in eps_ladder]
    if any(b >= a for a, b in zip(eps_ladder, eps_ladder[1:])) or min(eps_ladder) <= 0:
        raise ValidationError("eps ladder must be positive and strictly decreasing")
    dist = [weighted_norm(perturbed_super_solution(z, problem, L, e) - z).value for e in eps_ladder]
    monotone = all(b <= a for a, b in zip(dist, dist[1:]))
    # the distance is linear in eps to leading order
    ok = monotone and dist[-1] <= max(tol, 2.0 * dist[0] * eps_ladder[-1] / eps_ladder[0])
    return LimitCheck(tuple(eps_ladder), tuple(dist), monotone, bool(ok))


# }}}
