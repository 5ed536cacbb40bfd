r"""Hybrid fractional differential equations

.. math::

    {}^H D^{\mu,\nu;\Psi}\left[\frac{y(t)}{f(t, y(t))}\right] = g(t, y(t)),
    \qquad (\Psi(t) - \Psi(0))^{1-\xi} y(t)\big|_{t=0} = y_0,

solved through the equivalent integral equation

.. math::

    y(t) = f(t, y(t)) \left[ c_0 (\Psi(t) - \Psi(0))^{\xi-1}
        + I^{\mu;\Psi} g(\cdot, y)(t) \right],
    \qquad c_0 = \frac{y_0}{f(0, \hat y_0)},

by damped Picard iteration in weighted coordinates. :math:`\hat y_0` is an
explicit *anchor* value standing in for :math:`y(0)` inside :math:`f`, which
is otherwise undefined when :math:`\xi < 1` and :math:`y` blows up at 0.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Union

import numpy as np

from psihilfer import expr as ex
from psihilfer.errors import DomainError, HypothesisViolation, NonFiniteError, ValidationError
from psihilfer.grid import FractionalOrder, GradedMesh, GridFunction, same_psi
from psihilfer.operators import weight_matrix
from psihilfer.psi import PsiFunction
from psihilfer.special import gamma_fn
from psihilfer.weighted import weighted_norm

logger = logging.getLogger(__name__)

TYFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]
TYLike = Union[ex.Expr, str, TYFunc]


# {{{ problem


class Lattice(NamedTuple):
    """A uniform :math:`(t, y)` sampling lattice on :math:`[0, T] \\times [y_{min}, y_{max}]`."""

    nt: int = 33
    ny: int = 201
    y_range: tuple[float, float] = (-10.0, 10.0)

    def points(self, T: float, extra_y=()) -> tuple[np.ndarray, np.ndarray]:
        if self.nt < 2 or self.ny < 2:
            raise ValidationError("lattice needs at least 2 points per axis")
        lo, hi = self.y_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValidationError(f"bad lattice y range {self.y_range}", field="y_range")
        t = np.linspace(0.0, T, self.nt)
        y = np.union1d(np.linspace(lo, hi, self.ny), np.asarray(extra_y, dtype=np.float64))
        return t, y


def _as_ty_function(func: TYLike, name: str) -> tuple[TYFunc, str]:
    if isinstance(func, str):
        func = ex.parse(func, ["t", "y"])
    if isinstance(func, ex.Expr):
        if not set(func.free_variables) <= {"t", "y"}:
            raise ValidationError(f"{name} may only use the variables t and y", field=name)
        e = ex.Expr(func.root, ("t", "y"), func.source) if func.variables != ("t", "y") else func
        return ex.compile_function(e), e.source or str(e)
    if callable(func):
        return func, getattr(func, "__name__", name)
    raise ValidationError(f"{name} must be an expression or a callable", field=name)


def _eval_ty(func: TYFunc, t, y) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    with np.errstate(all="ignore"):
        out = np.asarray(func(t, y), dtype=np.float64)
    return np.broadcast_to(out, np.broadcast_shapes(t.shape, y.shape)).copy()


@dataclass(frozen=True, eq=False)
class HybridProblem:
    r"""Data :math:`(f, g, y_0, T, \Psi, \mu, \nu)` of a hybrid FDE.

    ``f`` and ``g`` are expressions in ``t`` and ``y`` (or callables
    ``func(t, y)`` on arrays). ``f`` must not vanish; this is checked on
    *lattice*.
    """

    f: TYLike
    g: TYLike
    y0: float
    T: float
    psi: PsiFunction
    order: FractionalOrder
    #: value used for :math:`y(0)` inside :math:`f(0, \cdot)`; defaults to *y0*
    y0_anchor: float | None = None
    lattice: Lattice = field(default_factory=Lattice)
    f_source: str = field(init=False, default="")
    g_source: str = field(init=False, default="")

    def __post_init__(self) -> None:
        fn, fsrc = _as_ty_function(self.f, "f")
        gn, gsrc = _as_ty_function(self.g, "g")
        object.__setattr__(self, "f", fn)
        object.__setattr__(self, "g", gn)
        object.__setattr__(self, "f_source", fsrc)
        object.__setattr__(self, "g_source", gsrc)

        if not self.T > 0:
            raise ValidationError(f"T must be positive, got {self.T}", field="T")
        if not math.isfinite(self.y0):
            raise ValidationError(f"y0 must be finite, got {self.y0}", field="y0")
        self._check_f_nonvanishing()
        if not math.isfinite(self.c0):
            raise ValidationError("c0 = y0 / f(0, anchor) is not finite", field="f")

    def _check_f_nonvanishing(self) -> None:
        t, y = self.lattice.points(self.T, extra_y=[self.anchor])
        try:
            F = self.eval_f(t[:, None], y[None, :])
        except DomainError as exc:
            raise HypothesisViolation(f"f is not defined on the whole lattice: {exc}") from exc
        if not np.all(np.isfinite(F)):
            i, j = np.argwhere(~np.isfinite(F))[0]
            raise HypothesisViolation(f"f is not finite at (t, y) = ({t[i]:g}, {y[j]:g})")
        # continuity and no zero on the lattice: a sign change means a zero in between
        if np.any(F == 0.0) or (np.any(F > 0) and np.any(F < 0)):
            i, j = np.argwhere(F == 0.0)[0] if np.any(F == 0.0) else np.argwhere(F < 0)[0]
            raise HypothesisViolation(
                f"f must not vanish: f changes sign or is zero near (t, y) = "
                f"({t[i]:g}, {y[j]:g})"
            )

    @property
    def anchor(self) -> float:
        return self.y0 if self.y0_anchor is None else float(self.y0_anchor)

    @property
    def c0(self) -> float:
        r""":math:`y_0 / f(0, \hat y_0)`."""
        return self.y0 / float(self.eval_f(0.0, self.anchor))

    def eval_f(self, t, y) -> np.ndarray:
        return _eval_ty(self.f, t, y)

    def eval_g(self, t, y) -> np.ndarray:
        return _eval_ty(self.g, t, y)

    def perturbed(self, eps: float) -> "HybridProblem":
        r"""The problem with :math:`g + \varepsilon` and :math:`y_0 + \varepsilon`.

        A defaulted anchor follows the shifted initial value.
        """
        if eps == 0.0:
            return self
        g = self.g

        def g_eps(t, y):
            return np.asarray(g(t, y), dtype=np.float64) + eps

        g_eps.__name__ = f"({self.g_source})+({eps:g})"
        return dataclasses.replace(self, g=g_eps, y0=self.y0 + eps)

    def mesh(self, config: "SolverConfig") -> GradedMesh:
        return GradedMesh(self.T, config.N, config.r)

    def check_function(self, y: GridFunction) -> None:
        if y.mesh.T != self.T or y.order != self.order or not same_psi(y.psi, self.psi):
            raise ValidationError("function does not live on the problem's mesh, order or psi")


# }}}


# {{{ parameters and configuration


@dataclass(frozen=True)
class ExistenceParams:
    """Constants of the existence hypotheses: Lipschitz constant *L* of *f*
    in *y*, bound *h_norm* on :math:`|g|`, bound *K* on :math:`|f|`."""

    L: float
    h_norm: float
    K: float
    #: ``"user"`` or ``"estimated"`` (sampled values are lower bounds of the sups)
    source: str = "user"

    def __post_init__(self) -> None:
        for name in ("L", "h_norm", "K"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be finite and nonnegative, got {v}", field=name)
        if not self.K > 0:
            raise ValidationError(f"K must be positive, got {self.K}", field="K")


@dataclass(frozen=True)
class SolverConfig:
    N: int = 1024
    r: float = 2.0
    picard_tol: float = 1.0e-10
    max_iters: int = 200
    damping: float = 1.0

    def __post_init__(self) -> None:
        if not self.picard_tol > 0:
            raise ValidationError("picard_tol must be positive", field="tol")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be at least 1", field="max_iters")
        if not 0.0 < self.damping <= 1.0:
            raise ValidationError("damping must be in (0, 1]", field="damping")
        GradedMesh(1.0, self.N, self.r)


@dataclass(frozen=True)
class SolverReport:
    converged: bool
    iterations: int
    #: fixed-point defect :func:`residual` of the returned iterate
    final_residual: float
    #: left-hand side of the existence condition (printed exponent)
    existence_value: float
    existence_ok: bool
    #: the same condition with the exponent used in the existence proof
    existence_value_proof: float
    #: radius of the invariant ball in the existence proof
    radius_R: float
    params: ExistenceParams
    #: weighted norms of successive Picard increments
    increments: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["increments"] = list(self.increments)
        return d


# }}}


# {{{ existence


class ExistenceCheck(NamedTuple):
    value: float
    ok: bool


def existence_check(
    problem: HybridProblem, params: ExistenceParams, mode: str = "printed"
) -> ExistenceCheck:
    r"""Evaluate :math:`L\{|c_0| + \|h\|_\infty \Delta\Psi(T)^e / \Gamma(\mu+1)\}`.

    ``mode="printed"`` uses :math:`e = \mu`; ``mode="proof"`` uses
    :math:`e = \mu + 1 - \xi`. The two coincide for :math:`\nu = 1`.
    """
    mu = problem.order.mu
    if mode == "printed":
        e = mu
    elif mode == "proof":
        e = mu + 1.0 - problem.order.xi
    else:
        raise ValidationError(f"unknown existence mode {mode!r}", field="mode")

    dpsi = float(problem.psi.increment(problem.T))
    value = params.L * (abs(problem.c0) + params.h_norm * dpsi**e / gamma_fn(mu + 1.0))
    return ExistenceCheck(value, bool(value < 1.0))


def existence_radius(problem: HybridProblem, params: ExistenceParams) -> float:
    mu, xi = problem.order.mu, problem.order.xi
    dpsi = float(problem.psi.increment(problem.T))
    return params.K * (abs(problem.c0) + params.h_norm * dpsi ** (mu + 1.0 - xi) / gamma_fn(mu + 1.0))


def estimate_params(problem: HybridProblem, lattice: Lattice | None = None) -> ExistenceParams:
    """Estimate *L*, *h_norm* and *K* by sampling *f* and *g* on *lattice*.

    The Lipschitz constant uses difference quotients between neighbouring
    *y* samples. All values are lower bounds of the true suprema.
    """
    lattice = problem.lattice if lattice is None else lattice
    t, y = lattice.points(problem.T, extra_y=[problem.anchor])
    F = problem.eval_f(t[:, None], y[None, :])
    G = problem.eval_g(t[:, None], y[None, :])
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))):
        raise NonFiniteError("f or g is not finite on the estimation lattice")

    L = float(np.max(np.abs(np.diff(F, axis=1)) / np.diff(y)[None, :]))
    return ExistenceParams(L=L, h_norm=float(np.max(np.abs(G))), K=float(np.max(np.abs(F))),
                           source="estimated")


# }}}


# {{{ Picard iteration


def _g_weighted(y: GridFunction, problem: HybridProblem) -> np.ndarray:
    """Weighted samples of :math:`g(t, y(t))` with the problem's weighting."""
    t = y.nodes
    u = y.increments
    xi = problem.order.xi
    yv = y.values()
    gv = np.empty_like(yv)
    gv[1:] = problem.eval_g(t[1:], yv[1:])
    gw = np.empty_like(yv)
    gw[1:] = u[1:] ** (1.0 - xi) * gv[1:]
    if xi == 1.0:
        gw[0] = problem.eval_g(0.0, yv[0])
    else:
        # y may blow up at 0: use the limit point of the first interior node
        gw[0] = gw[1]
    if not np.all(np.isfinite(gw)):
        bad = int(np.flatnonzero(~np.isfinite(gw))[0])
        raise NonFiniteError(f"g is not finite at node {bad} (t = {t[bad]:g})")
    return gw


def picard_step(y: GridFunction, problem: HybridProblem) -> GridFunction:
    r"""One application of :math:`y \mapsto f(t, y)\{c_0 \Delta\Psi^{\xi-1} + I^\mu g(\cdot, y)\}`."""
    problem.check_function(y)
    u = y.increments
    xi = problem.order.xi

    gw = _g_weighted(y, problem)
    integral = weight_matrix(u, problem.order.mu, xi) @ gw
    braced = np.empty_like(integral)
    braced[1:] = problem.c0 + u[1:] ** (1.0 - xi) * integral[1:]
    braced[0] = problem.c0

    yv = y.values()
    fv = np.empty_like(yv)
    fv[1:] = problem.eval_f(y.nodes[1:], yv[1:])
    fv[0] = float(problem.eval_f(0.0, problem.anchor))
    if np.any(fv[1:] == 0.0):
        bad = int(np.flatnonzero(fv == 0.0)[0])
        raise HypothesisViolation(f"f vanishes at node {bad} along the iterate")

    w = fv * braced
    w[0] = problem.y0
    if not np.all(np.isfinite(w)):
        bad = int(np.flatnonzero(~np.isfinite(w))[0])
        raise NonFiniteError(f"Picard step is not finite at node {bad}")
    return y.with_weighted(w, "picard")


def residual(y: GridFunction, problem: HybridProblem) -> float:
    """Fixed-point defect ``weighted_norm(y - picard_step(y))``."""
    return weighted_norm(y - picard_step(y, problem)).value


def initial_guess(problem: HybridProblem, mesh: GradedMesh) -> GridFunction:
    """Weighted samples identically equal to :math:`y_0`."""
    return GridFunction(mesh, np.full(mesh.N + 1, float(problem.y0)), problem.order, problem.psi, "y0")


def solve_picard(
    problem: HybridProblem,
    config: SolverConfig | None = None,
    initial: GridFunction | None = None,
    *,
    params: ExistenceParams | None = None,
) -> tuple[GridFunction, SolverReport]:
    """Iterate ``y <- (1 - d) y + d picard_step(y)`` in weighted coordinates.

    Stops once the weighted norm of the increment drops below
    ``config.picard_tol``. Non-convergence is reported in the returned
    :class:`SolverReport` together with the last iterate; it is never raised.

    :arg params: existence constants; estimated by sampling if not given.
    """
    config = SolverConfig() if config is None else config
    mesh = problem.mesh(config)
    problem.psi.validate_nodes(mesh.nodes)

    params = estimate_params(problem) if params is None else params
    printed = existence_check(problem, params, "printed")
    proof = existence_check(problem, params, "proof")
    if not printed.ok:
        warnings.warn(
            f"existence condition not met (value {printed.value:.4g} >= 1); "
            "Picard iteration may fail to converge",
            RuntimeWarning,
            stacklevel=2,
        )

    if initial is None:
        y = initial_guess(problem, mesh)
    else:
        if initial.mesh != mesh:
            raise ValidationError("initial iterate is not on the solver mesh")
        problem.check_function(initial)
        y = initial

    d = config.damping
    history: list[float] = []
    converged = False
    iterations = 0
    for k in range(config.max_iters):
        try:
            step = picard_step(y, problem)
            w_new = (1.0 - d) * np.asarray(y.weighted) + d * np.asarray(step.weighted)
            w_new[0] = problem.y0
            y_new = y.with_weighted(w_new, "picard")
        except NonFiniteError as exc:
            logger.warning("Picard iteration diverged at step %d: %s", k + 1, exc)
            break

        inc = weighted_norm(y_new - y).value
        history.append(inc)
        y = y_new
        iterations = k + 1
        logger.debug("picard %3d: increment %.3e", iterations, inc)
        if inc < config.picard_tol:
            converged = True
            break

    try:
        final = residual(y, problem)
    except NonFiniteError:
        final = math.inf

    report = SolverReport(
        converged=converged,
        iterations=iterations,
        final_residual=final,
        existence_value=printed.value,
        existence_ok=printed.ok,
        existence_value_proof=proof.value,
        radius_R=existence_radius(problem, params),
        params=params,
        increments=tuple(history),
    )
    return y.with_weighted(y.weighted, "solution"), report


# }}}
