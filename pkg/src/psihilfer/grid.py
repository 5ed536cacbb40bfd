r"""Discretization carriers: fractional order, graded mesh, and functions of
the weighted space :math:`C_{1 - \xi; \Psi}` sampled on a mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from psihilfer.errors import MeshMismatchError, NonFiniteError, ValidationError
from psihilfer.psi import PsiFunction


@dataclass(frozen=True)
class FractionalOrder:
    r"""Order :math:`0 < \mu < 1` and type :math:`0 \le \nu \le 1` of the
    Hilfer derivative, with :math:`\xi = \mu + \nu (1 - \mu)`."""

    mu: float
    nu: float

    def __post_init__(self) -> None:
        if not 0.0 < self.mu < 1.0:
            raise ValidationError(f"mu must be in (0,1), got {self.mu}", field="mu")
        if not 0.0 <= self.nu <= 1.0:
            raise ValidationError(f"nu must be in [0,1], got {self.nu}", field="nu")

    @property
    def xi(self) -> float:
        return self.mu + self.nu * (1.0 - self.mu)

    @property
    def inner(self) -> float:
        r"""Order :math:`(1 - \nu)(1 - \mu) = 1 - \xi` of the inner integral."""
        return (1.0 - self.nu) * (1.0 - self.mu)

    @property
    def outer(self) -> float:
        r"""Order :math:`\nu (1 - \mu) = \xi - \mu` of the outer integral."""
        return self.nu * (1.0 - self.mu)


@dataclass(frozen=True)
class GradedMesh:
    """Nodes :math:`t_i = T (i / N)^r`, :math:`i = 0, \\dots, N`."""

    T: float
    N: int = 1024
    r: float = 2.0

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValidationError(f"T must be positive, got {self.T}", field="T")
        if int(self.N) != self.N or self.N < 4:
            raise ValidationError(f"N must be an integer >= 4, got {self.N}", field="N")
        if not self.r >= 1:
            raise ValidationError(f"grading r must be >= 1, got {self.r}", field="r")

    @cached_property
    def nodes(self) -> np.ndarray:
        t = self.T * (np.arange(self.N + 1) / self.N) ** self.r
        t[-1] = self.T
        t.flags.writeable = False
        return t

    def index_of(self, t: float, *, rtol: float = 1.0e-12) -> int:
        """Index of the node equal to *t* (raises if *t* is not a node)."""
        # invert the grading map and check the nearest candidates
        guess = int(round(self.N * (max(t, 0.0) / self.T) ** (1.0 / self.r)))
        for i in (guess, guess - 1, guess + 1):
            if 0 <= i <= self.N and abs(self.nodes[i] - t) <= rtol * max(self.T, 1.0):
                return i
        raise ValidationError(f"t = {t!r} is not a node of {self}", field="t")

    def refine(self) -> "GradedMesh":
        return GradedMesh(self.T, 2 * self.N, self.r)


def same_psi(a: PsiFunction, b: PsiFunction) -> bool:
    if a is b:
        return True
    if a.kind == "custom" or b.kind == "custom":
        return a.kind == b.kind and a.params == b.params
    return a.kind == b.kind and a.params == b.params


@dataclass(frozen=True, eq=False)
class GridFunction:
    r"""A function :math:`h \in C_{1-\xi;\Psi}` stored through its weighted
    samples :math:`w_i = (\Psi(t_i) - \Psi(0))^{1-\xi} h(t_i)`.

    ``weighted[0]`` is the limit of the weighted function at :math:`t = 0`.
    """

    mesh: GradedMesh
    weighted: np.ndarray
    order: FractionalOrder
    psi: PsiFunction
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        w = np.array(self.weighted, dtype=np.float64)
        if w.shape != (self.mesh.N + 1,):
            raise MeshMismatchError(
                f"expected {self.mesh.N + 1} weighted samples, got {w.shape}"
            )
        if not np.all(np.isfinite(w)):
            bad = int(np.flatnonzero(~np.isfinite(w))[0])
            raise NonFiniteError(f"non-finite weighted sample at node {bad}")
        w.flags.writeable = False
        object.__setattr__(self, "weighted", w)

    # {{{ constructors

    @classmethod
    def from_weighted(cls, mesh, psi, order, weighted, label="") -> "GridFunction":
        return cls(mesh, np.asarray(weighted, dtype=np.float64), order, psi, label)

    @classmethod
    def from_values(
        cls, mesh, psi, order, values, weighted_limit: float, label=""
    ) -> "GridFunction":
        """From unweighted samples at nodes ``1..N`` (``values[0]`` is ignored)."""
        values = np.asarray(values, dtype=np.float64)
        u = psi.increment(mesh.nodes)
        w = np.empty(mesh.N + 1)
        w[1:] = u[1:] ** (1.0 - order.xi) * values[1:]
        w[0] = weighted_limit
        return cls(mesh, w, order, psi, label)

    @classmethod
    def from_callable(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        mesh: GradedMesh,
        psi: PsiFunction,
        order: FractionalOrder,
        weighted_limit: float | None = None,
        label: str = "",
    ) -> "GridFunction":
        """Sample ``func(t)`` at the nodes.

        If *weighted_limit* is not given, it is ``func(0)`` when
        :math:`\\xi = 1`. For :math:`\\xi < 1` it is 0 when ``func(0)`` is
        finite (a bounded function has a vanishing weighted limit), and
        otherwise linearly extrapolated (in :math:`\\Psi`) from the first two
        interior weighted samples.
        """
        t = mesh.nodes
        with np.errstate(all="ignore"):
            values = np.asarray(func(t[1:]), dtype=np.float64) * np.ones(mesh.N)
        u = psi.increment(t)
        w = np.empty(mesh.N + 1)
        w[1:] = u[1:] ** (1.0 - order.xi) * values
        if weighted_limit is None:
            with np.errstate(all="ignore"):
                try:
                    at_zero = float(np.asarray(func(np.array([0.0])), dtype=np.float64).ravel()[0])
                except ArithmeticError:
                    at_zero = np.nan
            if order.xi == 1.0:
                weighted_limit = at_zero
            elif np.isfinite(at_zero):
                weighted_limit = 0.0
            else:
                weighted_limit = w[1] - u[1] * (w[2] - w[1]) / (u[2] - u[1])
        w[0] = weighted_limit
        return cls(mesh, w, order, psi, label)

    @classmethod
    def power(
        cls,
        mesh: GradedMesh,
        psi: PsiFunction,
        order: FractionalOrder,
        exponent: float,
        coeff: float = 1.0,
    ) -> "GridFunction":
        r""":math:`c\,(\Psi(t) - \Psi(0))^{p}`, which lies in the weighted
        space only for :math:`p \ge \xi - 1`."""
        shift = exponent + 1.0 - order.xi
        if shift < -1.0e-14:
            raise ValidationError(
                f"(Psi - Psi(0))^{exponent} is not in C_(1-xi) for xi = {order.xi}"
            )
        u = psi.increment(mesh.nodes)
        if abs(shift) <= 1.0e-14:
            w = np.full(mesh.N + 1, coeff, dtype=np.float64)
        else:
            w = coeff * u**shift
        return cls(mesh, w, order, psi, f"{coeff:g}*dpsi^{exponent:g}")

    @classmethod
    def zeros(cls, mesh, psi, order) -> "GridFunction":
        return cls(mesh, np.zeros(mesh.N + 1), order, psi, "0")

    # }}}

    @cached_property
    def increments(self) -> np.ndarray:
        r""":math:`\Psi(t_i) - \Psi(0)` at the nodes."""
        u = np.asarray(self.psi.increment(self.mesh.nodes), dtype=np.float64)
        u.flags.writeable = False
        return u

    @property
    def nodes(self) -> np.ndarray:
        return self.mesh.nodes

    def values(self) -> np.ndarray:
        r"""Unweighted samples :math:`h(t_i)`.

        At :math:`t_0 = 0` this is the weighted limit when :math:`\xi = 1`
        and ``nan`` otherwise (the function may be unbounded there).
        """
        u = self.increments
        out = np.empty_like(self.weighted)
        out[1:] = self.weighted[1:] * u[1:] ** (self.order.xi - 1.0)
        out[0] = self.weighted[0] if self.order.xi == 1.0 else np.nan
        return out

    def with_weighted(self, weighted, label: str = "") -> "GridFunction":
        return GridFunction(self.mesh, weighted, self.order, self.psi, label)

    def check_compatible(self, other: "GridFunction") -> None:
        if self.mesh != other.mesh:
            raise MeshMismatchError(f"mesh mismatch: {self.mesh} vs {other.mesh}")
        if self.order != other.order:
            raise MeshMismatchError(f"order mismatch: {self.order} vs {other.order}")
        if not same_psi(self.psi, other.psi):
            raise MeshMismatchError(
                f"psi mismatch: {self.psi.label} vs {other.psi.label}"
            )

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self.check_compatible(other)
            return self.with_weighted(self.weighted + other.weighted)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self.check_compatible(other)
            return self.with_weighted(self.weighted - other.weighted)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return self.with_weighted(float(scalar) * self.weighted)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_weighted(-self.weighted)
