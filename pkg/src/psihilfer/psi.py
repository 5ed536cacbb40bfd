r"""The increasing function :math:`\Psi` that sets the clock of every
fractional operator in this package.

All operators only ever use increments :math:`\Psi(t) - \Psi(0)`, which
:meth:`PsiFunction.increment` returns directly (and exactly for the presets).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from psihilfer import expr as ex
from psihilfer.errors import (
    DerivativeMismatchError,
    DomainError,
    MonotonicityError,
    ValidationError,
)

ArrayFunc = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PsiFunction:
    r""":math:`\Psi \in C^1([0, T])` with :math:`\Psi' > 0`."""

    psi: ArrayFunc
    psi_prime: ArrayFunc
    label: str
    #: ``"identity"``, ``"power"``, ``"shifted_log"`` or ``"custom"``
    kind: str = "custom"
    #: preset parameters or the source strings of a custom definition
    params: tuple = ()
    domain_start: float = 0.0
    _increment: ArrayFunc | None = field(default=None, repr=False)

    def __call__(self, t):
        return self.psi(np.asarray(t, dtype=np.float64))

    def prime(self, t):
        return self.psi_prime(np.asarray(t, dtype=np.float64))

    def increment(self, t):
        r""":math:`\Psi(t) - \Psi(0)`."""
        t = np.asarray(t, dtype=np.float64)
        if self._increment is not None:
            return self._increment(t)
        return self.psi(t) - self.psi(np.zeros_like(t))

    def validate_nodes(self, nodes: np.ndarray) -> None:
        """Check positivity of :math:`\\Psi'` and strict growth on *nodes*."""
        nodes = np.asarray(nodes, dtype=np.float64)
        with np.errstate(all="ignore"):
            dpsi = np.atleast_1d(self.prime(nodes[nodes > self.domain_start]))
            inc = np.atleast_1d(self.increment(nodes))

        if not np.all(np.isfinite(dpsi)) or np.any(dpsi <= 0):
            bad = np.flatnonzero(~(dpsi > 0))[0]
            raise MonotonicityError(
                f"{self.label}: psi_prime must be positive on (0, T] "
                f"(fails at t = {nodes[nodes > self.domain_start][bad]:g})"
            )
        if not np.all(np.isfinite(inc)) or np.any(np.diff(inc) <= 0):
            raise MonotonicityError(f"{self.label}: psi is not strictly increasing")

    def describe(self) -> str:
        if self.kind == "power":
            return f"power:{self.params[0]:g}"
        if self.kind == "custom":
            return f"custom:{self.params[0]},{self.params[1]}"
        return self.kind.replace("_", "-")


def make_preset(kind: str, rho: float | None = None) -> PsiFunction:
    """Build one of the closed-form presets.

    ``identity``
        :math:`\\Psi(t) = t` (Riemann-Liouville, Caputo, Hilfer).
    ``power``
        :math:`\\Psi(t) = t^\\rho`, :math:`\\rho > 0` (Katugampola-type).
    ``shifted_log``
        :math:`\\Psi(t) = \\ln(1 + t)`, a Hadamard-type clock shifted so that
        :math:`\\Psi(0)` is finite.
    """
    kind = kind.replace("-", "_")
    if kind == "identity":
        return PsiFunction(
            psi=lambda t: np.asarray(t, dtype=np.float64) * 1.0,
            psi_prime=lambda t: np.ones_like(np.asarray(t, dtype=np.float64)),
            label="identity",
            kind="identity",
            _increment=lambda t: np.asarray(t, dtype=np.float64) * 1.0,
        )

    if kind == "power":
        if rho is None or not rho > 0:
            raise ValidationError(f"power preset needs rho > 0, got {rho}", field="rho")
        rho = float(rho)

        def prime(t):
            t = np.asarray(t, dtype=np.float64)
            with np.errstate(divide="ignore"):
                return rho * np.power(t, rho - 1.0)

        return PsiFunction(
            psi=lambda t: np.power(np.asarray(t, dtype=np.float64), rho),
            psi_prime=prime,
            label=f"power(rho={rho:g})",
            kind="power",
            params=(rho,),
            _increment=lambda t: np.power(np.asarray(t, dtype=np.float64), rho),
        )

    if kind == "shifted_log":
        return PsiFunction(
            psi=lambda t: np.log1p(np.asarray(t, dtype=np.float64)),
            psi_prime=lambda t: 1.0 / (1.0 + np.asarray(t, dtype=np.float64)),
            label="shifted_log",
            kind="shifted_log",
            _increment=lambda t: np.log1p(np.asarray(t, dtype=np.float64)),
        )

    raise ValidationError(f"unknown psi preset {kind!r}", field="psi")


def make_custom(
    psi_expr: ex.Expr | str,
    psi_prime_expr: ex.Expr | str,
    T: float,
    probe_points: int = 200,
    *,
    fd_rtol: float = 1.0e-4,
) -> PsiFunction:
    """Build :math:`\\Psi` from two expressions in ``t`` and validate them.

    The pair is rejected if :math:`\\Psi'` is not positive, if :math:`\\Psi`
    is not strictly increasing on ``probe_points`` uniform samples of
    :math:`(0, T]`, or if :math:`\\Psi'` disagrees with a centered finite
    difference (step ``1e-5 T``) by more than ``fd_rtol`` relative at the
    interior samples.
    """
    if isinstance(psi_expr, str):
        psi_expr = ex.parse(psi_expr, ["t"])
    if isinstance(psi_prime_expr, str):
        psi_prime_expr = ex.parse(psi_prime_expr, ["t"])
    for e in (psi_expr, psi_prime_expr):
        if e.variables != ("t",):
            raise ValidationError("psi expressions must use the single variable 't'")
    if not T > 0:
        raise ValidationError(f"T must be positive: {T}", field="T")
    if probe_points < 3:
        raise ValidationError("probe_points must be at least 3", field="probe_points")

    def psi(t):
        return np.asarray(ex.evaluate(psi_expr, {"t": np.asarray(t, dtype=np.float64)}))

    def psi_prime(t):
        return np.asarray(
            ex.evaluate(psi_prime_expr, {"t": np.asarray(t, dtype=np.float64)})
        )

    probes = T * np.arange(1, probe_points + 1) / probe_points
    try:
        values = psi(np.concatenate([[0.0], probes]))
        dvalues = psi_prime(probes)
    except DomainError as exc:
        raise ValidationError(f"custom psi cannot be evaluated on (0, T]: {exc}") from exc

    if not np.all(np.isfinite(values)) or not np.all(np.isfinite(dvalues)):
        raise ValidationError("custom psi is not finite on [0, T]")
    if np.any(np.diff(values) <= 0):
        raise MonotonicityError("custom psi is not strictly increasing on (0, T]")
    if np.any(dvalues <= 0):
        raise MonotonicityError("custom psi_prime is not positive on (0, T]")

    h = 1.0e-5 * T
    interior = probes[(probes - h > 0) & (probes < T)]
    fd = (psi(interior + h) - psi(interior - h)) / (2.0 * h)
    rel = np.abs(psi_prime(interior) - fd) / np.abs(psi_prime(interior))
    if np.any(rel > fd_rtol):
        k = int(np.argmax(rel))
        raise DerivativeMismatchError(
            f"psi_prime disagrees with finite differences of psi at t = {interior[k]:g} "
            f"(relative error {rel[k]:.3g})"
        )

    return PsiFunction(
        psi=psi,
        psi_prime=psi_prime,
        label=f"custom({psi_expr.source})",
        kind="custom",
        params=(psi_expr.source, psi_prime_expr.source),
    )


def parse_psi_spec(spec: str, T: float = 1.0) -> PsiFunction:
    """Parse ``identity``, ``power:RHO``, ``shifted-log`` or ``custom:PSI,DPSI``."""
    spec = spec.strip()
    if spec.startswith("custom:"):
        body = spec[len("custom:"):]
        # split on the comma that separates the two top-level expressions
        depth = 0
        for i, ch in enumerate(body):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                return make_custom(body[:i], body[i + 1:], T)
        raise ValidationError(f"custom psi needs 'PSI,DPSI': {spec!r}", field="psi")
    if spec.startswith("power:"):
        try:
            rho = float(spec[len("power:"):])
        except ValueError as exc:
            raise ValidationError(f"bad power exponent in {spec!r}", field="psi") from exc
        return make_preset("power", rho)
    return make_preset(spec)
