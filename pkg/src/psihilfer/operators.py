r"""Fractional integral and Hilfer derivative with respect to :math:`\Psi`.

Quadrature
----------

With the substitution :math:`u = \Psi(s) - \Psi(0)` the
:math:`\Psi`-Riemann-Liouville integral becomes an ordinary Abel integral

.. math::

    I^{\mu;\Psi} h(t) = \frac{1}{\Gamma(\mu)} \int_0^{U}
        (U - u)^{\mu - 1} h(u) \,\mathrm{d}u,
    \qquad U = \Psi(t) - \Psi(0).

A :class:`~psihilfer.grid.GridFunction` stores
:math:`w = u^{1 - \xi} h`, so the integrand is written as
:math:`(U - u)^{\mu - 1} u^{\xi - 1} w(u)`. The weighted samples :math:`w`
are interpolated piecewise linearly in :math:`u` and the moments of
:math:`(U - u)^{\mu - 1} u^{\xi - 1} \{1, u\}` are integrated exactly on every
cell (regularized incomplete Beta functions; elementary powers when
:math:`\xi = 1`). For :math:`\xi = 1` this is the classical product
trapezoidal rule, exact for functions linear in :math:`\Psi`; for
:math:`\xi < 1` it is exact for :math:`(\Psi - \Psi(0))^{\xi - 1}` times a
linear function, which keeps second order for weighted-space functions on
graded meshes.

Hilfer derivative
-----------------

.. math::

    {}^H D^{\mu,\nu;\Psi} h = I^{\nu(1-\mu);\Psi}
        \frac{1}{\Psi'}\frac{\mathrm{d}}{\mathrm{d}t} I^{(1-\nu)(1-\mu);\Psi} h.

The default ``method="fused"`` moves the derivative past the outer integral,

.. math::

    {}^H D^{\mu,\nu;\Psi} h = \frac{\mathrm{d}}{\mathrm{d}u}\left[
        I^{1-\mu;\Psi} h - F_0 \frac{u^{\xi-\mu}}{\Gamma(1 + \xi - \mu)}\right],
    \qquad F_0 = \lim_{u\to 0} I^{1-\xi;\Psi} h = \Gamma(\xi)\, w(0),

so only a single quadrature and a single (centered, second order) difference
in :math:`u` are needed. ``method="composed"`` evaluates the three stages in
order: inner integral at all nodes, cellwise derivative of its piecewise
linear interpolant, and an exact outer product integral of that piecewise
constant derivative.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betainc

from psihilfer.errors import ExclusionZoneError, NonFiniteError, ValidationError
from psihilfer.grid import FractionalOrder, GradedMesh, GridFunction
from psihilfer.psi import PsiFunction
from psihilfer.special import gamma_fn

# {{{ product integration weights

_ROW_CHUNK = 256


def _moments_elementary(U, lo, hi, alpha):
    """Moments of :math:`(U - s)^{\\alpha - 1}` against ``{1, s - lo}`` on ``[lo, hi]``."""
    A = U - lo
    B = np.maximum(U - hi, 0.0)
    # A^p - B^p = -A^p expm1(p log(B/A)), accurate for far cells
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.log1p(-(hi - lo) / A)
        d0 = np.where(B > 0, -(A**alpha) * np.expm1(alpha * L), A**alpha)
        d1 = np.where(
            B > 0, -(A ** (alpha + 1)) * np.expm1((alpha + 1) * L), A ** (alpha + 1)
        )
    p0 = d0 / alpha
    # int_B^A x^(alpha-1) (A - x) dx
    p1 = A * p0 - d1 / (alpha + 1)
    return p0, p1


def _beta_cell_diffs(a, b, X, C, mask):
    r"""Cell increments of :math:`I_x(a, b)` between consecutive nodes.

    *X* holds the node ratios ``u_j / U`` and *C* the exact complements
    ``(U - u_j) / U``. Near ``x = 1`` the complementary form
    :math:`I_{1-x}(b, a)` is used so that short cells next to the kernel
    singularity keep full relative accuracy.
    """
    low = mask & (X <= 0.5)
    high = mask & ~low
    F = np.zeros_like(X)
    G = np.zeros_like(X)
    F[low] = betainc(a, b, X[low])
    G[high] = betainc(b, a, C[high])

    lo_low = low[:, :-1]
    hi_low = low[:, 1:]
    return np.where(
        hi_low,
        F[:, 1:] - F[:, :-1],
        np.where(lo_low, (1.0 - G[:, 1:]) - F[:, :-1], G[:, :-1] - G[:, 1:]),
    )


def _moments_beta(u, U, mask, alpha, a):
    r"""Moments of :math:`(U - s)^{\alpha-1} s^{a-1}` against ``{1, s - u_k}``
    on every cell ``[u_k, u_{k+1}]`` below each target *U*."""
    with np.errstate(divide="ignore", invalid="ignore"):
        X = np.where(mask, u[None, :] / U, 0.0)
        C = np.where(mask, np.maximum(U - u[None, :], 0.0) / U, 1.0)

    d0 = _beta_cell_diffs(a, alpha, X, C, mask)
    d1 = _beta_cell_diffs(a + 1.0, alpha, X, C, mask)
    m0 = U ** (alpha + a - 1.0) * beta_fn(a, alpha) * d0
    m1 = U ** (alpha + a) * beta_fn(a + 1.0, alpha) * d1
    return m0, m1 - u[None, :-1] * m0


def _weight_rows(u: np.ndarray, alpha: float, a: float, rows: np.ndarray) -> np.ndarray:
    """Rows of the product-integration matrix for the targets ``u[rows]``."""
    n = u.size
    out = np.zeros((rows.size, n))
    lo = u[:-1][None, :]
    hi = u[1:][None, :]
    du = np.diff(u)[None, :]
    scale = 1.0 / gamma_fn(alpha)

    for start in range(0, rows.size, _ROW_CHUNK):
        idx = rows[start:start + _ROW_CHUNK]
        U = u[idx][:, None]
        active = np.arange(n - 1)[None, :] < idx[:, None]
        if not np.any(active):
            continue

        Ub = np.where(active, U, 1.0)
        lob = np.where(active, lo, 0.0)
        hib = np.where(active, hi, 1.0)
        if a == 1.0:
            p0, p1 = _moments_elementary(Ub, lob, hib, alpha)
        else:
            node_mask = np.arange(n)[None, :] <= idx[:, None]
            p0, p1 = _moments_beta(u, np.where(U > 0, U, 1.0), node_mask, alpha, a)
        p0 = np.where(active, p0, 0.0)
        p1 = np.where(active, p1, 0.0)

        left = (p0 - p1 / du) * scale
        right = (p1 / du) * scale
        block = np.zeros((idx.size, n))
        block[:, :-1] += left
        block[:, 1:] += right
        out[start:start + idx.size] = block

    return out


@lru_cache(maxsize=24)
def _cached_matrix(ubytes: bytes, alpha: float, a: float) -> np.ndarray:
    u = np.frombuffer(ubytes, dtype=np.float64)
    W = _weight_rows(u, alpha, a, np.arange(u.size))
    W.flags.writeable = False
    return W


def weight_matrix(u: np.ndarray, alpha: float, a: float = 1.0) -> np.ndarray:
    r"""Lower-triangular matrix :math:`W` with
    :math:`I^{\alpha}[w\,u^{a-1}](u_i) \approx \sum_j W_{ij} w_j`.

    Matrices are cached on ``(u, alpha, a)``; they depend on the mesh and
    :math:`\Psi` only through the increments *u*.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    return _cached_matrix(u.tobytes(), float(alpha), float(a))


def clear_weight_cache() -> None:
    _cached_matrix.cache_clear()


def _integrate_rows(w, u, alpha, a, rows=None) -> np.ndarray:
    if rows is None:
        return weight_matrix(u, alpha, a) @ w
    rows = np.asarray(rows, dtype=np.intp)
    return _weight_rows(np.asarray(u, dtype=np.float64), float(alpha), float(a), rows) @ w


# }}}


# {{{ integral

HLike = Union[GridFunction, Callable[[np.ndarray], np.ndarray]]


class _Sampled(NamedTuple):
    w: np.ndarray
    u: np.ndarray
    a: float
    mesh: GradedMesh


def _sample(h: HLike, psi: PsiFunction | None, mesh: GradedMesh | None) -> _Sampled:
    if isinstance(h, GridFunction):
        return _Sampled(np.asarray(h.weighted), h.increments, h.order.xi, h.mesh)

    if psi is None or mesh is None:
        raise ValidationError("a callable integrand needs both psi and mesh")
    t = mesh.nodes
    with np.errstate(all="ignore"):
        w = np.asarray(h(t), dtype=np.float64) * np.ones(t.size)
    if not np.all(np.isfinite(w)):
        bad = int(np.flatnonzero(~np.isfinite(w))[0])
        raise NonFiniteError(f"integrand is not finite at node {bad} (t = {t[bad]:g})")
    return _Sampled(w, np.asarray(psi.increment(t), dtype=np.float64), 1.0, mesh)


def psi_rl_integral(
    h: HLike,
    mu: float,
    psi: PsiFunction | None = None,
    t: float | None = None,
    *,
    mesh: GradedMesh | None = None,
) -> float | np.ndarray:
    r"""Evaluate :math:`I^{\mu;\Psi} h` at the node *t*, or at every node.

    :arg h: a :class:`GridFunction` (its own mesh and :math:`\Psi` are used),
        or a callable ``h(t)`` sampled on *mesh* and assumed bounded at 0.
    :arg mu: any positive order (not restricted to :math:`(0, 1)`).
    :returns: a float if *t* is given, otherwise the unweighted values at all
        nodes (the value at node 0 is the limit, ``inf`` if it diverges).
    """
    if not mu > 0:
        raise ValidationError(f"integral order must be positive, got {mu}", field="mu")
    if isinstance(h, GridFunction) and psi is not None and psi is not h.psi:
        from psihilfer.grid import same_psi

        if not same_psi(psi, h.psi):
            raise ValidationError("psi differs from the GridFunction's psi")

    s = _sample(h, psi, mesh)
    if t is not None:
        i = s.mesh.index_of(t)
        return float(_integrate_rows(s.w, s.u, mu, s.a, [i])[0]) if i > 0 else _limit_at_zero(s, mu)

    values = _integrate_rows(s.w, s.u, mu, s.a)
    values[0] = _limit_at_zero(s, mu)
    return values


def _limit_at_zero(s: _Sampled, mu: float) -> float:
    # I^mu[w0 u^(a-1)] ~ w0 Gamma(a)/Gamma(a+mu) u^(a+mu-1)
    p = s.a + mu - 1.0
    if p > 1.0e-14 or s.w[0] == 0.0:
        return 0.0
    if abs(p) <= 1.0e-14:
        return float(s.w[0] * gamma_fn(s.a))
    return math.copysign(math.inf, s.w[0])


def integrate(h: GridFunction, mu: float) -> GridFunction:
    r""":math:`I^{\mu;\Psi} h` as a GridFunction with the same weighting as *h*."""
    values = psi_rl_integral(h, mu)
    u = h.increments
    w = np.empty_like(values)
    w[1:] = u[1:] ** (1.0 - h.order.xi) * values[1:]
    # u^(1-xi) I^mu h ~ u^mu -> 0
    w[0] = 0.0
    return h.with_weighted(w, f"I^{mu:g}[{h.label}]")


# }}}


# {{{ derivative


def _centered_derivative(f: np.ndarray, u: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Three-point derivative in *u* on a nonuniform grid (one-sided at the end)."""
    n = u.size - 1
    out = np.empty(idx.size)
    interior = idx < n
    i = idx[interior]
    if i.size:
        h1 = u[i] - u[i - 1]
        h2 = u[i + 1] - u[i]
        out[interior] = (
            -h2 / (h1 * (h1 + h2)) * f[i - 1]
            + (h2 - h1) / (h1 * h2) * f[i]
            + h1 / (h2 * (h1 + h2)) * f[i + 1]
        )
    if np.any(~interior):
        h1 = u[n - 1] - u[n - 2]
        h2 = u[n] - u[n - 1]
        out[~interior] = (
            h2 / (h1 * (h1 + h2)) * f[n - 2]
            - (h1 + h2) / (h1 * h2) * f[n - 1]
            + (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * f[n]
        )
    return out


def _inner_limit(w0: float, a: float, order: FractionalOrder) -> float:
    r""":math:`\lim_{u\to0} I^{1-\xi}[w u^{a-1}]`."""
    beta_ = order.inner
    p = a + beta_ - 1.0
    if w0 == 0.0 or p > 1.0e-14:
        return 0.0
    if abs(p) <= 1.0e-14:
        return w0 * gamma_fn(a)
    raise ValidationError(
        f"function is not in the weighted space C_(1-xi) for xi = {order.xi}"
    )


def _inner_stage(w, u, a, order: FractionalOrder) -> np.ndarray:
    r""":math:`I^{1-\xi} h` at all nodes (``h`` itself when :math:`\xi = 1`)."""
    if order.inner > 0:
        inner = _integrate_rows(w, u, order.inner, a)
    else:
        inner = np.empty_like(w)
        inner[1:] = w[1:] * u[1:] ** (a - 1.0)
    inner[0] = _inner_limit(w[0], a, order)
    return inner


class HilferStages(NamedTuple):
    #: integral stage at all nodes: :math:`I^{1-\mu} h - F_0 u^{\xi-\mu}/\Gamma(1+\xi-\mu)`
    #: for ``"fused"``, the inner integral :math:`I^{1-\xi} h` for ``"composed"``
    integral: np.ndarray
    #: derivative stage: nodal values (fused) or cell slopes (composed)
    derivative: np.ndarray
    #: the Hilfer derivative at all nodes (``nan`` inside the exclusion zone)
    result: np.ndarray


def _check_exclusion(idx: np.ndarray, n: int, min_index: int) -> None:
    if min_index < 1:
        raise ValidationError("min_index must be at least 1")
    bad = idx[(idx < min_index) | (idx > n)]
    if bad.size:
        raise ExclusionZoneError(
            f"node {int(bad[0])} lies in the differentiation exclusion zone "
            f"(nodes < {min_index}) or off the mesh"
        )


def hilfer_stages(
    h: GridFunction,
    order: FractionalOrder | None = None,
    *,
    method: str = "fused",
    min_index: int = 2,
) -> HilferStages:
    """Compute every intermediate stage of the Hilfer derivative at all nodes."""
    order = h.order if order is None else order
    w, u, a = np.asarray(h.weighted), h.increments, h.order.xi
    n = u.size - 1
    if min_index < 1:
        raise ValidationError("min_index must be at least 1")
    idx = np.arange(min_index, n + 1)

    result = np.full(n + 1, np.nan)
    gamma_ = order.outer
    if method == "fused":
        f0 = _inner_limit(w[0], a, order)
        if gamma_ > 0:
            phi = _integrate_rows(w, u, 1.0 - order.mu, a)
            phi = phi - f0 * u**gamma_ / gamma_fn(1.0 + gamma_)
        else:
            phi = _inner_stage(w, u, a, order)
        result[idx] = _centered_derivative(phi, u, idx)
        derivative = result.copy()
        integral = phi
    elif method == "composed":
        inner = _inner_stage(w, u, a, order)
        if gamma_ > 0:
            slopes = np.diff(inner) / np.diff(u)
            U = u[idx][:, None]
            lo = u[:-1][None, :]
            hi = u[1:][None, :]
            mass = np.where(
                lo < U,
                np.maximum(U - lo, 0.0) ** gamma_ - np.maximum(U - hi, 0.0) ** gamma_,
                0.0,
            ) / gamma_fn(1.0 + gamma_)
            result[idx] = mass @ slopes
            derivative = slopes
        else:
            result[idx] = _centered_derivative(inner, u, idx)
            derivative = result.copy()
        integral = inner
    else:
        raise ValueError(f"unknown method {method!r}")

    if not np.all(np.isfinite(result[idx])):
        raise NonFiniteError("non-finite value in the Hilfer derivative")
    return HilferStages(integral=integral, derivative=derivative, result=result)


def hilfer_derivative(
    h: GridFunction,
    order: FractionalOrder | None = None,
    *,
    method: str = "fused",
    min_index: int = 2,
) -> np.ndarray:
    r""":math:`{}^H D^{\mu,\nu;\Psi} h` at every node; ``nan`` for nodes
    below *min_index* (the exclusion zone near :math:`t = 0`)."""
    return hilfer_stages(h, order, method=method, min_index=min_index).result


def psi_hilfer_derivative(
    h: GridFunction,
    order: FractionalOrder | None = None,
    psi: PsiFunction | None = None,
    t: float | None = None,
    *,
    method: str = "fused",
    min_index: int = 2,
) -> float:
    r"""Evaluate :math:`{}^H D^{\mu,\nu;\Psi} h` at the mesh node *t*.

    With ``method="fused"`` only the three quadrature rows needed by the
    difference stencil are formed, so a single evaluation costs
    :math:`O(N)`.
    """
    if t is None:
        raise ValidationError("t is required; use hilfer_derivative for all nodes")
    order = h.order if order is None else order
    if psi is not None and psi is not h.psi:
        from psihilfer.grid import same_psi

        if not same_psi(psi, h.psi):
            raise ValidationError("psi differs from the GridFunction's psi")

    i = h.mesh.index_of(t)
    n = h.mesh.N
    _check_exclusion(np.array([i]), n, min_index)

    if method != "fused":
        return float(hilfer_stages(h, order, method=method, min_index=min_index).result[i])

    w, u, a = np.asarray(h.weighted), h.increments, h.order.xi
    stencil = np.array([i - 1, i, i + 1]) if i < n else np.array([n - 2, n - 1, n])
    f0 = _inner_limit(w[0], a, order)
    gamma_ = order.outer
    if gamma_ > 0:
        phi_s = _integrate_rows(w, u, 1.0 - order.mu, a, stencil)
        phi_s = phi_s - f0 * u[stencil] ** gamma_ / gamma_fn(1.0 + gamma_)
    elif order.inner > 0:
        phi_s = _integrate_rows(w, u, order.inner, a, stencil)
    else:
        phi_s = w[stencil] * u[stencil] ** (a - 1.0)

    phi = np.zeros(n + 1)
    phi[stencil] = phi_s
    value = float(_centered_derivative(phi, u, np.array([i]))[0])
    if not math.isfinite(value):
        raise NonFiniteError(f"non-finite Hilfer derivative at t = {t:g}")
    return value


# }}}


# {{{ identity checks


class SemigroupCheck(NamedTuple):
    lhs: float
    rhs: float
    abs_err: float


class InversionCheck(NamedTuple):
    recovered: float
    original: float
    abs_err: float


def verify_semigroup(h: GridFunction, mu: float, chi: float, t: float) -> SemigroupCheck:
    r"""Compare :math:`I^{\mu} I^{\chi} h` (nested) against :math:`I^{\mu+\chi} h`."""
    if not (mu > 0 and chi > 0):
        raise ValidationError("semigroup orders must be positive")
    lhs = float(psi_rl_integral(integrate(h, chi), mu, t=t))
    rhs = float(psi_rl_integral(h, mu + chi, t=t))
    return SemigroupCheck(lhs, rhs, abs(lhs - rhs))


def verify_inversion(
    h: GridFunction, order: FractionalOrder | None = None, t: float | None = None,
    *, method: str = "fused",
) -> InversionCheck:
    r"""Apply :math:`{}^H D^{\mu,\nu} I^{\mu}` to *h* and compare with *h* at *t*."""
    order = h.order if order is None else order
    if t is None:
        raise ValidationError("t is required")
    lifted = integrate(h, order.mu)
    recovered = psi_hilfer_derivative(lifted, order, t=t, method=method)
    i = h.mesh.index_of(t)
    original = float(h.values()[i])
    return InversionCheck(recovered, original, abs(recovered - original))


# }}}
