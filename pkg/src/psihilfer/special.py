r"""Scalar special functions: the Gamma function and the one-parameter
Mittag-Leffler function

.. math::

    E_\eta(z) = \sum_{k = 0}^\infty \frac{z^k}{\Gamma(k \eta + 1)}.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from psihilfer.errors import (
    GammaOverflowError,
    PoleError,
    SeriesConvergenceError,
    ValidationError,
)

#: Largest argument for which :math:`\Gamma(x)` is representable in double precision.
GAMMA_MAX_ARG = 171.6243769563027

#: Argument cap for the direct Taylor summation of :func:`mittag_leffler`.
ML_ARG_CAP = 30.0


def gamma_fn(x: float) -> float:
    """Gamma function with explicit pole and overflow errors.

    Backed by :func:`math.gamma`, which is accurate to a few ulps on the
    positive axis and uses reflection for negative arguments.
    """
    x = float(x)
    if math.isnan(x):
        raise ValueError("gamma_fn: argument is NaN")
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"gamma_fn: pole at x = {x:g}")
    if x > GAMMA_MAX_ARG:
        raise GammaOverflowError(f"gamma_fn: Gamma({x:g}) overflows double precision")

    return math.gamma(x)


@dataclass(frozen=True)
class MittagLefflerParams:
    """Parameters of the truncated Mittag-Leffler series."""

    #: Order :math:`\eta > 0`.
    eta: float
    #: Relative truncation tolerance on the last added term.
    series_tol: float = 1.0e-15
    #: Hard cap on the number of terms.
    max_terms: int = 400

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ValidationError(f"eta must be positive: {self.eta}", field="eta")
        if not self.series_tol > 0:
            raise ValidationError(
                f"series_tol must be positive: {self.series_tol}", field="series_tol"
            )
        if self.max_terms < 1:
            raise ValidationError(
                f"max_terms must be at least 1: {self.max_terms}", field="max_terms"
            )


@dataclass(frozen=True)
class MittagLefflerResult:
    value: np.ndarray | float
    #: Number of series terms that were summed (maximum over the array).
    nterms: int
    converged: bool


def mittag_leffler_series(
    params: MittagLefflerParams, z: float | np.ndarray
) -> MittagLefflerResult:
    """Sum the Mittag-Leffler series and report how the truncation went.

    Terms are formed as :math:`\\exp(k \\log|z| - \\log\\Gamma(k\\eta + 1))`
    so that neither the power nor the Gamma factor overflows on its own. The
    summation stops once every entry has seen a term below
    ``series_tol * |partial sum|`` on the decreasing tail of the series.
    """
    zarr = np.asarray(z, dtype=np.float64)
    scalar = zarr.ndim == 0
    zarr = np.atleast_1d(zarr)

    if not np.all(np.isfinite(zarr)):
        raise ValueError("mittag_leffler: non-finite argument")
    if np.any(np.abs(zarr) > ML_ARG_CAP):
        raise ValidationError(
            f"mittag_leffler: |z| exceeds the direct-summation cap {ML_ARG_CAP}",
            field="z",
        )

    eta = params.eta
    total = np.ones_like(zarr)
    done = zarr == 0.0
    prev = np.ones_like(zarr)

    nonzero = ~done
    logabs = np.zeros_like(zarr)
    logabs[nonzero] = np.log(np.abs(zarr[nonzero]))
    sign = np.sign(zarr)

    nterms = 1
    for k in range(1, params.max_terms):
        if np.all(done):
            break

        term = np.zeros_like(zarr)
        active = ~done
        term[active] = np.exp(k * logabs[active] - gammaln(k * eta + 1.0))
        term[active] *= sign[active] ** k
        total[active] += term[active]
        nterms = k + 1

        with np.errstate(invalid="ignore"):
            small = np.abs(term) <= params.series_tol * np.abs(total)
            # only trust the criterion on the decreasing tail
            decreasing = np.abs(term) <= np.abs(prev)
        done |= active & small & decreasing
        prev = term

    if not np.all(np.isfinite(total)):
        raise GammaOverflowError("mittag_leffler: series overflows double precision")

    value = float(total[0]) if scalar else total
    return MittagLefflerResult(value=value, nterms=nterms, converged=bool(np.all(done)))


def mittag_leffler(
    params: MittagLefflerParams, z: float | np.ndarray, *, strict: bool = True
) -> float | np.ndarray:
    r"""Evaluate :math:`E_\eta(z)` by direct Taylor summation.

    Intended for :math:`0 \le z \le 30`, where every term is positive and the
    partial sums increase monotonically. Negative arguments are summed as well,
    but suffer from cancellation for large :math:`|z|`.

    :arg strict: if *True*, raise :class:`SeriesConvergenceError` when
        ``max_terms`` is reached before the tolerance; otherwise only warn.
    """
    result = mittag_leffler_series(params, z)
    if not result.converged:
        msg = (
            f"mittag_leffler: max_terms={params.max_terms} reached before "
            f"series_tol={params.series_tol:g} (eta={params.eta})"
        )
        if strict:
            raise SeriesConvergenceError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    return result.value
