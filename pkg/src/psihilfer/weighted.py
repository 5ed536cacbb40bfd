r"""Norm and partial order of the weighted space :math:`C_{1-\xi;\Psi}`.

Both act on the weighted samples :math:`w_i = (\Psi(t_i) - \Psi(0))^{1-\xi}
h(t_i)` only, never on unweighted values near :math:`t = 0`.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from psihilfer.errors import NonFiniteError, ValidationError
from psihilfer.grid import GridFunction

#: Default slack of :func:`weighted_compare`.
DEFAULT_SLACK = 1.0e-9


class WeightedNormResult(NamedTuple):
    value: float
    #: node index at which the maximum is attained
    argmax_node: int


def weighted_norm(h: GridFunction) -> WeightedNormResult:
    r""":math:`\|h\|_{C_{1-\xi;\Psi}} = \max_i |w_i|`."""
    w = np.asarray(h.weighted)
    if not np.all(np.isfinite(w)):
        raise NonFiniteError("weighted_norm: non-finite weighted sample")
    k = int(np.argmax(np.abs(w)))
    return WeightedNormResult(float(abs(w[k])), k)


class Order(enum.Enum):
    PRECEDES = "precedes"
    EQUALS = "equals"
    SUCCEEDS = "succeeds"
    INCOMPARABLE = "incomparable"


def weighted_compare(
    h1: GridFunction,
    h2: GridFunction,
    strict: bool = False,
    slack: float = DEFAULT_SLACK,
) -> Order:
    r"""Compare two functions in the weighted partial order.

    Non-strict: :math:`h_1 \preceq h_2` iff :math:`w^1_i \le w^2_i + s` at
    every node; ``EQUALS`` when both directions hold. Strict:
    :math:`h_1 \prec h_2` iff :math:`w^1_i < w^2_i - s` at every node.
    """
    if slack < 0:
        raise ValidationError(f"slack must be nonnegative, got {slack}", field="slack")
    h1.check_compatible(h2)
    w1 = np.asarray(h1.weighted)
    w2 = np.asarray(h2.weighted)

    if strict:
        if np.all(w1 < w2 - slack):
            return Order.PRECEDES
        if np.all(w2 < w1 - slack):
            return Order.SUCCEEDS
        return Order.INCOMPARABLE

    below = bool(np.all(w1 <= w2 + slack))
    above = bool(np.all(w2 <= w1 + slack))
    if below and above:
        return Order.EQUALS
    if below:
        return Order.PRECEDES
    if above:
        return Order.SUCCEEDS
    return Order.INCOMPARABLE


def violating_nodes(
    lower: GridFunction, upper: GridFunction, *, strict: bool = False,
    slack: float = DEFAULT_SLACK,
) -> np.ndarray:
    """Indices where ``lower`` fails to lie below ``upper``."""
    lower.check_compatible(upper)
    w1 = np.asarray(lower.weighted)
    w2 = np.asarray(upper.weighted)
    bad = ~(w1 < w2 - slack) if strict else ~(w1 <= w2 + slack)
    return np.flatnonzero(bad)
