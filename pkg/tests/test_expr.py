import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psihilfer import expr as ex
from psihilfer.errors import (
    ArityError,
    DomainError,
    ExprSyntaxError,
    MissingBindingError,
    UnknownIdentifierError,
)
from reference_eval import random_expression, reference_eval


def ev(src, **b):
    return ex.evaluate(ex.parse(src, list(b) or ["t"]), b)


# {{{ examples


def test_parse_variable():
    e = ex.parse("t", ["t"])
    assert e.root == ex.Var("t", 0)
    assert e.free_variables == {"t"}


def test_precedence_examples():
    assert ev("2+3*t", t=4) == 14
    assert ev("exp(-t)*y^2", t=0, y=3) == 9
    assert ev("t^0.5", t=4) == 2
    assert ev("gamma(t)", t=5) == pytest.approx(24, rel=1e-14)


def test_division_by_zero():
    with pytest.raises(DomainError) as info:
        ev("1/t", t=0)
    assert info.value.offset == 1


@pytest.mark.parametrize(
    ("src", "t", "value"),
    [
        ("-t^2", 3, -9),
        ("2^-t", 1, 0.5),
        ("2^3^2", 0, 512),
        ("2**3", 0, 8),
        ("-2^-2", 0, -0.25),
        ("8/4/2", 0, 1),
        ("8-4-2", 0, 2),
        ("+t", 2, 2),
        ("--t", 2, 2),
        ("2*-t", 3, -6),
        ("pow(2, 10)", 0, 1024),
        ("pi - e", 0, math.pi - math.e),
        (".5e1 + 1.E-1", 0, 5.1),
        ("abs(-t)", 2, 2),
        ("(-8)^3", 0, -512),
    ],
)
def test_operator_table(src, t, value):
    assert ev(src, t=t) == pytest.approx(value, rel=1e-15)


def test_constants_can_be_shadowed():
    assert ex.evaluate(ex.parse("e + 1", ["e"]), {"e": 2.0}) == 3.0


def test_array_evaluation_broadcasts():
    e = ex.parse("t*y + 1", ["t", "y"])
    out = ex.evaluate(e, {"t": np.arange(3.0)[:, None], "y": np.arange(2.0)[None, :]})
    assert out.shape == (3, 2)
    np.testing.assert_array_equal(out, np.arange(3.0)[:, None] * np.arange(2.0) + 1)

    const = ex.evaluate(ex.parse("2", ["t"]), {"t": np.zeros(4)})
    np.testing.assert_array_equal(const, np.full(4, 2.0))


def test_expr_call_and_compile():
    e = ex.parse("t - y", ["t", "y"])
    assert e(5, 2) == 3
    assert e(t=5, y=2) == 3
    assert ex.compile_function(e)(1, 4) == -3
    with pytest.raises(MissingBindingError):
        e(1)
    with pytest.raises(MissingBindingError):
        ex.evaluate(e, {"t": 1.0})
    assert ex.parse("2*pi", ["t"]).is_constant()


# }}}


# {{{ malformed input


@pytest.mark.parametrize(
    ("src", "exc", "offset"),
    [
        ("", ExprSyntaxError, 0),
        ("   ", ExprSyntaxError, 0),
        ("1 +", ExprSyntaxError, 3),
        ("(t", ExprSyntaxError, 2),
        ("t)", ExprSyntaxError, 1),
        ("2 t", ExprSyntaxError, 2),
        ("t $ 2", ExprSyntaxError, 2),
        ("*t", ExprSyntaxError, 0),
        ("sin t", ExprSyntaxError, 0),
        ("sin()", ArityError, 0),
        ("sin(t,)", ExprSyntaxError, 6),
        ("x + 1", UnknownIdentifierError, 0),
        ("t + foo(1)", UnknownIdentifierError, 4),
        ("sin(1, 2)", ArityError, 0),
        ("pow(2)", ArityError, 0),
        ("t ^ ", ExprSyntaxError, 4),
        ("1..2", ExprSyntaxError, 2),
        ("é + t", ExprSyntaxError, 0),
        ("t + é", ExprSyntaxError, 4),
    ],
)
def test_malformed_inputs_are_located(src, exc, offset):
    with pytest.raises(exc) as info:
        ex.parse(src, ["t"])
    assert info.value.offset == offset


@pytest.mark.parametrize(
    ("src", "t", "offset"),
    [
        ("log(t)", 0.0, 0),
        ("1 + sqrt(t)", -1.0, 4),
        ("t^0.5", -1.0, 1),
        ("t^-1", 0.0, 1),
        ("gamma(t)", -2.0, 0),
        ("2 * (1/t)", 0.0, 6),
        ("pow(t, 0.5)", -4.0, 0),
    ],
)
def test_domain_errors_are_located(src, t, offset):
    with pytest.raises(DomainError) as info:
        ev(src, t=t)
    assert info.value.offset == offset


def test_byte_offsets_after_multibyte_text():
    # offsets count UTF-8 bytes, so "é" (2 bytes) shifts later positions by 2
    with pytest.raises(ExprSyntaxError) as info:
        ex.parse("t+é", ["t"])
    assert info.value.offset == 2


def test_bad_declarations():
    with pytest.raises(ValueError):
        ex.parse("t", [])
    with pytest.raises(ValueError):
        ex.parse("t", ["t", "t"])
    with pytest.raises(ValueError):
        ex.parse("t", ["sin"])


# }}}


# {{{ properties


def test_parse_print_parse_idempotence():
    rng = random.Random(7)
    for _ in range(300):
        src = random_expression(rng)
        e1 = ex.parse(src, ["t", "y"])
        printed = str(e1)
        e2 = ex.parse(printed, ["t", "y"])
        assert _strip(e1.root) == _strip(e2.root), src
        assert str(e2) == printed


def _strip(node):
    """AST without source offsets."""
    if isinstance(node, ex.Num):
        return ("num", node.value)
    if isinstance(node, ex.Var):
        return ("var", node.name)
    if isinstance(node, ex.Neg):
        return ("neg", _strip(node.operand))
    if isinstance(node, ex.BinOp):
        return (node.op, _strip(node.left), _strip(node.right))
    return (node.func, *map(_strip, node.args))


def test_reference_evaluator_sanity():
    assert reference_eval("-2^2", {}) == -4
    assert reference_eval("2^-3^2", {}) == 2.0 ** -9
    assert reference_eval("2^3^2", {}) == 512
    assert reference_eval("8-4-2", {}) == 2
    assert reference_eval("pow(2, 3) * -sin(0)", {}) == 0


def test_precedence_table_is_total():
    ops = ["+", "-", "*", "/", "^"]
    for a in ops:
        for b in ops:
            src = f"3 {a} 2 {b} 1.5"
            assert ev(src, t=0) == pytest.approx(reference_eval(src, {}), rel=1e-15)


@given(
    st.floats(-1e3, 1e3, allow_nan=False),
    st.floats(-1e3, 1e3, allow_nan=False),
    st.floats(0.1, 1e3),
)
@settings(max_examples=200, deadline=None)
def test_arithmetic_matches_python(a, b, c):
    e = ex.parse("a + b * c - a / c", ["a", "b", "c"])
    assert e(a, b, c) == a + b * c - a / c


# }}}
