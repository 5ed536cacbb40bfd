import math

import numpy as np
import pytest

from psihilfer.errors import HypothesisViolation, PreconditionError, ValidationError
from psihilfer.grid import FractionalOrder, GradedMesh, GridFunction
from psihilfer.inequalities import (
    TouchpointCase,
    check_one_sided_lipschitz,
    check_ratio_increasing,
    constant_term_derivative,
    defect,
    is_subsolution,
    is_supersolution,
    ml_identity_sweep,
    ml_profile,
    ml_term_checks,
    nonstrict_limit_check,
    perturbed_super_solution,
    strict_comparison_check,
    touchpoint_derivative,
    verify_ml_identity,
)
from psihilfer.psi import make_preset
from psihilfer.solver import HybridProblem, SolverConfig, solve_picard
from psihilfer.special import MittagLefflerParams, mittag_leffler
from psihilfer.weighted import Order, weighted_compare
from conftest import E_05_1

IDENT = make_preset("identity")
CAPUTO = FractionalOrder(0.5, 1.0)
# 1/Gamma(0.5) and 2 * 0.1 * E_0.5(1)
INV_GAMMA_HALF = 0.5641895835477563
PERTURBED_EXAMPLE = 1.0017960161524567


# {{{ touchpoint


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0])
def test_touchpoint_examples(psi, nu):
    mesh = GradedMesh(1.0, 512)
    order = FractionalOrder(0.5, nu)
    i1 = 384
    assert touchpoint_derivative(TouchpointCase(GridFunction.zeros(mesh, psi, order), i1)) == 0.0

    u = psi.increment(mesh.nodes)
    m = GridFunction.from_weighted(mesh, psi, order, u - u[i1])
    d = touchpoint_derivative(TouchpointCase(m, i1, "nonpositive"))
    xi = order.xi
    exact = math.gamma(xi + 1) / math.gamma(xi + 1 - 0.5) * u[i1] ** (xi - 0.5)
    assert d >= 0
    assert d == pytest.approx(exact, rel=1e-4)

    neg = touchpoint_derivative(TouchpointCase(-m, i1, "nonnegative"))
    assert neg == pytest.approx(-d, rel=1e-14)


def test_touchpoint_preconditions(mesh):
    u = IDENT.increment(mesh.nodes)
    m = GridFunction.from_weighted(mesh, IDENT, CAPUTO, u - u[100])
    with pytest.raises(PreconditionError):
        TouchpointCase(m, 200)  # m(t1) != 0
    with pytest.raises(PreconditionError):
        TouchpointCase(m, 100, "nonnegative")
    with pytest.raises(ValidationError):
        TouchpointCase(m, 100, "negative")
    with pytest.raises(ValidationError):
        TouchpointCase(m, 0)
    assert TouchpointCase(m, 100).expected_sign == 1
    assert TouchpointCase(-m, 100, "nonnegative").expected_sign == -1


# }}}


# {{{ Mittag-Leffler identity


def test_ml_profile(mesh):
    order = FractionalOrder(0.5, 0.5)
    prof = ml_profile(1.0, mesh, IDENT, order)
    assert prof.weighted[0] == 0.0
    assert prof.values()[-1] == pytest.approx(E_05_1, rel=1e-14)
    assert ml_profile(1.0, mesh, IDENT, CAPUTO).weighted[0] == 1.0
    with pytest.raises(ValidationError):
        ml_profile(40.0, mesh, IDENT, CAPUTO)


def test_ml_identity_small_rate():
    chk = verify_ml_identity(1e-12, CAPUTO, IDENT, 1.0, GradedMesh(1.0, 256))
    assert abs(chk.lhs) < 1e-10 and abs(chk.rhs) < 1e-10
    assert chk.constant_term == 0.0


def test_ml_identity_caputo_type(psi):
    chk = verify_ml_identity(0.5, CAPUTO, psi, 1.0)
    assert chk.rel_err < 1e-5


def test_ml_identity_with_constant_term_example():
    # nu = 0: the derivative of the constant series term is 1/Gamma(0.5) at t = 1
    chk = verify_ml_identity(0.5, FractionalOrder(0.5, 0.0), IDENT, 1.0)
    assert chk.rhs == pytest.approx(E_05_1, rel=1e-14)
    assert chk.constant_term == pytest.approx(INV_GAMMA_HALF, rel=1e-14)
    assert chk.lhs == pytest.approx(chk.rhs + chk.constant_term, rel=1e-4)


@pytest.mark.parametrize("L", [0.25, 0.5])
@pytest.mark.parametrize("mu", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("nu", [0.0, 0.5])
def test_ml_residual_is_the_constant_term(L, mu, nu):
    """For nu < 1, D E_mu(2L dPsi^mu) - 2L E_mu(2L dPsi^mu) = dPsi^(-mu)/Gamma(1 - mu)."""
    sw = ml_identity_sweep(L, FractionalOrder(mu, nu), IDENT, GradedMesh(1.0, 2048))
    resid = sw.lhs - sw.rhs
    np.testing.assert_allclose(resid, sw.constant_term, rtol=1e-3)
    assert np.all(sw.constant_term > 0)


def test_constant_term_derivative_numerically(psi):
    order = FractionalOrder(0.4, 0.3)
    mesh = GradedMesh(1.0, 1024)
    one = GridFunction.from_callable(lambda t: 1.0 + 0 * t, mesh, psi, order)
    from psihilfer.operators import hilfer_derivative

    D = hilfer_derivative(one)
    sel = mesh.nodes >= 0.1
    np.testing.assert_allclose(D[sel], constant_term_derivative(order, one.increments[sel]), rtol=1e-4)
    assert np.all(constant_term_derivative(CAPUTO, one.increments) == 0)


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0])
def test_ml_term_checks(nu):
    for chk in ml_term_checks(0.5, FractionalOrder(0.5, nu), IDENT, 1.0):
        assert chk.coefficient == pytest.approx(chk.expected, rel=1e-14)
        assert chk.numeric == pytest.approx(chk.exact, rel=1e-4)


# }}}


# {{{ sub- and super-solutions


def _linear_problem(order=CAPUTO, g="y"):
    return HybridProblem("1", g, 1.0, 1.0, IDENT, order)


def test_defect_of_solution_is_small():
    p = HybridProblem("1 + 0.1*t + 0.1*exp(-y^2)", "0.5*sin(y) + t", 0.5, 1.0, IDENT, FractionalOrder(0.6, 0.5))
    sol, _ = solve_picard(p, SolverConfig(N=512))
    d = defect(sol, p)
    assert np.max(np.abs(d.defect) / d.tol) < 1e-2
    assert is_subsolution(d) and is_supersolution(d)


def test_strict_comparison_examples():
    p = _linear_problem()
    scfg = SolverConfig(N=512)
    y, _ = solve_picard(p, scfg)
    z, _ = solve_picard(p.perturbed(0.1), scfg)
    v = strict_comparison_check(y, z, p)
    assert v.passed and v.violating_nodes == ()
    assert v.ic_gap == pytest.approx(0.1)
    assert v.details["which_strict"] == "z-side"

    with pytest.raises(PreconditionError):
        strict_comparison_check(y, y, p)

    order = FractionalOrder(0.5, 0.5)
    h = HybridProblem("1", "0", 1.0, 1.0, IDENT, order)
    mesh = GradedMesh(1.0, 256)
    y = GridFunction.power(mesh, IDENT, order, order.xi - 1.0, 1.0)
    z = GridFunction.power(mesh, IDENT, order, order.xi - 1.0, 2.0)
    v = strict_comparison_check(y, z, h, "y-side")
    assert v.passed and v.ic_gap == 1.0


def test_strict_comparison_rejects_non_subsolution():
    order = FractionalOrder(0.5, 0.5)
    h = HybridProblem("1", "-1", 1.0, 1.0, IDENT, order)
    mesh = GradedMesh(1.0, 256)
    y = GridFunction.power(mesh, IDENT, order, order.xi - 1.0, 1.0)  # D y = 0 > g = -1
    z = GridFunction.power(mesh, IDENT, order, order.xi - 1.0, 2.0)
    with pytest.raises(PreconditionError, match="sub-solution"):
        strict_comparison_check(y, z, h)


def test_lattice_hypotheses():
    assert check_ratio_increasing(_linear_problem()).ok
    bad = HybridProblem("1 + y^2", "0", 1.0, 1.0, IDENT, CAPUTO)
    chk = check_ratio_increasing(bad)
    assert not chk.ok and chk.worst < 0

    assert check_one_sided_lipschitz(_linear_problem(), 1.0).ok
    assert not check_one_sided_lipschitz(_linear_problem(), 0.5).ok
    sine = HybridProblem("1", "sin(y)", 1.0, 1.0, IDENT, CAPUTO)
    assert check_one_sided_lipschitz(sine, 1.0).ok


# }}}


# {{{ perturbed super-solution


def test_perturbed_identity_map(mesh):
    order = FractionalOrder(0.5, 0.5)
    p = HybridProblem("1", "y", 1.0, 1.0, IDENT, order)
    z = GridFunction.from_callable(lambda t: 1.0 + t, mesh, IDENT, order)
    ze = perturbed_super_solution(z, p, 0.5, 0.1)
    E = mittag_leffler(MittagLefflerParams(0.5), z.increments**0.5)
    np.testing.assert_allclose(ze.values()[1:], z.values()[1:] + 0.1 * E[1:], rtol=1e-14)
    assert ze.weighted[0] == z.weighted[0]
    assert perturbed_super_solution(z, p, 0.5, 0.0) is z


def test_perturbed_example():
    mesh = GradedMesh(1.0, 64)
    p = HybridProblem("2", "0", 0.0, 1.0, IDENT, CAPUTO)
    ze = perturbed_super_solution(GridFunction.zeros(mesh, IDENT, CAPUTO), p, 0.5, 0.1)
    assert ze.values()[-1] == pytest.approx(PERTURBED_EXAMPLE, rel=1e-12)


@pytest.mark.parametrize("nu", [0.0, 1.0])
def test_perturbed_strict_and_monotone_in_eps(nu):
    order = FractionalOrder(0.5, nu)
    p = HybridProblem("2 + 0.5*sin(t) + 0.1*y/(1 + y^2)", "0", 1.0, 1.0, IDENT, order)
    mesh = GradedMesh(1.0, 128)
    z = GridFunction.from_callable(lambda t: np.cos(t), mesh, IDENT, order, weighted_limit=1.0)
    z1 = perturbed_super_solution(z, p, 0.5, 0.01)
    z2 = perturbed_super_solution(z, p, 0.5, 0.1)
    first = 0 if nu == 1.0 else 1
    assert np.all(z1.weighted[first:] > z.weighted[first:])
    assert weighted_compare(z1, z2) in (Order.PRECEDES, Order.EQUALS)


def test_perturbed_requires_increasing_ratio(mesh):
    p = HybridProblem("1 + y^2", "0", 1.0, 1.0, IDENT, CAPUTO)
    with pytest.raises(HypothesisViolation):
        perturbed_super_solution(GridFunction.zeros(mesh, IDENT, CAPUTO), p, 0.5, 0.1)
    with pytest.raises(ValidationError):
        perturbed_super_solution(GridFunction.zeros(mesh, IDENT, CAPUTO), p, 0.5, -0.1)


def test_nonstrict_limit(mesh):
    p = HybridProblem("2 + 0.5*sin(t)", "y", 1.0, 1.0, IDENT, CAPUTO)
    z = GridFunction.from_callable(np.exp, mesh, IDENT, CAPUTO)
    chk = nonstrict_limit_check(z, p, 0.5, [0.1, 0.01, 0.001, 1e-4])
    assert chk.ok and chk.monotone
    # the distance is linear in eps
    assert chk.distances[-1] / chk.distances[0] == pytest.approx(1e-3, rel=0.05)
    with pytest.raises(ValidationError):
        nonstrict_limit_check(z, p, 0.5, [0.01, 0.1])


# }}}
