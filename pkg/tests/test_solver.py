import math

import numpy as np
import pytest

from psihilfer.errors import HypothesisViolation, UnknownIdentifierError, ValidationError
from psihilfer.grid import FractionalOrder, GradedMesh, GridFunction
from psihilfer.psi import make_preset
from psihilfer.solver import (
    ExistenceParams,
    HybridProblem,
    Lattice,
    SolverConfig,
    estimate_params,
    existence_check,
    existence_radius,
    initial_guess,
    picard_step,
    residual,
    solve_picard,
)
from conftest import E_05_1, INV_GAMMA_MU1, preset

IDENT = make_preset("identity")
CAPUTO = FractionalOrder(0.5, 1.0)
# 0.1 (1 + 1/Gamma(1.5))
EXISTENCE_EXAMPLE = 0.21283791670955126


def problem(f="1", g="0", y0=1.0, order=CAPUTO, psi=IDENT, **kw):
    return HybridProblem(f, g, y0, 1.0, psi, order, **kw)


# {{{ problem and parameters


def test_problem_accepts_expressions_and_callables():
    p = problem(f="1 + t", g=lambda t, y: 0 * y + t)
    assert p.f_source == "1 + t"
    np.testing.assert_array_equal(p.eval_g(np.array([0.5, 1.0]), 0.0), [0.5, 1.0])
    assert p.c0 == 1.0
    q = problem(f="2", y0=1.0, y0_anchor=5.0)
    assert q.anchor == 5.0 and q.c0 == 0.5


def test_f_must_not_vanish():
    with pytest.raises(HypothesisViolation):
        problem(f="0")
    with pytest.raises(HypothesisViolation):
        problem(f="y")  # changes sign on the lattice
    with pytest.raises(HypothesisViolation):
        problem(f="1/(y - 100) + 0*t", lattice=Lattice(y_range=(0.0, 200.0)))
    with pytest.raises(UnknownIdentifierError) as info:
        problem(g="t + z")
    assert info.value.offset == 4
    with pytest.raises(ValidationError):
        HybridProblem("1", "0", math.nan, 1.0, IDENT, CAPUTO)


def test_perturbed_problem():
    p = problem(g="y", y0=1.0)
    q = p.perturbed(0.25)
    assert q.y0 == 1.25 and q.anchor == 1.25
    assert float(q.eval_g(0.0, 2.0)) == 2.25
    assert p.perturbed(0.0) is p
    fixed = problem(f="2 + sin(y)", g="y", y0=1.0, y0_anchor=0.0)
    assert fixed.perturbed(0.1).anchor == 0.0


def test_existence_examples():
    p = problem(y0=1.0)
    assert existence_check(p, ExistenceParams(0.0, 1.0, 1.0)) == (0.0, True)
    v = existence_check(p, ExistenceParams(0.1, 1.0, 1.0), "printed")
    assert v.value == pytest.approx(EXISTENCE_EXAMPLE, abs=1e-15) and v.ok
    w = existence_check(problem(y0=1.0, order=FractionalOrder(0.3, 1.0)), ExistenceParams(2.0, 0.0, 1.0))
    assert w == (2.0, False)
    with pytest.raises(ValidationError):
        existence_check(p, ExistenceParams(0.1, 1.0, 1.0), "other")


def test_existence_modes_differ_for_nu_below_one():
    p = HybridProblem("1", "0", 1.0, 2.0, IDENT, FractionalOrder(0.5, 0.0))
    prm = ExistenceParams(0.1, 1.0, 1.0)
    printed = existence_check(p, prm, "printed").value
    proof = existence_check(p, prm, "proof").value
    # exponents mu = 0.5 and mu + 1 - xi = 1.0 on DeltaPsi(T) = 2
    assert printed == pytest.approx(0.1 * (1 + 2**0.5 / math.gamma(1.5)), rel=1e-15)
    assert proof == pytest.approx(0.1 * (1 + 2.0 / math.gamma(1.5)), rel=1e-15)
    assert existence_radius(p, ExistenceParams(0.1, 1.0, 3.0)) == pytest.approx(3.0 * (1 + 2.0 / math.gamma(1.5)))


def test_existence_params_validation():
    for kw in ({"L": -1, "h_norm": 0, "K": 1}, {"L": 0, "h_norm": math.inf, "K": 1}, {"L": 0, "h_norm": 0, "K": 0}):
        with pytest.raises(ValidationError):
            ExistenceParams(**kw)


def test_estimate_params_examples():
    assert estimate_params(problem(f="1")).L == 0.0
    assert estimate_params(problem(f="1")).K == 1.0
    p = estimate_params(problem(f="2 + sin(y)", g="t"))
    assert p.L == pytest.approx(1.0, abs=1e-3)
    assert p.K == pytest.approx(3.0, abs=1e-3)
    assert p.h_norm == 1.0
    assert p.source == "estimated"


# }}}


# {{{ Picard step and residual


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0])
def test_picard_step_homogeneous(psi, nu):
    order = FractionalOrder(0.5, nu)
    p = problem(f="1", g="0", y0=2.0, order=order, psi=psi)
    mesh = GradedMesh(1.0, 64)
    out = picard_step(GridFunction.zeros(mesh, psi, order), p)
    np.testing.assert_array_equal(out.weighted, 2.0)


def test_picard_step_power_rule():
    mesh = GradedMesh(1.0, 256)
    p = problem(f="1", g="1", y0=0.0)
    out = picard_step(GridFunction.zeros(mesh, IDENT, CAPUTO), p)
    np.testing.assert_allclose(out.values(), mesh.nodes**0.5 / math.gamma(1.5), rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("nu", [0.0, 1.0])
def test_picard_step_variable_f(nu):
    order = FractionalOrder(0.5, nu)
    mesh = GradedMesh(1.0, 64)
    p = problem(f="1 + t", g="0", y0=1.0, order=order)
    out = picard_step(GridFunction.zeros(mesh, IDENT, order), p)
    np.testing.assert_allclose(out.weighted[1:], 1.0 + mesh.nodes[1:], rtol=1e-15)
    assert out.weighted[0] == 1.0


def test_residual_examples():
    order = FractionalOrder(0.5, 0.5)
    mesh = GradedMesh(1.0, 64)
    p = problem(f="1", g="0", y0=1.0, order=order)
    exact = GridFunction.power(mesh, IDENT, order, order.xi - 1.0)
    assert residual(exact, p) == 0.0
    assert residual(GridFunction.zeros(mesh, IDENT, order), p) == 1.0


def test_initial_guess():
    mesh = GradedMesh(1.0, 16)
    g = initial_guess(problem(y0=3.0), mesh)
    np.testing.assert_array_equal(g.weighted, 3.0)


# }}}


# {{{ solve


def test_homogeneous_solve_one_step():
    sol, rep = solve_picard(problem(y0=2.0, order=FractionalOrder(0.5, 0.5)), SolverConfig(N=64))
    np.testing.assert_array_equal(sol.weighted, 2.0)
    assert rep.converged and rep.iterations <= 2


def test_caputo_linear_example():
    sol, rep = solve_picard(problem(g="y", y0=1.0), SolverConfig(N=2048))
    assert rep.converged
    assert sol.values()[-1] == pytest.approx(E_05_1, rel=1e-3)


def test_constant_forcing_example():
    sol, rep = solve_picard(problem(g="1", y0=0.0), SolverConfig(N=512))
    assert sol.values()[-1] == pytest.approx(INV_GAMMA_MU1[0.5], rel=1e-12)
    assert rep.existence_value == 0.0


@pytest.mark.parametrize("nu", [0.0, 0.5])
def test_nonlinear_weighted_problem(nu):
    order = FractionalOrder(0.6, nu)
    p = problem(f="1 + 0.1*t + 0.1*exp(-y^2)", g="0.5*sin(y) + t", y0=0.5, order=order)
    sol, rep = solve_picard(p, SolverConfig(N=512))
    assert rep.converged
    assert rep.final_residual < 10 * 1e-10
    assert sol.weighted[0] == 0.5
    # contraction: increments eventually nonincreasing over the last half
    inc = rep.increments
    tail = inc[len(inc) // 2:]
    assert all(b <= a for a, b in zip(tail, tail[1:]))


def test_nonconvergence_is_reported():
    p = problem(f="1", g="5*y", y0=1.0)
    sol, rep = solve_picard(p, SolverConfig(N=64, max_iters=3))
    assert not rep.converged and rep.iterations == 3
    # f = 1 has Lipschitz constant 0, so the existence condition holds
    assert rep.existence_ok and rep.existence_value == 0.0


def test_existence_warning():
    p = problem(f="2 + sin(y)", g="y", y0=1.0)
    with pytest.warns(RuntimeWarning, match="existence condition"):
        _, rep = solve_picard(p, SolverConfig(N=64, max_iters=2), params=ExistenceParams(2.0, 1.0, 3.0))
    assert not rep.existence_ok


def test_divergence_is_reported():
    p = problem(f="1", g="exp(y)", y0=3.0)
    sol, rep = solve_picard(p, SolverConfig(N=64, max_iters=50))
    assert not rep.converged
    assert math.isfinite(sol.weighted[-1])


def test_report_fields():
    _, rep = solve_picard(problem(g="y"), SolverConfig(N=64), params=ExistenceParams(0.0, 1.0, 1.0))
    d = rep.to_dict()
    assert d["params"]["source"] == "user"
    assert isinstance(d["increments"], list)
    assert rep.existence_value_proof == rep.existence_value  # nu = 1
    assert rep.radius_R == pytest.approx(1.0 + 1.0 / math.gamma(1.5))


def test_damping_and_initial_iterate():
    p = problem(g="y", y0=1.0)
    cfg = SolverConfig(N=128, damping=0.5)
    sol, rep = solve_picard(p, cfg)
    sol2, rep2 = solve_picard(p, SolverConfig(N=128), initial=sol)
    assert rep.converged and rep2.converged and rep2.iterations <= 2
    with pytest.raises(ValidationError):
        solve_picard(p, SolverConfig(N=128), initial=GridFunction.zeros(GradedMesh(1.0, 64), IDENT, CAPUTO))
    for kw in ({"damping": 0.0}, {"picard_tol": 0.0}, {"max_iters": 0}):
        with pytest.raises(ValidationError):
            SolverConfig(**kw)


@pytest.mark.parametrize("k", range(3))
def test_mesh_refinement_closed_forms(k):
    # homogeneous, constant forcing and variable f cases
    cases = [
        ("1", "0", 1.0, lambda t: 1.0 + 0 * t),
        ("1", "1", 0.0, lambda t: t**0.5 / math.gamma(1.5)),
        ("1 + t", "0", 1.0, lambda t: 1.0 + t),
    ]
    f, g, y0, exact = cases[k]
    p = problem(f=f, g=g, y0=y0, psi=preset(0))
    errs = []
    for n in (128, 256):
        sol, _ = solve_picard(p, SolverConfig(N=n))
        errs.append(np.max(np.abs(sol.values()[1:] - exact(sol.nodes[1:]))))
    assert errs[1] <= max(errs[0], 1e-13)


# }}}
