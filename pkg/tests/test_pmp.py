from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commopt import oracle, problems
from commopt.expr import Equality, Num, equal_canonical, evaluate, parse
from commopt.lieprop import VectorField, series
from commopt.pmp import (
    AmbiguousSelectionError,
    ControlProblem,
    DegenerateSystemError,
    HitTimeError,
    HitTimeResult,
    InfeasibleError,
    NotAffineError,
    ProblemError,
    adjoint_field,
    assemble_augmented,
    bang_branches,
    hamilton_pontryagin,
    hit_time_numeric,
    hit_time_polynomial,
    optimal_time,
    oscillator_times,
    smaller_quotient_rule,
    state_polynomials,
    switching_function,
)

OSC = problems.oscillator().problem
PEND = problems.pendulum().problem
VDP = problems.vanderpol().problem


def _same(a, b):
    return equal_canonical(parse(a) if isinstance(a, str) else a,
                           parse(b) if isinstance(b, str) else b)


# --- eta and adjoints ----------------------------------------------------------

@pytest.mark.parametrize("p, eta", [
    (OSC, "-1 + psi1*x2 + psi2*(-w^2*x1 + u)"),
    (PEND, "-1 + psi1*x2 + psi2*(-beta*x2 - sin(x1) + u)"),
    (VDP, "-1 + psi1*x2 + psi2*(-x1 + eps*x2*(1 - x1^2) + u)"),
])
def test_hamilton_pontryagin(p, eta):
    assert _same(hamilton_pontryagin(p), eta) is Equality.STRUCTURAL


@pytest.mark.parametrize("p, adj", [
    (OSC, ("w^2*psi2", "-psi1")),
    (PEND, ("psi2*cos(x1)", "-psi1 + beta*psi2")),
    (VDP, ("(1 + 2*eps*x1*x2)*psi2", "-(psi1 + eps*(1 - x1^2)*psi2)")),
])
def test_adjoint_field(p, adj):
    got = adjoint_field(p)
    assert all(_same(g, a) for g, a in zip(got, adj))


def test_switching_function_is_second_adjoint():
    for p in (OSC, PEND, VDP):
        assert switching_function(p) == parse("psi2")


# --- branches ------------------------------------------------------------------

def test_pendulum_augmented_field():
    branches, _ = bang_branches(PEND)
    lower = branches[0]
    assert lower.label == "lower" and lower.u_value == Num(-1)
    want = ("x2", "-beta*x2 - sin(x1) - 1", "psi2*cos(x1)", "-psi1 + beta*psi2")
    assert all(_same(g, w) for g, w in zip(lower.augmented.components, want))


def test_oscillator_equilibrium_shift():
    branches, _ = bang_branches(OSC)
    lower, upper = branches
    assert _same(lower.shift[0], "-1/w^2") and _same(upper.shift[0], "1/w^2")
    assert lower.shift[1] == Num(0)


def test_vanderpol_symbolic_bounds():
    branches, _ = bang_branches(VDP)
    assert [b.u_value for b in branches] == [parse("alpha"), parse("beta")]


def test_zero_dynamics_give_zero_state_field():
    p = ControlProblem(("a", "b"), (0, 0))
    field = assemble_augmented(p, 1)
    assert all(c == Num(0) for c in field.components)


def test_problem_validation():
    with pytest.raises(NotAffineError):
        ControlProblem(("x",), ("u^2",))
    with pytest.raises(ProblemError, match="lower < upper"):
        ControlProblem(("x",), ("u",), bounds=(1, -1))
    with pytest.raises(ProblemError, match="target"):
        ControlProblem(("x",), ("u",), target=(0.0, 0.0))
    with pytest.raises(ProblemError, match="clash"):
        ControlProblem(("psi1",), ("u",))


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4).filter(lambda v: abs(v[3]) > 1e-9))
def test_bang_bang_maximizes_eta(v):
    x1, x2, psi1, psi2 = v
    env = {"x1": x1, "x2": x2, "psi1": psi1, "psi2": psi2, "beta": 0.1}
    eta = hamilton_pontryagin(PEND)
    values = {u: evaluate(eta, dict(env, u=u)) for u in (-1.0, 1.0)}
    switch = evaluate(switching_function(PEND), env)
    best = max(values, key=values.get)
    assert best == (1.0 if switch > 0 else -1.0)


# --- polynomial hit times --------------------------------------------------------

def _pendulum_polys(branch_index):
    branches, _ = bang_branches(PEND)
    s = series(branches[branch_index].state_field(2), 2)
    return state_polynomials(s, 2, (0, 0))


@pytest.mark.parametrize("index, sign, sine", [(0, "-", "+"), (1, "+", "-")])
def test_pendulum_quotient(index, sign, sine):
    r = hit_time_polynomial(*_pendulum_polys(index))
    assert r.feasible is None
    f = f"(-beta*x2 - sin(x1) {sign} 1)"
    quotient = parse(f"({f}*(x2 + beta*x1) + x1*x2*cos(x1)) / ({f}*(sin(x1) {sine} 1) - x2^2*cos(x1))")
    rng = np.random.default_rng(11 + index)
    for x1, x2, beta in rng.uniform([-1.5, -2, 0], [1.5, 2, 1], size=(100, 3)):
        env = {"x1": x1, "x2": x2, "beta": beta}
        want = evaluate(quotient, env)
        assert evaluate(r.T, env) == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_vanderpol_degree_one():
    branches, _ = bang_branches(VDP)
    s = series(branches[0].state_field(2), 1)
    r = hit_time_polynomial(*state_polynomials(s, 2, (0, 0)))
    assert _same(r.T, "x2/(x1 - eps*x2*(1 - x1^2) - alpha)")
    relation = parse("x2^2 + x1^2 - eps*x1*x2*(1 - x1^2) - alpha*x1")
    assert _same(r.consistency, relation) or _same(r.consistency, -relation)


def test_elimination_formula_numeric():
    # (T - 1)(T - 3) and (T - 1)(T + 2) share the root 1
    r = hit_time_polynomial([3, -4, 1], [-2, 1, 1])
    assert r.T == pytest.approx(1.0)
    assert r.consistency == pytest.approx(0.0)
    assert r.feasible and max(map(abs, r.residual)) <= 1e-12


def test_at_target_is_zero():
    r = hit_time_polynomial([0, 1, 2], [0, 3, 1])
    assert r.T == 0 and r.residual == (0, 0) and r.feasible


def test_degenerate_denominator():
    with pytest.raises(DegenerateSystemError):
        hit_time_polynomial([1, 1, 1], [2, 2, 2])


def test_root_outside_window():
    with pytest.raises(HitTimeError) as info:
        hit_time_polynomial([1, 1], [2, 2])  # common root -1
    assert info.value.result.T == pytest.approx(-1.0)
    assert info.value.result.feasible is False


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.2, 3), st.floats(0.2, 3))
def test_residuals_vanish_when_consistent(root, other1, other2, lead1, lead2):
    # build two quadratics sharing a positive root
    first = [lead1 * root * other1, -lead1 * (root + other1), lead1]
    second = [lead2 * root * other2, -lead2 * (root + other2), lead2]
    try:
        r = hit_time_polynomial(first, second, window=(0, 10))
    except (DegenerateSystemError, HitTimeError):
        return
    if abs(r.consistency) <= 1e-9:
        assert max(abs(x) for x in r.residual) <= 1e-9


# --- numeric hit times -----------------------------------------------------------

OSC_UPPER = VectorField(("x1", "x2"), ("x2", "-x1 + 1"))


@pytest.mark.parametrize("t_star", [0.3, 0.7, 1.1])
def test_numeric_recovers_backward_flow(t_star):
    start = oracle.integrate(OSC_UPPER, {"x1": 0.0, "x2": 0.0}, (0.0, -t_star), tol=1e-13).final
    r = hit_time_numeric(OSC_UPPER, dict(zip(OSC_UPPER.vars, start)), (0, 0), 2.0)
    assert r.feasible and abs(r.T - t_star) <= 1e-6


def test_numeric_at_target():
    r = hit_time_numeric(OSC_UPPER, {"x1": 0.0, "x2": 0.0}, (0, 0), 1.0)
    assert r.T == 0.0


def test_numeric_no_crossing():
    with pytest.raises(HitTimeError, match="closest approach"):
        hit_time_numeric(OSC_UPPER, {"x1": 3.0, "x2": 0.0}, (0, 0), 1.0)


def test_pendulum_numeric_close_to_truncated_root():
    # small state: series root and exact hit agree to a few T^3
    spec = problems.pendulum()
    branches, _ = bang_branches(spec.problem)
    x0 = {"x1": 0.0, "x2": 0.0}
    field = branches[0].state_field(2)
    back = oracle.integrate(field, dict(x0, beta=0.1), (0.0, -0.05), tol=1e-13).final
    env = {"x1": back[0], "x2": back[1], "beta": 0.1}
    num = hit_time_numeric(field, env, (0, 0), 0.2)
    poly = hit_time_polynomial(*_pendulum_polys(0), window=(0, 1), bindings=env, tol=1e-3)
    assert abs(num.T - poly.T) <= 10 * 0.05 ** 3


# --- closed form oscillator ------------------------------------------------------

def test_oscillator_example_positive_velocity():
    r = oscillator_times(1.0, 2.0, 1.0)
    assert r.chosen == "minus" and r.T == pytest.approx(math.atan(1 / 3), abs=1e-15)


def test_oscillator_example_negative_velocity():
    r = oscillator_times(1.0, 2.0, -1.0)
    assert r.chosen == "plus" and r.T == r.t_plus > 0


def test_oscillator_zero_velocity_is_ambiguous():
    with pytest.raises(AmbiguousSelectionError):
        oscillator_times(1.0, 2.0, 0.0)


def test_oscillator_zero_frequency():
    with pytest.raises(ProblemError):
        oscillator_times(0.0, 1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.2, 3), st.floats(-3, 3), st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3))
def test_tan_relation(w, x1, x2):
    r = oscillator_times(w, x1, x2)
    for which, T, u in (("plus", r.t_plus, 1.0), ("minus", r.t_minus, -1.0)):
        assert T > 0
        if r.domain_ok[which]:
            lhs = math.tan(w * T) * w * (x1 - u / w ** 2)
            assert lhs == pytest.approx(x2, rel=1e-10, abs=1e-10)


# --- selection -------------------------------------------------------------------

def _res(label, T, feasible):
    return HitTimeResult(T, (0.0, 0.0), "closed-form", feasible, label=label)


def test_optimal_time_minimum():
    rep = optimal_time([_res("lower", 2.0, True), _res("upper", 1.5, True)])
    assert rep.selected.label == "upper"


def test_optimal_time_skips_infeasible():
    rep = optimal_time([_res("lower", 0.5, False), _res("upper", 1.5, True)])
    assert rep.selected.label == "upper"
    assert [r.label for r in rep.table] == ["lower", "upper"]


def test_optimal_time_none_feasible():
    with pytest.raises(InfeasibleError):
        optimal_time([_res("lower", -1.0, False)])


def test_smaller_quotient_rule_ignores_sign():
    picked = smaller_quotient_rule([_res("lower", 0.5, True), _res("upper", -0.2, False)])
    assert picked.label == "upper"


def test_vanderpol_piecewise_rule():
    # min of the two degree-one quotients matches the branch with smaller T
    branches, _ = bang_branches(VDP)
    env = {"x1": 1.0, "x2": 0.5, "eps": 0.1, "alpha": -0.5, "beta": 0.5}
    results = []
    for b in branches:
        s = series(b.state_field(2), 1)
        r = hit_time_polynomial(*state_polynomials(s, 2, (0, 0)))
        results.append(HitTimeResult(evaluate(r.T, env), (0.0, 0.0), "common-root", True,
                                     label=b.label))
    rep = optimal_time(results)
    assert rep.selected.T == min(x.T for x in results)
    assert rep.selected.T == pytest.approx(1 / 3)
