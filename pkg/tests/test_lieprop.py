from __future__ import annotations

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings

from commopt import oracle
from commopt.expr import Equality, Num, Sym, equal_canonical, parse
from commopt.lieprop import (
    VectorField,
    equivalence_check,
    equivalence_table,
    eval_series,
    lie_derivative,
    read_trajectory_csv,
    sample_series,
    series,
    write_trajectory_csv,
)

from strategies import expressions

OSC = VectorField(("y1", "y2", "y3", "y4"), ("y2", "-w^2*y1", "w^2*y4", "-y3"))
PEND_LOWER = VectorField(("y1", "y2", "y3", "y4"),
                         ("y2", "-beta*y2 - sin(y1) - 1", "y4*cos(y1)", "-y3 + beta*y4"))
PEND_UPPER = VectorField(
    PEND_LOWER.vars, ("y2", "-beta*y2 - sin(y1) + 1", "y4*cos(y1)", "-y3 + beta*y4"))
VDP_ALPHA = VectorField(("y1", "y2", "y3", "y4"),
                        ("y2", "-y1 + eps*y2*(1 - y1^2) + alpha",
                         "(1 + 2*eps*y1*y2)*y4", "-(y3 + eps*(1 - y1^2)*y4)"))
ZERO_FIELD = VectorField(("a", "b"), (0, 0))


def test_lie_derivative_examples():
    assert lie_derivative(OSC, "y1") == Sym("y2")
    assert lie_derivative(OSC, "y2") == parse("-w^2*y1")
    assert lie_derivative(PEND_LOWER, "3*w + 2") == Num(0)


def test_oscillator_series_coefficients():
    s = series(OSC, 3)
    assert s.component("y1") == tuple(parse(t) for t in ("y1", "y2", "-w^2*y1", "-w^2*y2"))


@pytest.mark.parametrize("field, sign", [(PEND_LOWER, "-"), (PEND_UPPER, "+")])
def test_pendulum_order_two_display(field, sign):
    s = series(field, 2)
    f = f"(-beta*y2 - sin(y1) {sign} 1)"
    y1 = parse(f"y1 + t*y2 + t^2/2*{f}")
    y2 = parse(f"y2 + t*{f} + t^2/2*(-beta*{f} - y2*cos(y1))")
    assert equal_canonical(s.as_expr(0), y1) is Equality.STRUCTURAL
    assert equal_canonical(s.as_expr(1), y2) is Equality.STRUCTURAL


def test_zero_field_series():
    s = series(ZERO_FIELD, 5)
    for j in range(2):
        assert all(c == Num(0) for c in s.coeffs[j][1:])


def test_time_symbol_clash():
    with pytest.raises(ValueError, match="clashes"):
        series(OSC, 2).as_expr(0, t="w")


def test_eval_series_at_zero_is_exact():
    y0 = {"y1": 0.3, "y2": -0.7, "y3": 0.1, "y4": 2.0, "w": 1.5}
    assert list(eval_series(series(OSC, 6), y0, 0.0)) == [0.3, -0.7, 0.1, 2.0]


def _oscillator_closed_form(w, y0, t):
    c, s = math.cos(w * t), math.sin(w * t)
    y1, y2, y3, y4 = y0
    return np.array([y1 * c + y2 / w * s, y2 * c - y1 * w * s,
                     y3 * c + y4 * w * s, y4 * c - y3 / w * s])


def test_oscillator_resummation():
    s = series(OSC, 20)
    y0 = {"y1": 1.0, "y2": 1.0, "y3": 1.0, "y4": 1.0, "w": 2.0}
    got = eval_series(s, y0, 0.5)
    assert np.max(np.abs(got - _oscillator_closed_form(2.0, (1, 1, 1, 1), 0.5))) <= 1e-10


@pytest.mark.parametrize("w", [0.5, 1.0, 1.7, 2.0])
def test_linear_field_exactness(w):
    s = series(OSC, 20)
    rng = np.random.default_rng(7)
    for y0 in rng.uniform(-1, 1, size=(3, 4)):
        bind = dict(zip(OSC.vars, y0), w=w)
        for t in np.linspace(0, 1, 11):
            err = np.abs(eval_series(s, bind, t) - _oscillator_closed_form(w, y0, t))
            assert err.max() <= 1e-8


def test_pendulum_against_oracle():
    y0 = {"y1": 0.5, "y2": 0.3, "y3": 0.2, "y4": -0.4, "beta": 0.1}
    s = series(PEND_LOWER, 2)
    errors = []
    for t in (0.1, 0.05):
        exact = oracle.integrate(PEND_LOWER, y0, (0.0, t), tol=1e-12).final
        errors.append(np.max(np.abs(eval_series(s, y0, t) - exact)))
    # an O(t^3) remainder shrinks eightfold when t halves
    assert 6.5 < errors[0] / errors[1] < 9.5
    assert errors[0] < 1e-3


@pytest.mark.parametrize("field, order", [(OSC, 4), (PEND_LOWER, 2), (PEND_UPPER, 2),
                                          (VDP_ALPHA, 1), (VDP_ALPHA, 3)])
def test_equivalence(field, order):
    assert equivalence_check(field, order)


def test_equivalence_table_reports_every_entry():
    table = equivalence_table(PEND_LOWER, 2)
    assert len(table) == 8
    assert all(v is Equality.STRUCTURAL for _, _, v in table)


def test_equivalence_rejects_order_zero():
    with pytest.raises(ValueError):
        equivalence_check(OSC, 0)


@settings(max_examples=100, deadline=None)
@given(expressions, expressions)
def test_first_coefficient_is_field(g1, g2):
    field = VectorField(("x", "y"), (g1, g2))
    s = series(field, 1)
    assert s.coeffs[0][0] == Sym("x") and s.coeffs[1][0] == Sym("y")
    assert s.coeffs[0][1] == g1 and s.coeffs[1][1] == g2


def test_csv_round_trip():
    s = series(OSC, 10)
    y0 = {"y1": 1.0, "y2": 0.0, "y3": 0.5, "y4": -0.5, "w": 1.0}
    times = np.linspace(0, 1, 5)
    states = sample_series(s, y0, times)
    buf = io.StringIO()
    write_trajectory_csv(buf, OSC.vars, times, states)
    assert buf.getvalue().splitlines()[0] == "t,y1,y2,y3,y4"
    names, t2, s2 = read_trajectory_csv(buf.getvalue())
    assert names == list(OSC.vars)
    assert np.array_equal(t2, times) and np.array_equal(s2, states)


def test_field_validation():
    with pytest.raises(ValueError, match="components"):
        VectorField(("a", "b"), ("a",))
    with pytest.raises(ValueError, match="duplicate"):
        VectorField(("a", "a"), ("a", "a"))
    with pytest.raises(ValueError, match="unbound"):
        OSC.compile()
