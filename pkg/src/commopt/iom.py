"""Integrals of motion and the truncation-error gauge built on them.

An integral of motion here has an algebraic part ``A(x)`` and an integrand
``r(x)`` with ``dA/dt + r = 0`` along the flow, so
``A(x(t)) + int_0^t r(x(s)) ds`` stays at its initial value.  Evaluated on a
truncated series instead of the exact flow, the drift of that quantity
measures the truncation error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Mapping, Optional, Sequence

import numpy as np

from .expr import (
    Equality,
    Expr,
    Sym,
    as_expr,
    equal_canonical,
    free_symbols,
    integrate_polynomial,
    lambdify,
    simplify,
    substitute,
    to_text,
)
from .lieprop import LieSeries, SeriesEvaluator, VectorField, lie_derivative

QUAD_TOL = 1e-10


class QuadratureError(RuntimeError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class MotionIntegral:
    algebraic: Expr
    integrand: Expr
    name: str = "I"

    def __post_init__(self):
        object.__setattr__(self, "algebraic", as_expr(self.algebraic))
        object.__setattr__(self, "integrand", as_expr(self.integrand))

    def substitute(self, mapping: Mapping[str, object]) -> "MotionIntegral":
        return MotionIntegral(substitute(self.algebraic, mapping),
                              substitute(self.integrand, mapping), self.name)

    def __str__(self):
        return f"{self.name} = {to_text(self.algebraic)} + int({to_text(self.integrand)})"


def verify_iom(field: VectorField, m: MotionIntegral) -> Equality:
    """Whether ``L_g A + r`` vanishes (structurally or numerically); truthy on success."""
    return equal_canonical(lie_derivative(field, m.algebraic) + m.integrand, as_expr(0))


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = QUAD_TOL, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with interval bisection and absolute tolerance."""
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = (a + b) / 2
        lm, rm = (a + m) / 2, (m + b) / 2
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        diff = left + right - whole
        if abs(diff) <= 15 * tol:
            return left + right + diff / 15
        if depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not converge on [{a}, {b}]")
        return (rec(a, m, fa, flm, fm, left, tol / 2, depth + 1)
                + rec(m, b, fm, frm, fb, right, tol / 2, depth + 1))

    fa, fb, fm = f(a), f(b), f((a + b) / 2)
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 0)


class _Gauge:
    """Numeric pieces of ``Delta_N`` at a fixed initial point."""

    def __init__(self, m: MotionIntegral, s: LieSeries, y0: Mapping[str, float]):
        self.ev = SeriesEvaluator(s, y0)
        params = {k: float(v) for k, v in y0.items() if k not in s.vars}
        names = list(s.vars)
        a = substitute(m.algebraic, params)
        r = substitute(m.integrand, params)
        extra = (free_symbols(a) | free_symbols(r)) - set(names)
        if extra:
            from .expr import UnboundSymbolError

            raise UnboundSymbolError(sorted(extra)[0])
        self._a = lambdify([a], names)
        self._r = lambdify([r], names)
        self.initial = self._a(*[float(y0[v]) for v in names])[0]

    def algebraic(self, t: float) -> float:
        return self._a(*self.ev(t))[0]

    def integrand(self, t: float) -> float:
        return self._r(*self.ev(t))[0]


def error_estimate(m: MotionIntegral, s: LieSeries, y0: Mapping[str, float], t: float,
                   tol: float = QUAD_TOL) -> float:
    """``Delta_N(t) = A(Y_N(t)) + int_0^t r(Y_N) ds - A(Y_N(0))``."""
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    if t == 0:
        return 0.0
    g = _Gauge(m, s, y0)
    return g.algebraic(t) - g.initial + adaptive_simpson(g.integrand, 0.0, float(t), tol)


def error_curve(m: MotionIntegral, s: LieSeries, y0: Mapping[str, float],
                times: Sequence[float], tol: float = QUAD_TOL) -> np.ndarray:
    """``Delta_N`` at ascending ``times``; the quadrature accumulates piecewise."""
    times = [float(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])) or (times and times[0] < 0):
        raise DomainError("times must be ascending and non-negative")
    g = _Gauge(m, s, y0)
    out, acc, prev = [], 0.0, 0.0
    for t in times:
        acc += adaptive_simpson(g.integrand, prev, t, tol / max(len(times), 1))
        prev = t
        out.append(0.0 if t == 0 else g.algebraic(t) - g.initial + acc)
    return np.array(out)


def error_expr(m: MotionIntegral, s: LieSeries, t: str = "t") -> Expr:
    """Symbolic ``Delta_N(t)`` when the integrand is polynomial along the series."""
    along = {v: s.as_expr(j, t) for j, v in enumerate(s.vars)}
    a = substitute(m.algebraic, along) - m.algebraic
    r = substitute(m.integrand, along)
    return simplify(a + integrate_polynomial(r, t))


def drift(m: MotionIntegral, field: VectorField, y0: Mapping[str, float], t_end: float = 1.0,
          tol: float = 1e-12, samples: int = 101) -> float:
    """Largest deviation of the integral from its initial value along the oracle flow."""
    from . import oracle

    times = np.linspace(0.0, t_end, samples)
    traj = oracle.integrate(field, y0, (0.0, t_end), tol=tol, t_eval=times)
    params = {k: float(v) for k, v in y0.items() if k not in field.vars}
    names = list(field.vars)
    a = lambdify([substitute(m.algebraic, params)], names)
    r = lambdify([substitute(m.integrand, params)], names)
    values = np.array([a(*x)[0] for x in traj.states])
    rates = np.array([r(*x)[0] for x in traj.states])
    # cumulative Simpson on the uniform grid (pairs of panels, trapezoid for an odd tail)
    integral = np.zeros(len(times))
    h = times[1] - times[0]
    for i in range(1, len(times)):
        if i % 2 == 0:
            integral[i] = integral[i - 2] + h / 3 * (rates[i - 2] + 4 * rates[i - 1] + rates[i])
        else:
            integral[i] = integral[i - 1] + h / 2 * (rates[i - 1] + rates[i])
    return float(np.max(np.abs(values + integral - values[0])))


# --------------------------------------------------------------------------
# closed-form windows
# --------------------------------------------------------------------------

@dataclass
class Window:
    t_max: float
    method: str
    grid_max: Optional[float] = None
    grid_ok: Optional[bool] = None


def pendulum_window(x2: float, kappa: float) -> float:
    """Positive root of ``x2 t^2 / 2 + 4 t = kappa``."""
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    if not x2 > 0:
        raise DomainError(f"initial velocity x2 must be positive, got {x2}")
    return (-4 + math.sqrt(16 + 2 * x2 * kappa)) / x2


def cardan_coefficients(eps: float, x1: float, x2: float, kappa: float):
    """``A, B, p, q, Q`` for ``t^3 + A t^2 - B = 0`` and its depressed form."""
    A = (1.5 + 3 * abs(eps * x1 * x2)) / (abs(eps) * x2 ** 2)
    B = 3 * kappa / (abs(eps) * abs(x2) ** 3)
    p = -A ** 2 / 3
    q = 2 * A ** 3 / 27 - B
    Q = (p / 3) ** 3 + (q / 2) ** 2
    return A, B, p, q, Q


def vanderpol_window(eps: float, x1: float, x2: float, kappa: float):
    """Positive root of ``|eps| |x2|^3 t^3 / 3 + (|x2|/2 + |eps x1| x2^2) t^2 = kappa``.

    Returns ``(t_max, method)``.
    """
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    if eps == 0:
        raise DomainError("eps must be non-zero")
    if x2 == 0:
        raise DomainError("initial velocity x2 must be non-zero")
    A, B, p, q, Q = cardan_coefficients(eps, x1, x2, kappa)
    if Q >= 0:
        root = float(np.cbrt(-q / 2 + math.sqrt(Q)) + np.cbrt(-q / 2 - math.sqrt(Q))) - A / 3
        return root, "cardan-radical"
    r = math.sqrt(-p / 3)
    phi = math.acos(max(-1.0, min(1.0, (-q / 2) / r ** 3)))
    roots = [2 * r * math.cos((phi - 2 * math.pi * k) / 3) - A / 3 for k in range(3)]
    positive = [z for z in roots if z > 0]
    if not positive:
        raise DomainError("cubic has no positive root")
    return min(positive), "cardan-trig"


def bound_window(kind: str, params: Mapping[str, float], kappa: float,
                 check: bool = True, points: int = 100) -> Window:
    """Closed-form window on which the truncation error gauge stays below ``kappa``.

    ``kind`` is ``"pendulum"`` (order-2 series, integral ``I``) or
    ``"vanderpol"`` (order-1 series, integral ``J``).  ``params`` holds the
    initial state and parameters.  With ``check`` the gauge is evaluated on a
    ``points``-point grid of the window.
    """
    from . import problems

    if kind == "pendulum":
        t_max, method = pendulum_window(params["x2"], kappa), "quadratic"
        grid = np.linspace(0.0, t_max, points)
    elif kind == "vanderpol":
        t_max, method = vanderpol_window(params["eps"], params["x1"], params["x2"], kappa)
        # the bound is attained at the endpoint, so leave it out
        grid = np.linspace(0.0, t_max, points + 1)[:-1]
    else:
        raise DomainError(f"unknown window kind {kind!r}")
    out = Window(t_max, method)
    if check:
        m, s, y0 = problems.gauge_setup(kind, params)
        values = np.abs(error_curve(m, s, y0, grid))
        out.grid_max = float(values.max())
        out.grid_ok = bool(np.all(values < kappa))
    return out


__all__ = [
    "DomainError",
    "MotionIntegral",
    "QuadratureError",
    "Window",
    "adaptive_simpson",
    "bound_window",
    "cardan_coefficients",
    "drift",
    "error_curve",
    "error_estimate",
    "error_expr",
    "pendulum_window",
    "vanderpol_window",
    "verify_iom",
]
