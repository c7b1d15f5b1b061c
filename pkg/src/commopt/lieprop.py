"""Truncated series solutions of autonomous ODE systems.

For ``y' = g(y)`` the coefficient of ``t^k/k!`` in the solution is ``L^k y_j``
where ``L = sum_j g_j d/dy_j``.  The same coefficients come out of the operator
route as ``i^k [H, y_j]_k``; ``equivalence_check`` compares the two.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence, TextIO, Tuple

import numpy as np

from . import opalg
from .expr import (
    Equality,
    Expr,
    Sym,
    as_expr,
    differentiate,
    equal_canonical,
    free_symbols,
    from_coeffs,
    lambdify,
    substitute,
    to_text,
)

DEFAULT_ORDER = 8


@dataclass(frozen=True)
class VectorField:
    """Right-hand side ``g`` of ``y' = g(y)``; symbols outside ``vars`` are parameters."""

    vars: Tuple[str, ...]
    components: Tuple[Expr, ...]

    def __init__(self, vars: Sequence[str], components: Sequence):
        vars = tuple(vars)
        components = tuple(as_expr(c) for c in components)
        if len(vars) != len(components):
            raise ValueError(
                f"{len(vars)} variables but {len(components)} components")
        if len(set(vars)) != len(vars):
            raise ValueError(f"duplicate variable names in {vars}")
        object.__setattr__(self, "vars", vars)
        object.__setattr__(self, "components", components)

    @property
    def parameters(self) -> Tuple[str, ...]:
        names = set()
        for c in self.components:
            names |= free_symbols(c)
        return tuple(sorted(names - set(self.vars)))

    def substitute(self, mapping: Mapping[str, object]) -> "VectorField":
        return VectorField(self.vars, [substitute(c, mapping) for c in self.components])

    def compile(self, backend: str = "math", parameters: Mapping[str, float] = None):
        """Return ``f(state_sequence) -> tuple`` with parameters bound."""
        field = self.substitute(dict(parameters)) if parameters else self
        missing = set(field.parameters)
        if missing:
            raise ValueError(f"unbound parameters {sorted(missing)}")
        fn = lambdify(field.components, field.vars, backend=backend)
        return lambda y: fn(*y)

    def __str__(self):
        return "\n".join(f"d{v}/dt = {to_text(c)}" for v, c in zip(self.vars, self.components))


def lie_derivative(g: VectorField, phi) -> Expr:
    """``sum_j g_j * d(phi)/d(y_j)``."""
    phi = as_expr(phi)
    names = free_symbols(phi)
    total = as_expr(0)
    for var, comp in zip(g.vars, g.components):
        if var in names:
            total = total + comp * differentiate(phi, var)
    return total


@dataclass(frozen=True)
class LieSeries:
    """``Y_N,j(t) = sum_k coeffs[j][k] t^k / k!`` for each variable ``j``."""

    field: VectorField
    order: int
    coeffs: Tuple[Tuple[Expr, ...], ...]

    @property
    def vars(self) -> Tuple[str, ...]:
        return self.field.vars

    def component(self, j) -> Tuple[Expr, ...]:
        if isinstance(j, str):
            j = self.vars.index(j)
        return self.coeffs[j]

    def taylor_coeffs(self, j) -> List[Expr]:
        """Polynomial coefficients in ``t`` (constant first), i.e. ``c_k / k!``."""
        return [c * Fraction(1, math.factorial(k)) for k, c in enumerate(self.component(j))]

    def as_expr(self, j, t: str = "t") -> Expr:
        if t in self.vars or t in self.field.parameters:
            raise ValueError(f"time symbol {t!r} clashes with a field symbol")
        return from_coeffs(self.taylor_coeffs(j), t)

    def truncate(self, order: int) -> "LieSeries":
        if order > self.order:
            raise ValueError(f"cannot extend a series of order {self.order} to {order}")
        return LieSeries(self.field, order, tuple(c[:order + 1] for c in self.coeffs))


def series(g: VectorField, order: int = DEFAULT_ORDER) -> LieSeries:
    """Build the order-``order`` series by iterated Lie derivatives."""
    if order < 0:
        raise ValueError("series order must be non-negative")
    coeffs = []
    for var in g.vars:
        column = [as_expr(Sym(var))]
        for _ in range(order):
            column.append(lie_derivative(g, column[-1]))
        coeffs.append(tuple(column))
    return LieSeries(g, order, tuple(coeffs))


class SeriesEvaluator:
    """Numeric evaluation of a series at a fixed initial point.

    Coefficients are evaluated once; each time sample is then a polynomial
    evaluation.
    """

    def __init__(self, s: LieSeries, y0: Mapping[str, float], backend: str = "math"):
        names = list(s.vars) + list(s.field.parameters)
        missing = [n for n in names if n not in y0]
        if missing:
            from .expr import UnboundSymbolError

            raise UnboundSymbolError(missing[0])
        flat = [c for column in s.coeffs for c in column]
        fn = lambdify(flat, names, backend=backend)
        if backend == "mpmath":
            import mpmath

            values = fn(*[mpmath.mpf(y0[n]) for n in names])
            self._fact = [mpmath.factorial(k) for k in range(s.order + 1)]
        else:
            values = fn(*[float(y0[n]) for n in names])
            self._fact = [float(math.factorial(k)) for k in range(s.order + 1)]
        width = s.order + 1
        self.series = s
        self.values = [list(values[i * width:(i + 1) * width]) for i in range(len(s.vars))]
        self.taylor = [[v / f for v, f in zip(col, self._fact)] for col in self.values]

    def __call__(self, t):
        out = []
        for col in self.taylor:
            acc = col[-1] * 0
            for c in reversed(col):
                acc = acc * t + c
            out.append(acc)
        return out


def eval_series(s: LieSeries, y0: Mapping[str, float], t: float) -> np.ndarray:
    """``Y_N(t)`` evaluated at the initial point/parameters ``y0``."""
    return np.array(SeriesEvaluator(s, y0)(t), dtype=float)


def commutator_coefficients(g: VectorField, order: int) -> List[List[opalg.OperatorPoly]]:
    """``[H, y_j]_k`` for every variable and ``k = 0..order`` (operator route)."""
    h = opalg.build_hamiltonian(g)
    table = []
    for var in g.vars:
        column = [opalg.OperatorPoly.position(Sym(var))]
        for _ in range(order):
            column.append(opalg.commutator(h, column[-1]))
        table.append(column)
    return table


def equivalence_check(g: VectorField, order: int, hamiltonian: opalg.OperatorPoly = None,
                      report: list = None) -> bool:
    """Compare ``i^k [H, y_j]_k`` with the derivation coefficients for ``k <= order``.

    ``report`` (if given) receives ``(var, k, Equality)`` for every comparison.
    """
    if order < 1:
        raise ValueError("equivalence order must be at least 1")
    h = opalg.build_hamiltonian(g) if hamiltonian is None else hamiltonian
    derived = series(g, order)
    ok = True
    for j, var in enumerate(g.vars):
        current = opalg.OperatorPoly.position(Sym(var))
        for k in range(1, order + 1):
            current = opalg.commutator(h, current)
            pos = opalg.position_part(current.times_i_power(k))
            verdict = equal_canonical(pos, derived.coeffs[j][k])
            if report is not None:
                report.append((var, k, verdict))
            ok = ok and bool(verdict)
    return ok


def write_trajectory_csv(out: TextIO, names: Sequence[str], times: Sequence[float],
                         states: Sequence[Sequence[float]]) -> None:
    """CSV with a ``t`` column followed by one column per variable."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["t", *names])
    for t, state in zip(times, states):
        writer.writerow([repr(float(t)), *(repr(float(v)) for v in state)])


def read_trajectory_csv(text: str) -> Tuple[List[str], np.ndarray, np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "t":
        raise ValueError("trajectory CSV must start with a 't' column")
    data = np.array([[float(x) for x in row] for row in body], dtype=float).reshape(-1, len(header))
    return header[1:], data[:, 0], data[:, 1:]


def sample_series(s: LieSeries, y0: Mapping[str, float], times: Sequence[float]) -> np.ndarray:
    ev = SeriesEvaluator(s, y0)
    return np.array([ev(t) for t in times], dtype=float)


def equivalence_table(g: VectorField, order: int) -> List[Tuple[str, int, Equality]]:
    report: list = []
    equivalence_check(g, order, report=report)
    return report


__all__ = [
    "DEFAULT_ORDER",
    "LieSeries",
    "SeriesEvaluator",
    "VectorField",
    "commutator_coefficients",
    "equivalence_check",
    "equivalence_table",
    "eval_series",
    "lie_derivative",
    "read_trajectory_csv",
    "sample_series",
    "series",
    "write_trajectory_csv",
]
