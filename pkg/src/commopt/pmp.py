"""Pontryagin reduction of time-optimal problems with box-bounded scalar control.

The dynamics are affine in the control, so the maximum principle gives
bang-bang control: ``u = upper bound`` where the switching function (the
coefficient of ``u`` in the Hamilton-Pontryagin function) is positive and the
lower bound where it is negative.  Each constant-control branch yields an
autonomous state+adjoint field, which is what the series machinery consumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import oracle
from .expr import (
    ONE,
    ZERO,
    Expr,
    ExprError,
    Sym,
    as_expr,
    differentiate,
    evaluate,
    free_symbols,
    is_constant,
    is_zero,
    simplify,
    substitute,
    to_text,
)
from .lieprop import LieSeries, VectorField

Value = Union[float, Expr]


class ProblemError(ValueError):
    """Invalid control problem definition."""


class NotAffineError(ProblemError):
    pass


class DegenerateSystemError(ArithmeticError):
    """The elimination formula has a vanishing denominator."""


class HitTimeError(RuntimeError):
    """No admissible hit time; ``result`` holds whatever was computed."""

    def __init__(self, message: str, result: "HitTimeResult" = None):
        super().__init__(message)
        self.result = result


class AmbiguousSelectionError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    pass


def exact_number(v) -> Expr:
    """Numbers typed as decimals become the rational they spell."""
    if isinstance(v, Expr):
        return v
    if isinstance(v, str):
        return as_expr(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ProblemError(f"non-finite value {v!r}")
        return as_expr(Fraction(repr(v)))
    return as_expr(v)


@dataclass(frozen=True)
class ControlProblem:
    """``x' = f(x, u)``, ``x(0) = x0``, ``x(T) = target``, ``u in [lower, upper]``, minimize T.

    Bounds may be numbers or parameter names; parameter values live in
    ``params``.  The running cost is 1 and the cost multiplier is 1.
    """

    state_vars: Tuple[str, ...]
    dynamics: Tuple[Expr, ...]
    control: str = "u"
    bounds: Tuple[Expr, Expr] = (as_expr(-1), as_expr(1))
    x0: Mapping[str, float] = field(default_factory=dict)
    target: Tuple[float, ...] = ()
    params: Mapping[str, float] = field(default_factory=dict)
    running_cost: Expr = ONE
    psi0_weight: float = 1.0
    adjoint_vars: Tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("state_vars", tuple(self.state_vars))
        set_("dynamics", tuple(as_expr(f) for f in self.dynamics))
        set_("bounds", tuple(exact_number(b) for b in self.bounds))
        set_("running_cost", as_expr(self.running_cost))
        n = len(self.state_vars)
        if len(self.dynamics) != n:
            raise ProblemError(f"{n} state variables but {len(self.dynamics)} dynamics")
        if not self.target:
            set_("target", (0.0,) * n)
        set_("target", tuple(float(v) for v in self.target))
        if len(self.target) != n:
            raise ProblemError(f"target has {len(self.target)} entries, expected {n}")
        if not self.adjoint_vars:
            set_("adjoint_vars", tuple(f"psi{i + 1}" for i in range(n)))
        if len(self.adjoint_vars) != n:
            raise ProblemError("need one adjoint variable per state")
        clash = set(self.adjoint_vars) & (set(self.state_vars) | set(self.params) | {self.control})
        if clash:
            raise ProblemError(f"adjoint names clash with other symbols: {sorted(clash)}")
        if len(self.bounds) != 2:
            raise ProblemError("bounds must be [lower, upper]")
        lo, hi = self.bound_values()
        if lo is not None and hi is not None and not lo < hi:
            raise ProblemError(f"bounds must satisfy lower < upper, got [{lo}, {hi}]")
        if not self.psi0_weight > 0:
            raise ProblemError("cost multiplier must be positive")
        for i, f in enumerate(self.dynamics):
            if not is_zero(differentiate(differentiate(f, self.control), self.control)):
                raise NotAffineError(
                    f"dynamics component {i + 1} ({to_text(f)}) is not affine in {self.control}")

    @property
    def n(self) -> int:
        return len(self.state_vars)

    @property
    def all_vars(self) -> Tuple[str, ...]:
        return self.state_vars + self.adjoint_vars

    def bound_values(self) -> Tuple[Optional[float], Optional[float]]:
        out = []
        for b in self.bounds:
            try:
                out.append(evaluate(b, self.params))
            except ExprError:
                out.append(None)
        return out[0], out[1]


@dataclass(frozen=True)
class BangBranch:
    u_value: Expr
    augmented: VectorField
    label: str
    shift: Optional[Tuple[Expr, ...]] = None

    def state_field(self, n: int) -> VectorField:
        return VectorField(self.augmented.vars[:n], self.augmented.components[:n])


def hamilton_pontryagin(p: ControlProblem) -> Expr:
    """``eta = sum_i psi_i f_i - psi0 * f0`` with ``u`` left symbolic."""
    eta = -exact_number(p.psi0_weight) * p.running_cost
    for psi, f in zip(p.adjoint_vars, p.dynamics):
        eta = eta + Sym(psi) * f
    return eta


def switching_function(p: ControlProblem) -> Expr:
    return differentiate(hamilton_pontryagin(p), p.control)


def adjoint_field(p: ControlProblem, u_expr=None) -> List[Expr]:
    """``psi_i' = -d(eta)/d(x_i)``, with ``u`` replaced by ``u_expr`` when given."""
    eta = hamilton_pontryagin(p)
    if u_expr is not None:
        eta = substitute(eta, {p.control: u_expr})
    return [-differentiate(eta, x) for x in p.state_vars]


def assemble_augmented(p: ControlProblem, branch_or_u) -> VectorField:
    """State and adjoint right-hand sides under constant control."""
    u = branch_or_u.u_value if isinstance(branch_or_u, BangBranch) else exact_number(branch_or_u)
    state = [substitute(f, {p.control: u}) for f in p.dynamics]
    return VectorField(p.all_vars, state + adjoint_field(p, u))


def equilibrium_shift(p: ControlProblem, u) -> Optional[Tuple[Expr, ...]]:
    """Equilibrium of the state dynamics under constant ``u`` when they are linear in x.

    Returns None for nonlinear dynamics or a singular linear part.
    """
    u = exact_number(u)
    f = [substitute(fi, {p.control: u}) for fi in p.dynamics]
    xs = p.state_vars
    jac = [[differentiate(fi, x) for x in xs] for fi in f]
    if any(free_symbols(a) & set(xs) for row in jac for a in row):
        return None
    offset = [substitute(fi, {x: 0 for x in xs}) for fi in f]
    # Gaussian elimination on A x = -offset
    a = [row[:] + [-b] for row, b in zip(jac, offset)]
    n = len(xs)
    for col in range(n):
        pivot = next((r for r in range(col, n) if not is_zero(a[r][col])), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        for r in range(n):
            if r != col and not is_zero(a[r][col]):
                ratio = a[r][col] / a[col][col]
                a[r] = [x - ratio * y for x, y in zip(a[r], a[col])]
    return tuple(simplify(a[i][n] / a[i][i]) for i in range(n))


def bang_branches(p: ControlProblem) -> Tuple[List[BangBranch], Expr]:
    """The two constant-control branches (lower bound first) and the switching function."""
    branches = []
    for label, u in (("lower", p.bounds[0]), ("upper", p.bounds[1])):
        branches.append(BangBranch(u, assemble_augmented(p, u), label, equilibrium_shift(p, u)))
    return branches, switching_function(p)


def shifted_names(p: ControlProblem, shift: Optional[Sequence[Expr]]) -> List[str]:
    """Text of the shifted state variables ``x_i - x_i*`` (non-trivial shifts only)."""
    if not shift:
        return []
    return [to_text(Sym(x) - s) for x, s in zip(p.state_vars, shift) if not is_zero(s)]


# --------------------------------------------------------------------------
# hit times
# --------------------------------------------------------------------------

@dataclass
class HitTimeResult:
    T: Value
    residual: Tuple[Value, ...]
    method: str
    feasible: Optional[bool]
    label: str = ""
    u: Optional[Value] = None
    consistency: Optional[Value] = None
    notes: List[str] = field(default_factory=list)
    formula: Optional[str] = None

    def as_dict(self) -> Dict[str, object]:
        def conv(v):
            if isinstance(v, Expr):
                return to_text(v)
            if isinstance(v, (float, np.floating)):
                return float(v) if math.isfinite(v) else None
            return v

        return {
            "label": self.label,
            "u": conv(self.u),
            "T": conv(self.T),
            "residual": [conv(r) for r in self.residual],
            "method": self.method,
            "feasible": self.feasible,
            "consistency": conv(self.consistency),
            "notes": list(self.notes),
        }


def state_polynomials(s: LieSeries, n: int, target: Sequence[float] = None) -> List[List[Expr]]:
    """Coefficients (constant first) of the first ``n`` series components minus the target."""
    polys = []
    for j in range(n):
        coeffs = s.taylor_coeffs(j)
        if target is not None:
            coeffs[0] = coeffs[0] - exact_number(float(target[j]))
        while len(coeffs) > 1 and is_zero(coeffs[-1]):
            coeffs.pop()
        polys.append(coeffs)
    return polys


def _poly_at(coeffs: Sequence[Expr], t: Expr) -> Expr:
    out = ZERO
    for c in reversed(coeffs):
        out = out * t + c
    return out


def _pad(coeffs, n=3):
    coeffs = [as_expr(c) for c in coeffs]
    if len(coeffs) > n:
        extra = coeffs[n:]
        if not all(is_zero(c) for c in extra):
            raise ValueError(f"polynomial degree {len(coeffs) - 1} exceeds 2")
        coeffs = coeffs[:n]
    return coeffs + [ZERO] * (n - len(coeffs))


def hit_time_polynomial(
    first: Sequence,
    second: Sequence,
    window: Optional[Tuple[float, float]] = None,
    bindings: Optional[Mapping[str, float]] = None,
    tol: float = 1e-9,
) -> HitTimeResult:
    """Common root ``T`` of two polynomials of degree at most 2 (constant term first).

    With ``P_i = a_i + b_i T + c_i T^2`` the quadratic terms are eliminated:
    ``T = (a2 c1 - a1 c2) / (b1 c2 - b2 c1)``, and the pair has a common root
    only if ``a2 [(a1 c2 - a2 c1)^2 + (a2 b1 - a1 b2)(b1 c2 - b2 c1)]``
    vanishes.  For two linear polynomials ``T = -a2 / b2`` and the condition is
    ``a2 b1 - a1 b2 = 0``.

    The result is symbolic unless ``bindings`` is given or every coefficient is
    a number.
    """
    a1, b1, c1 = _pad(first)
    a2, b2, c2 = _pad(second)
    quadratic = not (is_zero(c1) and is_zero(c2))
    at_target = is_zero(a1) and is_zero(a2)
    if at_target:
        T, consistency = ZERO, ZERO
        den = ONE
    elif quadratic:
        num = a2 * c1 - a1 * c2
        den = b1 * c2 - b2 * c1
        consistency = a2 * ((a1 * c2 - a2 * c1) ** 2 + (a2 * b1 - a1 * b2) * (b1 * c2 - b2 * c1))
    else:
        num, den = -a2, b2
        if is_zero(den):
            num, den = -a1, b1
        consistency = a2 * b1 - a1 * b2
    if is_zero(den):
        raise DegenerateSystemError("elimination denominator vanishes identically")
    formula = "0"
    if not at_target:
        T = num / den
        formula = f"({to_text(num)})/({to_text(den)})"
    numeric = bindings is not None or all(
        is_constant(c) for c in (a1, b1, c1, a2, b2, c2))
    if not numeric:
        residual = (simplify(_poly_at((a1, b1, c1), T)), simplify(_poly_at((a2, b2, c2), T)))
        return HitTimeResult(T, residual, "common-root", None, consistency=consistency,
                             formula=formula)

    env = dict(bindings or {})
    if not at_target:
        den_v = evaluate(den, env)
        scale = max(abs(evaluate(x, env)) for x in (b1, b2, c1, c2)) or 1.0
        if abs(den_v) <= 1e-14 * scale * scale:
            raise DegenerateSystemError(
                f"elimination denominator {den_v:.3g} is numerically zero")
    T_v = evaluate(T, env)
    res = tuple(evaluate(a, env) + T_v * (evaluate(b, env) + T_v * evaluate(c, env))
                for a, b, c in ((a1, b1, c1), (a2, b2, c2)))
    cons_v = evaluate(consistency, env)
    lo, hi = window if window is not None else (0.0, math.inf)
    in_window = (T_v == 0 and at_target) or (T_v > 0 and lo <= T_v <= hi)
    feasible = in_window and max(abs(r) for r in res) <= tol
    result = HitTimeResult(T_v, res, "common-root", feasible, consistency=cons_v,
                           formula=formula)
    if not in_window:
        result.feasible = False
        raise HitTimeError(f"root T={T_v:.6g} is not a positive time in [{lo}, {hi}]", result)
    return result


def _golden_min(fn, lo: float, hi: float, xtol: float = 1e-13):
    inv = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fn(d)
    x = (a + b) / 2
    return x, fn(x)


def hit_time_numeric(
    field: VectorField,
    x0: Mapping[str, float],
    target: Sequence[float],
    window: Union[float, Tuple[float, float]],
    tol: float = 1e-8,
    samples: int = 4096,
    integration_tol: float = 1e-12,
) -> HitTimeResult:
    """First time in the window at which the oracle trajectory meets the target.

    The residual ``max_i |x_i(t) - target_i|`` is sampled on ``samples``
    intervals; each sampled local minimum, in time order, is refined by
    golden-section search until one falls within ``tol``.
    """
    t_lo, t_hi = (0.0, float(window)) if np.isscalar(window) else map(float, window)
    n = len(target)
    target = np.asarray(target, dtype=float)
    times = np.linspace(t_lo, t_hi, samples + 1)
    traj = oracle.integrate(field, x0, (times[0], times[-1]), tol=integration_tol, t_eval=times)
    resid = np.max(np.abs(traj.states[:, :n] - target), axis=1)
    if resid[0] <= tol:
        return HitTimeResult(float(times[0]), tuple(traj.states[0, :n] - target), "numeric", True)
    params = {k: v for k, v in x0.items() if k not in field.vars}

    def refine(i: int):
        left = max(i - 1, 0)
        start = dict(zip(field.vars, traj.states[left]))
        start.update(params)
        t_start = times[left]

        def r(t):
            if t == t_start:
                state = traj.states[left]
            else:
                state = oracle.integrate(field, start, (t_start, t), tol=integration_tol).final
            return float(np.max(np.abs(state[:n] - target))), state

        t_best, _ = _golden_min(lambda t: r(t)[0], t_start, times[min(i + 1, len(times) - 1)])
        value, state = r(t_best)
        return t_best, value, state

    for i in range(1, len(times)):
        last = i == len(times) - 1
        if resid[i] <= resid[i - 1] and (last or resid[i] <= resid[i + 1]):
            t_best, value, state = refine(i)
            if value <= tol:
                return HitTimeResult(t_best, tuple(state[:n] - target), "numeric", True)
    best = int(np.argmin(resid))
    result = HitTimeResult(float(times[best]), tuple(traj.states[best, :n] - target),
                           "numeric", False)
    raise HitTimeError(
        f"trajectory does not reach the target within tolerance {tol:g} on "
        f"[{t_lo:g}, {t_hi:g}] (closest approach {resid[best]:.3g})", result)


# --------------------------------------------------------------------------
# closed form for the linear oscillator
# --------------------------------------------------------------------------

@dataclass
class OscillatorTimes:
    """Candidate times for ``x1' = x2, x2' = -w^2 x1 + u`` with ``u = +1`` and ``u = -1``."""

    t_plus: float
    t_minus: float
    chosen: str
    T: float
    domain_ok: Dict[str, bool]
    residuals: Dict[str, Tuple[float, float]]
    warnings: List[str]

    def result(self, which: str, tol: float = 1e-8) -> HitTimeResult:
        T = self.t_plus if which == "plus" else self.t_minus
        res = self.residuals[which]
        feasible = T > 0 and max(abs(r) for r in res) <= tol
        notes = [] if self.domain_ok[which] else [f"domain inequality fails for u={'+' if which == 'plus' else '-'}1"]
        return HitTimeResult(T, res, "closed-form", feasible,
                             label="upper" if which == "plus" else "lower",
                             u=1.0 if which == "plus" else -1.0, notes=notes)


def _oscillator_state(omega: float, x1: float, x2: float, u: float, t: float) -> Tuple[float, float]:
    shifted = x1 - u / omega ** 2
    c, s = math.cos(omega * t), math.sin(omega * t)
    return (shifted * c + x2 / omega * s + u / omega ** 2,
            x2 * c - shifted * omega * s)


def oscillator_times(omega: float, x1: float, x2: float) -> OscillatorTimes:
    """Arctan hit times for both bang branches and the sign-of-velocity selection.

    ``t_plus`` (u = +1) solves ``tan(w T) = x2 / (w (x1 - 1/w^2))`` and
    ``t_minus`` (u = -1) the same with ``x1 + 1/w^2``.  The principal arctan
    value is shifted by pi when negative so that both times are positive.
    Positive initial velocity selects ``t_minus``, negative selects ``t_plus``.
    """
    if omega == 0:
        raise ProblemError("frequency must be non-zero")
    w = abs(omega)
    times, domain, residuals = {}, {}, {}
    warnings = []
    for which, u in (("plus", 1.0), ("minus", -1.0)):
        shifted = x1 - u / w ** 2
        ratio = x2 / (w * shifted) if shifted != 0 else math.copysign(math.inf, x2)
        theta = math.atan(ratio)
        if theta < 0:
            theta += math.pi
        T = theta / w
        times[which] = T
        domain[which] = x2 * shifted > 0
        if not domain[which]:
            warnings.append(
                f"u={'+' if u > 0 else '-'}1: x2*(x1 {'-' if u > 0 else '+'} 1/w^2) = "
                f"{x2 * shifted:.6g} is not positive")
        residuals[which] = _oscillator_state(w, x1, x2, u, T)
    if x2 == 0:
        raise AmbiguousSelectionError("selection rule is undefined for zero initial velocity")
    chosen = "minus" if x2 > 0 else "plus"
    return OscillatorTimes(times["plus"], times["minus"], chosen, times[chosen],
                           domain, residuals, warnings)


# --------------------------------------------------------------------------
# selection
# --------------------------------------------------------------------------

@dataclass
class OptimalTimeReport:
    selected: HitTimeResult
    table: List[HitTimeResult]

    def as_dict(self) -> Dict[str, object]:
        return {"selected": self.selected.label,
                "T": self.selected.as_dict()["T"],
                "table": [r.as_dict() for r in self.table]}


def optimal_time(results: Sequence[HitTimeResult]) -> OptimalTimeReport:
    """Minimum-time feasible branch; the table is sorted by label."""
    table = sorted(results, key=lambda r: (r.label, str(r.u)))
    feasible = [r for r in table if r.feasible]
    if not feasible:
        raise InfeasibleError("no feasible branch: " + ", ".join(
            f"{r.label or '?'} (T={r.T})" for r in table))
    best = min(feasible, key=lambda r: float(r.T))
    return OptimalTimeReport(best, table)


def smaller_quotient_rule(results: Sequence[HitTimeResult]) -> HitTimeResult:
    """Pick the branch with the smaller ``T`` value, ignoring sign and feasibility."""
    numeric = [r for r in results if not isinstance(r.T, Expr)]
    if not numeric:
        raise ValueError("rule needs numeric hit times")
    return min(sorted(numeric, key=lambda r: r.label), key=lambda r: float(r.T))
