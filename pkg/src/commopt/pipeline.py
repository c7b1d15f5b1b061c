"""Report builders behind the command-line subcommands.

Every function returns plain JSON-ready data (dicts, lists, strings, floats,
None) with deterministic ordering.
"""
from __future__ import annotations

import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import iom, opalg, oracle, pmp
from .expr import Expr, ExprError, Sym, evaluate, to_text
from .lieprop import DEFAULT_ORDER, SeriesEvaluator, equivalence_table, series
from .problems import ProblemSpec


class BranchSelectionError(ValueError):
    pass


def _num(v) -> Optional[float]:
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _u_value(spec: ProblemSpec, u: Expr) -> float:
    return evaluate(u, spec.problem.params)


def select_branches(spec: ProblemSpec, which: Optional[str] = None) -> List[pmp.BangBranch]:
    """Branches matching ``which``: a label, a bound name, a bound value, or None for all."""
    branches, _ = pmp.bang_branches(spec.problem)
    if which is None or which == "all":
        return branches
    for b in branches:
        if which == b.label or which == to_text(b.u_value):
            return [b]
    try:
        value = float(which)
    except ValueError:
        value = None
    if value is not None:
        for b in branches:
            if _u_value(spec, b.u_value) == value:
                return [b]
    choices = ", ".join([b.label for b in branches] + [to_text(b.u_value) for b in branches])
    raise BranchSelectionError(f"--u {which!r} matches no branch (choose from {choices})")


def _order(spec: ProblemSpec, order: Optional[int]) -> int:
    if order is None:
        return spec.options.order
    if order < 0:
        raise BranchSelectionError(f"--order must be non-negative, got {order}")
    return order


# --------------------------------------------------------------------------
# hit times and the full pipeline
# --------------------------------------------------------------------------

def _numeric_check(spec: ProblemSpec, branch: pmp.BangBranch, window: float) -> Dict:
    p = spec.problem
    field = branch.state_field(p.n)
    try:
        r = pmp.hit_time_numeric(field, spec.initial_state(), p.target, window, tol=spec.options.tol)
        return {"T": _num(r.T), "found": True}
    except pmp.HitTimeError as exc:
        return {"T": None, "found": False, "message": str(exc)}


def polynomial_hit(spec: ProblemSpec, branch: pmp.BangBranch, order: int,
                   window: float) -> pmp.HitTimeResult:
    """Common root of the truncated state series; symbolic and numeric parts combined."""
    p = spec.problem
    s = series(branch.state_field(p.n), order)
    polys = pmp.state_polynomials(s, p.n, p.target)
    symbolic = pmp.hit_time_polynomial(*polys)
    env = spec.initial_state()
    try:
        result = pmp.hit_time_polynomial(*polys, window=(0.0, window), bindings=env,
                                         tol=spec.options.tol)
    except pmp.HitTimeError as exc:
        result = exc.result
        result.notes.append(str(exc))
    except pmp.DegenerateSystemError as exc:
        result = pmp.HitTimeResult(math.nan, (math.nan,) * p.n, "common-root", False,
                                   notes=[str(exc)])
    result.notes.insert(0, f"T = {symbolic.formula}")
    result.notes.insert(1, f"consistency = {to_text(symbolic.consistency)}")
    return result


def hit_results(spec: ProblemSpec, order: Optional[int] = None,
                window: Optional[float] = None) -> List[pmp.HitTimeResult]:
    p = spec.problem
    order = _order(spec, order)
    window = window or spec.options.window
    branches, _ = pmp.bang_branches(p)
    if spec.options.kind == "oscillator":
        w = evaluate(Sym("w"), p.params)
        osc = pmp.oscillator_times(w, p.x0[p.state_vars[0]], p.x0[p.state_vars[1]])
        out = []
        for b in branches:
            which = "plus" if _u_value(spec, b.u_value) > 0 else "minus"
            r = osc.result(which, spec.options.tol)
            r.label, r.u = b.label, _u_value(spec, b.u_value)
            out.append(r)
        return out
    out = []
    for b in branches:
        if order <= 2:
            r = polynomial_hit(spec, b, order, window)
        else:
            try:
                r = pmp.hit_time_numeric(b.state_field(p.n), spec.initial_state(), p.target,
                                         window, tol=spec.options.tol)
            except pmp.HitTimeError as exc:
                r = exc.result
                r.notes.append(str(exc))
        r.label, r.u = b.label, _u_value(spec, b.u_value)
        out.append(r)
    return out


def _oscillator_section(spec: ProblemSpec) -> Dict:
    p = spec.problem
    w = evaluate(Sym("w"), p.params)
    osc = pmp.oscillator_times(w, p.x0[p.state_vars[0]], p.x0[p.state_vars[1]])
    return {
        "t_plus": osc.t_plus,
        "t_minus": osc.t_minus,
        "t_plus_formula": "arctan(x2/(w*(x1 - 1/w^2)))/w",
        "t_minus_formula": "arctan(x2/(w*(x1 + 1/w^2)))/w",
        "rule": "x2 > 0 selects t_minus, x2 < 0 selects t_plus",
        "chosen": osc.chosen,
        "T": osc.T,
        "domain_ok": dict(sorted(osc.domain_ok.items())),
        "warnings": list(osc.warnings),
    }


def time_optimal_report(spec: ProblemSpec, order: Optional[int] = None,
                        window: Optional[float] = None) -> Dict:
    """Branch table and selection; raises ``pmp.InfeasibleError`` when nothing is feasible."""
    results = hit_results(spec, order, window)
    report: Dict = {"problem": spec.name, "table": [r.as_dict() for r in
                                                    sorted(results, key=lambda r: r.label)]}
    chosen = pmp.optimal_time(results)
    report["selected"] = chosen.selected.label
    report["T"] = _num(chosen.selected.T)
    try:
        rule = pmp.smaller_quotient_rule(results)
        report["smaller_T_rule"] = {"label": rule.label,
                                    "agrees": rule.label == chosen.selected.label}
    except ValueError:
        report["smaller_T_rule"] = None
    if spec.options.kind == "oscillator":
        osc = _oscillator_section(spec)
        report["oscillator"] = osc
        label = "upper" if osc["chosen"] == "plus" else "lower"
        report["sign_rule_agrees"] = label == chosen.selected.label
    return report


def solve_report(spec: ProblemSpec, order: Optional[int] = None, window: Optional[float] = None,
                 kappa: Optional[float] = None) -> Dict:
    """Branches, series, hit times, optimal time and the error gauge."""
    p = spec.problem
    order = _order(spec, order)
    window = window or spec.options.window
    kappa = kappa or spec.options.kappa
    branches, switching = pmp.bang_branches(p)
    report: Dict = {
        "problem": spec.name,
        "kind": spec.options.kind,
        "order": order,
        "hamilton_pontryagin": to_text(pmp.hamilton_pontryagin(p)),
        "switching_function": to_text(switching),
        "branches": [],
    }
    for b in branches:
        entry = {
            "label": b.label,
            "u": to_text(b.u_value),
            "field": [to_text(c) for c in b.augmented.components],
            "shifted_vars": pmp.shifted_names(p, b.shift),
        }
        if spec.options.kind != "oscillator" and order <= 2:
            entry["numeric_check"] = _numeric_check(spec, b, window)
        report["branches"].append(entry)
    optimal = time_optimal_report(spec, order, window)
    report.update({k: optimal[k] for k in optimal if k != "problem"})
    m = spec.options.integral
    if m is not None:
        best = next(b for b in branches if b.label == optimal["selected"])
        s = series(best.state_field(p.n), order)
        gauge = m.substitute({p.control: best.u_value})
        err: Dict = {"integral": str(m), "T": optimal["T"],
                     "delta_at_T": iom.error_estimate(gauge, s, spec.initial_state(), optimal["T"])}
        if kappa and spec.options.kind in ("pendulum", "vanderpol"):
            values = {**spec.initial_state(), p.control: _u_value(spec, best.u_value)}
            try:
                wdw = iom.bound_window(spec.options.kind, values, kappa)
                err["kappa"] = kappa
                err["window"] = {"t_max": wdw.t_max, "method": wdw.method,
                                 "grid_max": wdw.grid_max, "grid_ok": wdw.grid_ok}
            except iom.DomainError as exc:
                err["window"] = {"error": str(exc)}
        report["error"] = err
    return report


# --------------------------------------------------------------------------
# other subcommands
# --------------------------------------------------------------------------

def commutator_report(spec: ProblemSpec, order: int = 4, which: Optional[str] = None) -> Dict:
    """``[H, y_j]_k`` for ``k = 0..order`` on each selected branch."""
    out = {}
    for b in select_branches(spec, which):
        h = opalg.build_hamiltonian(b.augmented)
        columns = {}
        for var in b.augmented.vars:
            current = opalg.OperatorPoly.position(Sym(var))
            column = [opalg.to_text_op(current)]
            for _ in range(order):
                current = opalg.commutator(h, current)
                column.append(opalg.to_text_op(current))
            columns[var] = column
        out[b.label] = {"u": to_text(b.u_value), "hamiltonian": opalg.to_text_op(h),
                        "commutators": columns}
    return {"problem": spec.name, "order": order, "branches": out}


def _trajectory_vars(spec: ProblemSpec, b: pmp.BangBranch):
    if spec.options.psi0 is not None:
        return b.augmented, spec.initial_state(with_adjoint=True)
    return b.state_field(spec.problem.n), spec.initial_state()


def series_report(spec: ProblemSpec, order: Optional[int] = None, which: Optional[str] = None,
                  t: Optional[float] = None, samples: int = 11) -> Dict:
    """Series coefficients per branch, plus samples on ``[0, t]`` when ``t`` is given."""
    order = _order(spec, order)
    out = {}
    for b in select_branches(spec, which):
        field, y0 = _trajectory_vars(spec, b)
        s = series(field, order)
        entry = {"u": to_text(b.u_value),
                 "series": {v: to_text(s.as_expr(j)) for j, v in enumerate(s.vars)}}
        if t is not None:
            ev = SeriesEvaluator(s, y0)
            times = np.linspace(0.0, t, samples)
            entry["vars"] = list(s.vars)
            entry["samples"] = [[float(tt), *map(float, ev(tt))] for tt in times]
        out[b.label] = entry
    return {"problem": spec.name, "order": order, "branches": out}


def _bound(kind: str, y0: Dict[str, float], t: float) -> Optional[float]:
    if kind == "pendulum":
        return t * t * y0["x2"] / 2 + 4 * t
    if kind == "vanderpol":
        eps, x1, x2 = abs(y0["eps"]), abs(y0["x1"]), abs(y0["x2"])
        return eps * x2 ** 3 * t ** 3 / 3 + (x2 / 2 + eps * x1 * x2 ** 2) * t ** 2
    return None


def error_report(spec: ProblemSpec, order: Optional[int] = None, which: Optional[str] = None,
                 t_end: Optional[float] = None, kappa: Optional[float] = None,
                 samples: int = 101) -> Dict:
    """``Delta_N`` on a grid for one branch (the lower one unless ``which`` says otherwise)."""
    p = spec.problem
    m = spec.options.integral
    if m is None:
        raise iom.DomainError(f"problem {spec.name!r} defines no integral of motion")
    order = _order(spec, order)
    kappa = kappa or spec.options.kappa
    b = select_branches(spec, which or "lower")[0]
    y0 = spec.initial_state()
    report: Dict = {"problem": spec.name, "branch": b.label, "order": order,
                    "integral": str(m)}
    if kappa and spec.options.kind in ("pendulum", "vanderpol"):
        wdw = iom.bound_window(spec.options.kind, {**y0, p.control: _u_value(spec, b.u_value)},
                               kappa)
        report["kappa"] = kappa
        report["window"] = {"t_max": wdw.t_max, "method": wdw.method,
                            "grid_max": wdw.grid_max, "grid_ok": wdw.grid_ok}
        t_end = t_end or wdw.t_max
    t_end = t_end or spec.options.window
    s = series(b.state_field(p.n), order)
    times = np.linspace(0.0, t_end, samples)
    deltas = iom.error_curve(m.substitute({p.control: b.u_value}), s, y0, times)
    report["rows"] = [[float(t), float(d), _bound(spec.options.kind, y0, float(t))]
                      for t, d in zip(times, deltas)]
    return report


def convergence_report(spec: ProblemSpec, orders: Sequence[int], which: Optional[str] = None) -> Dict:
    out = {}
    for b in select_branches(spec, which or "lower"):
        field, y0 = _trajectory_vars(spec, b)
        rows = []
        for n in orders:
            try:
                res = oracle.convergence_order(field, y0, n)
                rows.append({"order": n, "slope": res.slope, "expected": n + 1})
            except oracle.NoiseFloorError as exc:
                rows.append({"order": n, "slope": None, "expected": n + 1, "message": str(exc)})
        out[b.label] = rows
    return {"problem": spec.name, "branches": out}


def verify_report(spec: ProblemSpec, order: Optional[int] = None) -> Dict:
    """Operator/derivation equivalence and integral-of-motion checks per branch."""
    p = spec.problem
    order = max(_order(spec, order), 1)
    out = {}
    ok = True
    for b in select_branches(spec):
        table = equivalence_table(b.augmented, order)
        eq_ok = all(bool(v) for _, _, v in table)
        entry = {"equivalence": eq_ok, "order": order,
                 "verdicts": [[var, k, v.value] for var, k, v in table]}
        if spec.options.integral is not None:
            m = spec.options.integral.substitute({p.control: b.u_value})
            verdict = iom.verify_iom(b.augmented, m)
            entry["integral"] = {"name": m.name, "holds": bool(verdict), "verdict": verdict.value}
            ok = ok and bool(verdict)
        ok = ok and eq_ok
        out[b.label] = entry
    return {"problem": spec.name, "ok": ok, "branches": out}
