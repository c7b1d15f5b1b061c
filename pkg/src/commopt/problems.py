"""Problem-definition files and the bundled examples.

A problem file is YAML with the keys ``name``, ``state_vars``, ``dynamics``,
``control``, ``bounds``, ``x0``, ``target``, ``params`` and ``options``.
Dynamics are expression strings; bounds are numbers or parameter names.
Recognised options: ``kind`` (oscillator, pendulum, vanderpol or generic),
``order``, ``window``, ``tol``, ``kappa``, ``psi0`` (adjoint initial values,
used only when reporting trajectories) and ``integral`` (``name``,
``algebraic``, ``integrand``).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Dict, List, Mapping, Optional, Tuple

import yaml

from .expr import ExprError, parse, substitute
from .iom import MotionIntegral
from .lieprop import LieSeries, VectorField, series
from .pmp import ControlProblem

TOP_KEYS = {"name", "state_vars", "dynamics", "control", "bounds", "x0", "target", "params",
            "options"}
REQUIRED = {"state_vars", "dynamics", "bounds", "x0"}
OPTION_KEYS = {"kind", "order", "window", "tol", "kappa", "psi0", "integral"}
INTEGRAL_KEYS = {"name", "algebraic", "integrand"}
KINDS = {"oscillator", "pendulum", "vanderpol", "generic"}
BUNDLED = ("oscillator", "pendulum", "vanderpol")
ALIASES = {"vdp": "vanderpol"}


class ProblemFileError(ValueError):
    """Malformed problem file; the message names the offending key or value."""


@dataclass
class Options:
    kind: str = "generic"
    order: int = 8
    window: float = 10.0
    tol: float = 1e-8
    kappa: Optional[float] = None
    psi0: Optional[Tuple[float, ...]] = None
    integral: Optional[MotionIntegral] = None


@dataclass
class ProblemSpec:
    problem: ControlProblem
    options: Options = field(default_factory=Options)
    source: str = ""

    @property
    def name(self) -> str:
        return self.problem.name

    def initial_state(self, with_adjoint: bool = False) -> Dict[str, float]:
        """Initial state plus parameter values (and adjoints when available)."""
        p = self.problem
        y0 = {k: float(p.x0[k]) for k in p.state_vars}
        y0.update({k: float(v) for k, v in p.params.items()})
        if with_adjoint:
            if self.options.psi0 is None:
                raise ProblemFileError("options.psi0 is needed for adjoint trajectories")
            y0.update(zip(p.adjoint_vars, self.options.psi0))
        return y0


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFileError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _expr(text, where: str):
    if not isinstance(text, (str, int, float)) or isinstance(text, bool):
        raise ProblemFileError(f"{where}: expected an expression string, got {text!r}")
    try:
        return parse(str(text))
    except ExprError as exc:
        raise ProblemFileError(f"{where}: {exc}") from exc


def _mapping(value, where: str) -> Mapping:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise ProblemFileError(f"{where}: expected a mapping, got {value!r}")
    return value


def _list(value, where: str) -> List:
    if not isinstance(value, (list, tuple)):
        raise ProblemFileError(f"{where}: expected a list, got {value!r}")
    return list(value)


def _options(raw: Mapping, n: int) -> Options:
    unknown = set(raw) - OPTION_KEYS
    if unknown:
        raise ProblemFileError(f"options: unknown keys {sorted(unknown)}")
    opts = Options()
    if "kind" in raw:
        if raw["kind"] not in KINDS:
            raise ProblemFileError(f"options.kind: expected one of {sorted(KINDS)}, got {raw['kind']!r}")
        opts.kind = raw["kind"]
    if "order" in raw:
        order = raw["order"]
        if isinstance(order, bool) or not isinstance(order, int) or order < 0:
            raise ProblemFileError(f"options.order: expected a non-negative integer, got {order!r}")
        opts.order = order
    for key in ("window", "tol", "kappa"):
        if key in raw:
            value = _number(raw[key], f"options.{key}")
            if not value > 0:
                raise ProblemFileError(f"options.{key}: must be positive, got {value}")
            setattr(opts, key, value)
    if "psi0" in raw:
        psi0 = _list(raw["psi0"], "options.psi0")
        if len(psi0) != n:
            raise ProblemFileError(f"options.psi0: expected {n} values, got {len(psi0)}")
        opts.psi0 = tuple(_number(v, "options.psi0") for v in psi0)
    if "integral" in raw:
        spec = _mapping(raw["integral"], "options.integral")
        unknown = set(spec) - INTEGRAL_KEYS
        if unknown:
            raise ProblemFileError(f"options.integral: unknown keys {sorted(unknown)}")
        for key in ("algebraic", "integrand"):
            if key not in spec:
                raise ProblemFileError(f"options.integral: missing key {key!r}")
        opts.integral = MotionIntegral(_expr(spec["algebraic"], "options.integral.algebraic"),
                                       _expr(spec["integrand"], "options.integral.integrand"),
                                       str(spec.get("name", "I")))
    return opts


def problem_from_dict(data: Any, source: str = "") -> ProblemSpec:
    """Validate a parsed problem document and build the problem."""
    from .pmp import ProblemError

    if not isinstance(data, Mapping):
        raise ProblemFileError("problem file must be a mapping at top level")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ProblemFileError(f"unknown keys {sorted(unknown)}")
    missing = REQUIRED - set(data)
    if missing:
        raise ProblemFileError(f"missing keys {sorted(missing)}")
    state_vars = [str(v) for v in _list(data["state_vars"], "state_vars")]
    dynamics = [_expr(f, f"dynamics[{i}]") for i, f in enumerate(_list(data["dynamics"], "dynamics"))]
    bounds = _list(data["bounds"], "bounds")
    if len(bounds) != 2:
        raise ProblemFileError(f"bounds: expected [lower, upper], got {bounds!r}")
    bounds = [b if isinstance(b, str) else _number(b, "bounds") for b in bounds]
    bounds = [_expr(b, "bounds") if isinstance(b, str) else b for b in bounds]
    x0 = {str(k): _number(v, f"x0.{k}") for k, v in _mapping(data["x0"], "x0").items()}
    if set(x0) != set(state_vars):
        raise ProblemFileError(f"x0: expected values for {state_vars}, got {sorted(x0)}")
    params = {str(k): _number(v, f"params.{k}") for k, v in _mapping(data.get("params"), "params").items()}
    target = [_number(v, "target") for v in _list(data.get("target", [0.0] * len(state_vars)), "target")]
    control = str(data.get("control", "u"))
    options = _options(_mapping(data.get("options"), "options"), len(state_vars))
    try:
        problem = ControlProblem(
            state_vars=tuple(state_vars),
            dynamics=tuple(dynamics),
            control=control,
            bounds=tuple(bounds),
            x0=x0,
            target=tuple(target),
            params=params,
            name=str(data.get("name", "")),
        )
    except ProblemError:
        raise
    except (ValueError, ExprError) as exc:
        raise ProblemFileError(str(exc)) from exc
    return ProblemSpec(problem, options, source)


def loads(text: str, source: str = "<string>") -> ProblemSpec:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ProblemFileError(f"{source}: invalid YAML: {exc}") from exc
    return problem_from_dict(data, source)


def bundled_path(name: str) -> str:
    return str(resources.files("commopt") / "data" / f"{name}.prob")


def load(path_or_name: str) -> ProblemSpec:
    """Load a problem file, or a bundled problem by name (``oscillator.prob`` works too)."""
    if os.path.exists(path_or_name):
        with open(path_or_name, encoding="utf-8") as fh:
            return loads(fh.read(), path_or_name)
    stem = os.path.basename(path_or_name)
    stem = stem[:-5] if stem.endswith(".prob") else stem
    stem = ALIASES.get(stem, stem)
    if stem in BUNDLED and os.sep not in path_or_name:
        with open(bundled_path(stem), encoding="utf-8") as fh:
            return loads(fh.read(), f"{stem}.prob")
    raise FileNotFoundError(f"problem file not found: {path_or_name}")


def oscillator() -> ProblemSpec:
    return load("oscillator")


def pendulum() -> ProblemSpec:
    return load("pendulum")


def vanderpol() -> ProblemSpec:
    return load("vanderpol")


def gauge_setup(kind: str, values: Mapping[str, float]) -> Tuple[MotionIntegral, LieSeries, Dict[str, float]]:
    """Integral, state series and bindings for the built-in error gauges.

    ``values`` holds the initial state and parameters; the control defaults to
    ``u = -1`` for the pendulum and ``u = 0`` for Van der Pol (whose order-1
    gauge does not depend on it).
    """
    spec = load(kind)
    p = spec.problem
    y0 = {**{k: float(v) for k, v in p.params.items()}, **{k: float(v) for k, v in values.items()}}
    u = float(values.get(p.control, -1.0 if kind == "pendulum" else 0.0))
    field_ = VectorField(p.state_vars, [substitute(f, {p.control: u}) for f in p.dynamics])
    m = spec.options.integral.substitute({p.control: u})
    y0.pop(p.control, None)
    return m, series(field_, spec.options.order), y0


__all__ = [
    "BUNDLED",
    "Options",
    "ProblemFileError",
    "ProblemSpec",
    "bundled_path",
    "gauge_setup",
    "load",
    "loads",
    "oscillator",
    "pendulum",
    "problem_from_dict",
    "vanderpol",
]
