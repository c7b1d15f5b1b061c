"""Reference integrator: classical RK4 with step-doubling error control.

Used as the independent check on every truncated series.  The same code runs
in IEEE doubles or, through ``dps``, in mpmath arbitrary precision; the latter
is what makes truncation errors of order 1e-17 measurable.
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from typing import Callable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .lieprop import LieSeries, SeriesEvaluator, VectorField, series


class IntegrationError(RuntimeError):
    pass


class NoiseFloorError(RuntimeError):
    """Truncation error is below what the oracle can resolve; no slope exists."""

    def __init__(self, message: str, errors):
        super().__init__(message)
        self.errors = errors


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    tol: float
    steps: int

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f([a + h / 2 * b for a, b in zip(y, k1)])
    k3 = f([a + h / 2 * b for a, b in zip(y, k2)])
    k4 = f([a + h * b for a, b in zip(y, k3)])
    return [a + h / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(y, k1, k2, k3, k4)]


def _finite(values, use_mp: bool) -> bool:
    if use_mp:
        import mpmath

        return all(mpmath.isfinite(v) for v in values)
    return all(math.isfinite(v) for v in values)


def _initial_state(field: VectorField, y0) -> List[float]:
    if isinstance(y0, Mapping):
        return [y0[v] for v in field.vars]
    state = list(y0)
    if len(state) != len(field.vars):
        raise ValueError(f"expected {len(field.vars)} initial values, got {len(state)}")
    return state


def integrate(
    field: VectorField,
    y0,
    t_span: Tuple[float, float],
    tol: float = 1e-12,
    params: Optional[Mapping[str, float]] = None,
    t_eval: Optional[Sequence[float]] = None,
    dps: Optional[int] = None,
    h0: Optional[float] = None,
    max_steps: int = 2_000_000,
) -> Trajectory:
    """Integrate ``field`` from ``t_span[0]`` to ``t_span[1]`` (either direction).

    ``y0`` is a mapping over the field variables (extra keys are used as
    parameter values) or a sequence in variable order.  Each accepted step has
    an estimated local error at most ``tol`` in the max norm.  Output is at the
    ``t_eval`` times if given (steps are clipped to land on them exactly),
    otherwise at every accepted step.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    if params is None and isinstance(y0, Mapping):
        params = {k: v for k, v in y0.items() if k not in field.vars}
    use_mp = dps is not None
    if use_mp:
        import mpmath

        precision = mpmath.workdps(dps)
        conv = mpmath.mpf
    else:
        precision = contextlib.nullcontext()
        conv = float
    with precision:
        f = field.compile("mpmath" if use_mp else "math", params)
        t0, t1 = conv(t_span[0]), conv(t_span[1])
        y = [conv(v) for v in _initial_state(field, y0)]
        direction = 1 if t1 >= t0 else -1
        span = abs(t1 - t0)
        record_all = t_eval is None
        targets = [t1] if record_all else [conv(t) for t in t_eval]
        if any((b - a) * direction < 0 for a, b in zip([t0] + targets, targets)):
            raise ValueError("t_eval must be monotone in the integration direction")
        h = conv(h0) if h0 else max(span, conv(1e-300)) * conv(tol) ** conv(0.2)
        underflow = max(span, conv(1)) * conv(10) ** (-(dps or 15) + 1)
        t = t0
        steps = 0
        times, states = [t0], [list(y)]
        out_times: List = []
        out_states: List = []
        for target in targets:
            while (target - t) * direction > 0:
                if steps >= max_steps:
                    raise IntegrationError(f"exceeded {max_steps} steps")
                remaining = abs(target - t)
                clipped = h >= remaining
                step = remaining if clipped else h
                full = _rk4_step(f, y, direction * step)
                half = _rk4_step(f, y, direction * step / 2)
                half = _rk4_step(f, half, direction * step / 2)
                if not (_finite(full, use_mp) and _finite(half, use_mp)):
                    raise IntegrationError(f"non-finite state near t={float(t)!r}")
                err = max(abs(a - b) for a, b in zip(full, half)) / 15
                accepted = err <= tol
                if accepted:
                    t = target if clipped else t + direction * step
                    # Richardson extrapolation of the two estimates
                    y = [b + (b - a) / 15 for a, b in zip(full, half)]
                    steps += 1
                    if record_all:
                        times.append(t)
                        states.append(list(y))
                factor = 4 if err == 0 else min(4, max(0.1, 0.9 * (tol / err) ** conv(0.2)))
                # a step shortened to hit an output time says little about the next one
                h = max(h, step * factor) if (clipped and accepted) else step * factor
                if h < underflow:
                    raise IntegrationError(
                        f"step size underflow at t={float(t)!r} (stiff or singular field)")
            out_times.append(t)
            out_states.append(list(y))
    if record_all:
        return _pack(times, states, tol, steps)
    return _pack(out_times, out_states, tol, steps)


def _pack(times, states, tol, steps) -> Trajectory:
    if times and not isinstance(times[0], float):
        return Trajectory(np.array(times, dtype=object), np.array(states, dtype=object), tol, steps)
    return Trajectory(np.array(times, dtype=float), np.array(states, dtype=float), tol, steps)


@dataclass(frozen=True)
class ConvergenceResult:
    order: int
    slope: float
    times: np.ndarray
    errors: np.ndarray


def convergence_order(
    field: VectorField,
    y0: Mapping[str, float],
    order: int,
    times: Optional[Sequence[float]] = None,
    tol: float = 1e-24,
    dps: int = 40,
    noise_floor: Optional[float] = None,
    lie_series: Optional[LieSeries] = None,
) -> ConvergenceResult:
    """Least-squares log-log slope of ``max_j |Y_N,j(t) - y_j(t)|`` against ``t``.

    Both the series and the oracle run in ``dps``-digit arithmetic.  Errors at
    or below ``noise_floor`` (default ``1e5 * tol``) make the slope undefined
    and raise ``NoiseFloorError``.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    import mpmath

    if times is None:
        times = np.logspace(-3, -1, 10)
    times = [float(t) for t in times]
    floor = 1e5 * tol if noise_floor is None else noise_floor
    s = lie_series.truncate(order) if lie_series is not None else series(field, order)
    with mpmath.workdps(dps):
        ev = SeriesEvaluator(s, y0, backend="mpmath")
        traj = integrate(field, y0, (0.0, times[-1]), tol=tol, t_eval=times, dps=dps)
        errors = []
        for t, exact in zip(times, traj.states):
            approx = ev(mpmath.mpf(t))
            errors.append(float(max(abs(a - b) for a, b in zip(approx, exact))))
    errors = np.array(errors)
    if np.any(errors <= floor):
        raise NoiseFloorError(
            f"truncation error {errors.min():.3g} is at or below the noise floor {floor:.3g}",
            errors)
    slope = float(np.polyfit(np.log(times), np.log(errors), 1)[0])
    return ConvergenceResult(order, slope, np.array(times), errors)


__all__ = [
    "ConvergenceResult",
    "IntegrationError",
    "NoiseFloorError",
    "Trajectory",
    "convergence_order",
    "integrate",
]
