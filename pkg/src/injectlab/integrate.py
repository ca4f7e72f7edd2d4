"""Fixed-step classical Runge-Kutta integration on an aligned time grid.

Fast periodic forcing makes adaptive steppers both wasteful and noisy for
order studies, so everything here runs on a fixed grid whose step divides a
quarter of the injection period: waveform switches then land exactly on step
boundaries and piecewise-constant forcing is integrated without order loss.

Discontinuous inputs (square plateaus, disturbance steps, sampled feedback)
should be frozen per step via ``prepare_step``: the value taken at the step
start (right limit at a switch) is held for all four stages, so the new
plateau is integrated from its first instant and never bleeds into the step
that ends at the switch.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

__all__ = ["TimeGrid", "Trajectory", "rk4_step", "simulate"]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t0, t0+h, ..., t_end`` with an exact number of steps."""

    t0: float
    t_end: float
    h_step: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.h_step) and self.h_step > 0.0):
            raise ValueError("h_step must be positive and finite")
        if not self.t_end > self.t0:
            raise ValueError("t_end must exceed t0")
        span = (self.t_end - self.t0) / self.h_step
        if abs(span - round(span)) > 1e-9 * max(1.0, span):
            raise ValueError("h_step must divide the horizon t_end - t0 exactly")

    @property
    def n_steps(self) -> int:
        return round((self.t_end - self.t0) / self.h_step)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h_step * np.arange(self.n_steps + 1)

    def check_quarter_period(self, epsilon: float) -> None:
        """Require the step to divide a quarter injection period."""
        quarter = epsilon / 4.0
        ratio = quarter / self.h_step
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
            raise ValueError(
                f"h_step={self.h_step!r} must divide a quarter period {quarter!r}"
            )


@dataclass
class Trajectory:
    """Dense record of a simulation: every grid point is stored."""

    times: np.ndarray
    states: np.ndarray  # (n_steps + 1, dim)
    probes: dict[str, np.ndarray]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _check_finite(dx: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(dx)):
        bad = int(np.flatnonzero(~np.isfinite(np.atleast_1d(dx)))[0])
        raise FloatingPointError(
            f"non-finite derivative in component {bad} at t={float(t)!r}"
        )


def rk4_step(rhs: Callable, t: float, x: np.ndarray, h: float) -> np.ndarray:
    """One classical fourth-order step from ``(t, x)`` to ``t + h``.

    Aborts with a diagnostic naming the time and state component if the
    derivative ever turns non-finite.
    """
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(rhs(t, x), dtype=float)
    _check_finite(k1, t)
    k2 = np.asarray(rhs(t + 0.5 * h, x + 0.5 * h * k1), dtype=float)
    _check_finite(k2, t + 0.5 * h)
    k3 = np.asarray(rhs(t + 0.5 * h, x + 0.5 * h * k2), dtype=float)
    _check_finite(k3, t + 0.5 * h)
    k4 = np.asarray(rhs(t + h, x + h * k3), dtype=float)
    _check_finite(k4, t + h)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate(
    rhs: Callable,
    grid: TimeGrid,
    x0,
    probes: Mapping[str, Callable] | None = None,
    prepare_step: Callable | None = None,
) -> Trajectory:
    """Integrate ``rhs`` over ``grid`` recording every step.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, x)`` or, when ``prepare_step`` is given, ``rhs(t, x, aux)``.
    probes : mapping, optional
        Named scalar observers ``fn(t, x)`` evaluated at every stored sample.
    prepare_step : callable, optional
        ``prepare_step(t_k, x_k) -> aux`` called once at each step start; the
        result is passed unchanged to all four stage evaluations.  Use it to
        freeze discontinuous or sampled inputs over the step.
    """
    x = np.array(x0, dtype=float, ndmin=1)
    n = grid.n_steps
    states = np.empty((n + 1, x.size))
    states[0] = x
    times = grid.times
    probes = dict(probes or {})
    probe_vals = {name: np.empty(n + 1) for name in probes}
    for name, fn in probes.items():
        probe_vals[name][0] = fn(times[0], x)
    for k in range(n):
        t = times[k]
        if prepare_step is not None:
            aux = prepare_step(t, x)
            x = rk4_step(lambda tt, xx: rhs(tt, xx, aux), t, x, grid.h_step)
        else:
            x = rk4_step(rhs, t, x, grid.h_step)
        states[k + 1] = x
        for name, fn in probes.items():
            probe_vals[name][k + 1] = fn(times[k + 1], x)
    return Trajectory(times=times, states=states, probes=probe_vals)
