"""Control-affine single-output plants and their virtual output.

A plant is dx/dt = f(x) + g(x) u with scalar measurement y = h(x).  The
quantity this package revolves around is the virtual output

    y_v(x) = L_g h(x) = dh/dx . g(x),

the directional derivative of the measurement map along the input channel.
It is what high-frequency injection makes visible: the first-order ripple
that injection superimposes on y has amplitude proportional to y_v.

The bundled example is the third-order chain

    x1' = x2,  x2' = x3,  x3' = u + d,      y = x2 + x1 x3,

whose virtual output is y_v = x1.  Around an equilibrium with x1 = a the
measurement alone only pins down the pair (x2, x3) — the Jacobians of y and
its drift derivative span rows (0, 1, a) and (0, 0, 1) — so recovering x1
genuinely requires the virtual output.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Plant",
    "example_plant",
    "output",
    "virtual_output",
    "observability_report",
    "ObservabilityReport",
]

_FD_REL_STEP = 1e-6


@dataclass(frozen=True)
class Plant:
    """Control-affine SISO plant.

    ``f``, ``g`` and ``h`` must accept a state vector of length ``dim``;
    ``h`` should also broadcast over stacked states ``(N, dim)`` so whole
    trajectories can be evaluated at once.  ``lgh`` is the analytic virtual
    output if one is known; otherwise a central finite difference of ``h``
    along ``g`` is used.  ``g_const`` may carry the input channel when it is
    state-independent, which lets trajectory-level code vectorize.
    """

    dim: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], float]
    lgh: Callable[[np.ndarray], float] | None = None
    g_const: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be at least 1")


def output(plant: Plant, x) -> float | np.ndarray:
    """Measured output h(x); broadcasts when h does."""
    return plant.h(np.asarray(x, dtype=float))


def virtual_output(plant: Plant, x) -> float | np.ndarray:
    """L_g h(x), analytically when available, else by central differences.

    The finite-difference fallback perturbs the state along g(x) with a
    relative step of 1e-6 scaled by the state magnitude, which balances
    truncation against round-off for smooth measurement maps.
    """
    x = np.asarray(x, dtype=float)
    if plant.lgh is not None:
        return plant.lgh(x)
    gx = np.asarray(plant.g(x), dtype=float)
    step = _FD_REL_STEP * max(1.0, float(np.max(np.abs(x))))
    return (plant.h(x + step * gx) - plant.h(x - step * gx)) / (2.0 * step)


def example_plant(disturbance: float = 0.0) -> Plant:
    """The worked third-order chain with constant load disturbance.

    Time-varying disturbance schedules are handled by the scenario layer;
    here ``d`` is a frozen parameter, which is all the plant-level contracts
    need.
    """
    d = float(disturbance)

    def f(x: np.ndarray) -> np.ndarray:
        return np.array([x[1], x[2], d])

    g_vec = np.array([0.0, 0.0, 1.0])

    def g(x: np.ndarray) -> np.ndarray:
        return g_vec

    def h(x: np.ndarray):
        if x.ndim > 1:
            return x[..., 1] + x[..., 0] * x[..., 2]
        return x[1] + x[0] * x[2]

    def lgh(x: np.ndarray):
        return x[..., 0] if x.ndim > 1 else x[0]

    return Plant(dim=3, f=f, g=g, h=h, lgh=lgh, g_const=g_vec)


@dataclass(frozen=True)
class ObservabilityReport:
    """Codistribution rows at an equilibrium and the ranks they achieve."""

    rows: np.ndarray  # stacked output Jacobians, one row per Lie derivative
    rank_measured: int  # rank from the physical measurement chain alone
    rank_with_virtual: int  # rank once the virtual output row e1 is added

    @property
    def defect_resolved(self) -> bool:
        return self.rank_with_virtual > self.rank_measured


def observability_report(x1_ref: float) -> ObservabilityReport:
    """Local observability of the example chain at x = (x1_ref, 0, 0).

    The measurement y = x2 + x1 x3 and its derivative along the drift
    contribute rows (0, 1, x1_ref) and (0, 0, 1): every higher Lie derivative
    stays inside their span, so the measured rank saturates at 2 and the
    first state is invisible.  Adding the virtual output y_v = x1 contributes
    the row (1, 0, 0) and restores full rank 3.
    """
    a = float(x1_ref)
    rows = np.array([[0.0, 1.0, a], [0.0, 0.0, 1.0]])
    rank_measured = int(np.linalg.matrix_rank(rows))
    with_virtual = np.vstack([rows, [1.0, 0.0, 0.0]])
    rank_with_virtual = int(np.linalg.matrix_rank(with_virtual))
    return ObservabilityReport(
        rows=rows,
        rank_measured=rank_measured,
        rank_with_virtual=rank_with_virtual,
    )
