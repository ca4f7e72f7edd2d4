"""Pole placement and the output-feedback compensator for the example chain.

The controller acts on the estimated state, u = -k . xhat - kd dhat
+ kref x1_ref; the observer is a copy of the chain driven by the innovation
on the virtual-output channel and augmented with an integrator that learns
the constant load disturbance.  With feed-through gains kd = 1 and
kref = k1, any constant disturbance is cancelled exactly and the closed loop
settles at x1 = x1_ref.

Because both the chain and the observer are in companion form, placing poles
reduces to matching characteristic-polynomial coefficients, so the gain
formulas are exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .signals import PeriodicSignal

__all__ = [
    "Compensator",
    "place_controller_gains",
    "place_observer_gains",
    "default_compensator",
    "compensator_step",
    "control_law",
    "injected_control",
    "DEFAULT_CONTROLLER_POLES",
    "DEFAULT_OBSERVER_POLES",
]

DEFAULT_CONTROLLER_POLES = (-6.06, -3.03 + 5.25j, -3.03 - 5.25j)
DEFAULT_OBSERVER_POLES = (-1.31, -0.80, -0.54 + 0.63j, -0.54 - 0.63j)


def _monic_coefficients(poles: Sequence[complex], count: int) -> np.ndarray:
    """Ascending real coefficients of prod (s - p) for a Hurwitz, conjugate-
    closed pole set; rejects anything else."""
    poles = np.asarray(poles, dtype=complex)
    if poles.size != count:
        raise ValueError(f"expected {count} poles, got {poles.size}")
    if np.any(poles.real >= 0.0):
        raise ValueError("poles must lie strictly in the left half-plane")
    # conjugate closure: the multiset must equal its own conjugate
    sorted_p = np.sort_complex(poles)
    sorted_conj = np.sort_complex(poles.conj())
    if not np.allclose(sorted_p, sorted_conj, rtol=0.0, atol=1e-12):
        raise ValueError("pole set must be closed under conjugation")
    coeffs = npoly.polyfromroots(poles)
    if np.max(np.abs(coeffs.imag)) > 1e-9 * max(1.0, np.max(np.abs(coeffs))):
        raise ValueError("pole set must be closed under conjugation")
    return coeffs.real


def place_controller_gains(poles: Sequence[complex] = DEFAULT_CONTROLLER_POLES) -> np.ndarray:
    """State-feedback gains (k1, k2, k3) placing the chain's poles.

    For the triple integrator with input on the last state, s^3 + k3 s^2
    + k2 s + k1 is the closed-loop polynomial, so the gains are the
    ascending coefficients directly.
    """
    c = _monic_coefficients(poles, 3)
    return np.array([c[0], c[1], c[2]])


def place_observer_gains(poles: Sequence[complex] = DEFAULT_OBSERVER_POLES) -> np.ndarray:
    """Innovation gains (l1, l2, l3, ld) for the disturbance-augmented observer.

    The estimation-error matrix is companion in the innovation column with
    polynomial s^4 + l1 s^3 + l2 s^2 + l3 s + ld.
    """
    c = _monic_coefficients(poles, 4)
    return np.array([c[3], c[2], c[1], c[0]])


@dataclass(frozen=True)
class Compensator:
    """Observer-based output feedback for the example chain."""

    k: np.ndarray  # state-feedback gains (k1, k2, k3)
    l: np.ndarray  # innovation gains (l1, l2, l3, ld)
    kd: float = 1.0  # disturbance feed-through; 1 cancels a constant load
    kref: float = field(default=0.0)  # reference gain; 0 means "use k1"

    def __post_init__(self) -> None:
        k = np.asarray(self.k, dtype=float)
        l = np.asarray(self.l, dtype=float)
        if k.shape != (3,) or l.shape != (4,):
            raise ValueError("need 3 feedback gains and 4 innovation gains")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "l", l)
        if self.kref == 0.0:
            # unity dc gain from reference to x1
            object.__setattr__(self, "kref", float(k[0]))

    @property
    def controller_matrix(self) -> np.ndarray:
        """Closed-loop matrix of the chain under perfect state feedback."""
        a = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
        a[2] -= self.k
        return a

    @property
    def observer_error_matrix(self) -> np.ndarray:
        """Matrix governing (xhat - x, dhat - d) under a clean feed."""
        m = np.zeros((4, 4))
        m[0, 1] = m[1, 2] = m[2, 3] = 1.0
        m[:, 0] -= self.l
        return m


def default_compensator() -> Compensator:
    return Compensator(k=place_controller_gains(), l=place_observer_gains())


def control_law(comp: Compensator, eta: np.ndarray, x1_ref: float = 0.0) -> float:
    """Actuation from the current estimate: u = -k.xhat - kd dhat + kref ref."""
    return float(
        -comp.k[0] * eta[0] - comp.k[1] * eta[1] - comp.k[2] * eta[2]
        - comp.kd * eta[3] + comp.kref * x1_ref
    )


def compensator_step(
    comp: Compensator, eta: np.ndarray, y_v_fed: float, x1_ref: float = 0.0
) -> tuple[float, np.ndarray]:
    """Control value and observer derivative for one evaluation.

    ``y_v_fed`` is whatever stands in for the virtual output: the
    demodulated estimate in the realistic loop, or x1 itself in idealized
    studies.
    """
    u = control_law(comp, eta, x1_ref)
    inn = y_v_fed - eta[0]
    eta_dot = np.array([
        eta[1] + comp.l[0] * inn,
        eta[2] + comp.l[1] * inn,
        u + eta[3] + comp.l[2] * inn,
        comp.l[3] * inn,
    ])
    return u, eta_dot


def injected_control(
    signal: PeriodicSignal, epsilon: float, t: float, u_base: float
) -> float:
    """Superimpose the fast probing waveform on the baseline actuation."""
    return u_base + float(signal.s(t / epsilon))
