"""Injection waveforms and their zero-mean primitives.

A probing waveform ``s`` is a 1-periodic, zero-mean function of the phase
``sigma = t / eps``.  Everything downstream (ripple shape, demodulation
carrier, noise gain) is expressed through ``s`` and its zero-mean primitive

    S(sigma) = int_0^sigma s(tau) dtau  -  int_0^1 int_0^mu s(tau) dtau dmu

which is itself 1-periodic, continuous and zero-mean.  The state ripple
produced by injecting ``s`` is proportional to ``S``, so ``S`` (not ``s``)
is the matched demodulation carrier.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["PeriodicSignal", "signal_from_callable"]

# Default phase origins.  The square wave is shifted a quarter period so its
# primitive vanishes at sigma = 0 (needed to start injected and averaged
# trajectories from identical initial conditions); the sine keeps the plain
# sin(2*pi*sigma) origin.
_DEFAULT_PHASE = {"square": 0.25, "sine": 0.0}


@dataclass(frozen=True)
class PeriodicSignal:
    """A named probing waveform with amplitude and phase origin.

    Parameters
    ----------
    shape : {"square", "sine"}
    amplitude : float
        Peak value ``A`` of ``s``; must be >= 0 (0 disables injection).
    phase_shift : float or None
        Fraction of a period in [0, 1) added to the evaluation phase.
        ``None`` picks the per-shape default (1/4 for square so S(0) = 0,
        0 for sine).
    """

    shape: str = "square"
    amplitude: float = 1.0
    phase_shift: float | None = None

    def __post_init__(self) -> None:
        if self.shape not in ("square", "sine"):
            raise ValueError(f"unknown waveform shape {self.shape!r}")
        if not np.isfinite(self.amplitude) or self.amplitude < 0.0:
            raise ValueError("amplitude must be finite and >= 0")
        p = _DEFAULT_PHASE[self.shape] if self.phase_shift is None else float(self.phase_shift)
        if not 0.0 <= p < 1.0:
            raise ValueError("phase_shift must lie in [0, 1)")
        object.__setattr__(self, "phase_shift", p)

    # -- evaluation ---------------------------------------------------------

    def s(self, sigma):
        """Evaluate the waveform at phase ``sigma`` (scalar or array)."""
        tau = np.mod(np.asarray(sigma, dtype=float) + self.phase_shift, 1.0)
        A = self.amplitude
        if self.shape == "square":
            # half-open plateaus: value at a switch is the right limit
            out = np.where(tau < 0.5, A, -A)
        else:
            out = A * np.sin(2.0 * np.pi * tau)
        return out if out.ndim else float(out)

    def S(self, sigma):
        """Zero-mean primitive of ``s`` at phase ``sigma`` (closed form)."""
        tau = np.mod(np.asarray(sigma, dtype=float) + self.phase_shift, 1.0)
        A = self.amplitude
        if self.shape == "square":
            # primitive of the unshifted square is the triangle
            # B(tau) = A*tau on [0,1/2], A*(1-tau) on [1/2,1]; mean A/4
            out = np.where(tau < 0.5, A * tau, A * (1.0 - tau)) - 0.25 * A
        else:
            out = -(A / (2.0 * np.pi)) * np.cos(2.0 * np.pi * tau)
        return out if out.ndim else float(out)

    # -- moments ------------------------------------------------------------

    @property
    def s_sq_mean(self) -> float:
        """Mean of s^2 over one period."""
        A = self.amplitude
        return A * A if self.shape == "square" else 0.5 * A * A

    @property
    def S_sq_mean(self) -> float:
        """Mean of S^2 over one period (demodulation denominator)."""
        A = self.amplitude
        if self.shape == "square":
            return A * A / 48.0  # triangle of peak A/4: uniform value distribution
        return A * A / (8.0 * np.pi**2)

    @property
    def S_sup(self) -> float:
        """Peak of |S| over one period (ripple waveform factor)."""
        A = self.amplitude
        return A / 4.0 if self.shape == "square" else A / (2.0 * np.pi)

    # -- sampling helpers ----------------------------------------------------

    def tables(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """Exact samples of (s, S) on the uniform phase grid j/m, j=0..m-1.

        ``m`` must be a positive multiple of 4 so that square-wave switches
        land exactly on grid points.
        """
        if m <= 0 or m % 4 != 0:
            raise ValueError("samples per period must be a positive multiple of 4")
        j = np.arange(m, dtype=float) / m
        return self.s(j), self.S(j)


class _TabulatedSignal:
    """Adapter giving any zero-mean 1-periodic callable the signal interface.

    The primitive and moments are computed once by trapezoidal quadrature on
    a fine grid; accuracy is limited by ``resolution`` rather than closed
    form, which is fine for exploratory waveforms.
    """

    shape = "custom"

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], resolution: int = 4096):
        if resolution < 64 or resolution % 4:
            raise ValueError("resolution must be a multiple of 4, >= 64")
        self._res = resolution
        grid = np.arange(resolution, dtype=float) / resolution
        sv = np.asarray(fn(grid), dtype=float)
        mean = sv.mean()
        if abs(mean) > 1e-9 * max(1.0, np.abs(sv).max()):
            raise ValueError("waveform must have zero mean over one period")
        sv = sv - mean
        # left-Riemann primitive, then remove its mean
        prim = np.concatenate(([0.0], np.cumsum(sv[:-1]))) / resolution
        prim -= prim.mean()
        self._s_tab = sv
        self._S_tab = prim
        self.amplitude = float(np.abs(sv).max())
        self.phase_shift = 0.0
        self.s_sq_mean = float((sv**2).mean())
        self.S_sq_mean = float((prim**2).mean())
        self.S_sup = float(np.abs(prim).max())

    def _lookup(self, table, sigma):
        idx = np.mod(np.floor(np.asarray(sigma, dtype=float) * self._res).astype(int), self._res)
        out = table[idx]
        return out if out.ndim else float(out)

    def s(self, sigma):
        return self._lookup(self._s_tab, sigma)

    def S(self, sigma):
        return self._lookup(self._S_tab, sigma)

    def tables(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        if m <= 0 or self._res % m:
            raise ValueError("tabulated signal requires m dividing its resolution")
        step = self._res // m
        return self._s_tab[::step].copy(), self._S_tab[::step].copy()


def signal_from_callable(fn: Callable[[np.ndarray], np.ndarray], resolution: int = 4096):
    """Wrap a zero-mean 1-periodic callable so it can drive the toolkit."""
    return _TabulatedSignal(fn, resolution)
