"""Band-limited white measurement noise and estimator noise-floor predictions.

"Band-limited white" means a zero-order-hold Gaussian sequence: independent
draws every ``sample_time`` seconds, held constant in between, with
per-sample variance sigma^2 = power / sample_time so that ``power`` plays
the role of a (one-sided) spectral density.  The demodulation window then
averages nε/sample_time independent draws, which fixes the floor of the
slow estimate at

    var(ybar noise) = sigma^2 * sample_time / (n eps),

and dividing the windowed carrier correlation by eps^2 times the discrete
mean square of the carrier gives the virtual-output floor

    var(yv noise)  = var(ybar noise) / (eps^2 * mean(S_k^2)).

Both predictions use the same discrete carrier moments as the estimators
themselves, so discretization bias cancels out of the comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .demod import DemodConfig, batch_demodulate

__all__ = [
    "NoiseSpec",
    "generate_noise",
    "hold_on_grid",
    "sliding_average_gain",
    "predicted_output_noise_var",
    "predicted_virtual_noise_var",
    "NoiseMeasurement",
    "measure_estimator_noise",
    "NoiseStudyRow",
    "noise_study",
]


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement-noise description: hold time, spectral power, RNG seed."""

    sample_time: float
    power: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sample_time) and self.sample_time > 0.0):
            raise ValueError("sample_time must be positive and finite")
        if not (np.isfinite(self.power) and self.power >= 0.0):
            raise ValueError("power must be non-negative and finite")

    @property
    def sigma(self) -> float:
        """Per-sample standard deviation sqrt(power / sample_time)."""
        return float(np.sqrt(self.power / self.sample_time))


def generate_noise(spec: NoiseSpec, n_samples: int) -> np.ndarray:
    """i.i.d. Gaussian noise samples, deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    return spec.sigma * rng.standard_normal(n_samples)


def hold_on_grid(spec: NoiseSpec, h_step: float, n_grid: int) -> np.ndarray:
    """Noise sequence zero-order-held onto a finer uniform grid.

    ``sample_time`` must be an integer multiple of ``h_step``; each draw is
    repeated over its hold interval.
    """
    reps = spec.sample_time / h_step
    if abs(reps - round(reps)) > 1e-9 * max(1.0, reps) or round(reps) < 1:
        raise ValueError("sample_time must be an integer multiple of h_step")
    reps = round(reps)
    n_draws = -(-n_grid // reps)  # ceil
    return np.repeat(generate_noise(spec, n_draws), reps)[:n_grid]


def sliding_average_gain(n_periods: int, epsilon: float, omega) -> np.ndarray | float:
    """Magnitude response |sinc(n eps w / 2)| of the boxcar averager.

    Unity at DC, first zero at w = 2*pi/(n*eps), bounded by 2/(n*eps*w)
    beyond it.
    """
    x = 0.5 * n_periods * epsilon * np.asarray(omega, dtype=float)
    out = np.abs(np.sinc(x / np.pi))  # np.sinc is the normalized sin(pi t)/(pi t)
    return out if out.ndim else float(out)


def predicted_output_noise_var(spec: NoiseSpec, n_periods: int, epsilon: float) -> float:
    """Noise floor of the slow estimate: boxcar over nε/sample_time draws."""
    return spec.sigma**2 * spec.sample_time / (n_periods * epsilon)


def predicted_virtual_noise_var(spec: NoiseSpec, config: DemodConfig) -> float:
    """Noise floor of the virtual-output estimate (single-window form).

    Scales the slow-estimate floor by 1/(eps^2 * mean S^2) with the mean
    taken over the same discrete carrier table the estimator divides by.
    """
    _, S_tab = config.phase_tables()
    den = float(np.mean(S_tab**2))
    if den == 0.0:
        return float("inf")
    base = predicted_output_noise_var(spec, config.n_periods, config.epsilon)
    return base / (config.epsilon**2 * den)


@dataclass(frozen=True)
class NoiseMeasurement:
    """Empirical estimator output variances on a pure-noise input."""

    var_ybar: float
    var_yv: float
    var_yv_simple: float
    n_outputs: int


def measure_estimator_noise(
    config: DemodConfig, spec: NoiseSpec, duration: float
) -> NoiseMeasurement:
    """Feed pure noise through both estimators and measure output variances.

    ``duration`` should cover many windows (>= 1000 n eps) so the variance
    estimates sit well inside the 25% verification tolerances.
    """
    n_grid = round(duration / config.sample_step) + 1
    y = hold_on_grid(spec, config.sample_step, n_grid)
    res = batch_demodulate(y, config)
    return NoiseMeasurement(
        var_ybar=float(np.var(res.ybar[res.ybar_valid])),
        var_yv=float(np.var(res.yv[res.yv_valid])),
        var_yv_simple=float(np.var(res.yv_simple[res.yv_simple_valid])),
        n_outputs=int(np.count_nonzero(res.yv_valid)),
    )


@dataclass(frozen=True)
class NoiseStudyRow:
    """Predicted vs. measured estimator noise floors for one configuration."""

    label: str
    n_periods: int
    amplitude: float
    predicted_var_ybar: float
    measured_var_ybar: float
    predicted_var_yv: float
    measured_var_yv: float
    measured_var_yv_windowed: float


def noise_study(
    config: DemodConfig, spec: NoiseSpec, duration: float = 40.0
) -> tuple[NoiseStudyRow, ...]:
    """Measure noise floors for the base config, doubled window, doubled amplitude.

    The three rows let a caller check the 1/(n eps) window scaling and the
    1/A^2 carrier scaling directly; ``duration`` should span >= a few
    thousand windows so the empirical variances sit well inside 25% bands.
    """
    variants = (
        ("base", config),
        ("double_n", replace(config, n_periods=2 * config.n_periods)),
        ("double_amplitude",
         replace(config,
                 signal=replace(config.signal,
                                amplitude=2.0 * config.signal.amplitude))),
    )
    rows = []
    for label, cfg in variants:
        meas = measure_estimator_noise(cfg, spec, duration)
        rows.append(NoiseStudyRow(
            label=label,
            n_periods=cfg.n_periods,
            amplitude=cfg.signal.amplitude,
            predicted_var_ybar=predicted_output_noise_var(
                spec, cfg.n_periods, cfg.epsilon),
            measured_var_ybar=meas.var_ybar,
            predicted_var_yv=predicted_virtual_noise_var(spec, cfg),
            measured_var_yv=meas.var_yv_simple,
            measured_var_yv_windowed=meas.var_yv,
        ))
    return tuple(rows)
