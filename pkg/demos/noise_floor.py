#!/usr/bin/env python3
"""Noise floors of the two estimators, predicted and measured.

Pipes band-limited white measurement noise (sample-and-hold at 50 kHz)
through the sliding demodulator with no signal present and compares the
output variances against the closed-form predictions:

* slow estimate:    var = sigma^2 * Ts / (n * eps)      (boxcar average)
* virtual estimate: the same floor divided by eps^2 * mean(S^2) -- the
  1/eps demodulation gain amplifies noise as much as signal.

The study also checks the two design scalings: doubling the window halves
both variances, and doubling the injection amplitude quarters the virtual
variance (signal power up 4x at fixed noise).

Writes ``output/noise_floor.csv`` plus a metrics sidecar with the
predicted/measured ratios.
"""
from pathlib import Path

from injectlab.demod import DemodConfig
from injectlab.io import emit_noise_table, noise_metrics, write_metrics
from injectlab.noise import NoiseSpec, noise_study
from injectlab.signals import PeriodicSignal

OUT = Path(__file__).parent / "output"

SPEC = NoiseSpec(sample_time=2e-5, power=2e-11, seed=0)


def main() -> None:
    OUT.mkdir(exist_ok=True)
    config = DemodConfig(epsilon=1e-3, n_periods=10, sample_step=1e-5,
                         signal=PeriodicSignal())
    rows = noise_study(config, SPEC, duration=40.0)

    print(f"noise: power {SPEC.power:g}, held at Ts={SPEC.sample_time:g} s "
          f"(sigma = {SPEC.sigma:.3e}); 40 s of samples per case")
    print(f"  {'case':<18} {'slow var (pred)':>15} {'slow var (meas)':>15} "
          f"{'virt var (pred)':>15} {'virt var (meas)':>15}")
    for row in rows:
        print(f"  {row.label:<18} {row.predicted_var_ybar:>15.4e} "
              f"{row.measured_var_ybar:>15.4e} {row.predicted_var_yv:>15.4e} "
              f"{row.measured_var_yv:>15.4e}")

    base, dbl_n, dbl_a = rows
    print(f"\n  window doubling: slow var ratio "
          f"{dbl_n.measured_var_ybar / base.measured_var_ybar:.3f} (expect 0.5), "
          f"virtual {dbl_n.measured_var_yv / base.measured_var_yv:.3f}")
    print(f"  amplitude doubling: virtual var ratio "
          f"{dbl_a.measured_var_yv / base.measured_var_yv:.3f} (expect 0.25, "
          "exact here -- same noise realization, linear demodulator)")
    print(f"  two-stage vs single-window virtual variance: "
          f"{base.measured_var_yv_windowed / base.measured_var_yv:.3f} "
          "(subtracting the slow estimate removes bias, not noise)")

    emit_noise_table(rows, OUT / "noise_floor.csv")
    write_metrics(OUT / "noise_floor_metrics.txt", noise_metrics(rows))
    print(f"\nwrote {OUT / 'noise_floor.csv'} and metrics sidecar")


if __name__ == "__main__":
    main()
