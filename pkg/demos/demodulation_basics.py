#!/usr/bin/env python3
"""Demodulation on the standard bench signal, step by step.

The bench signal is

    y(t) = sin(t) + eps * cos(0.7 t) * S(t / eps)

i.e. a slow component plus a small fast ripple whose amplitude carries the
interesting quantity.  This script runs the two sliding estimators over it
and prints what each one actually delivers:

* the slow estimate tracks sin(t - n*eps/2) -- a half-window delay, with a
  curvature bias that shrinks like (n*eps)^2;
* the two-stage ripple-amplitude estimate tracks cos(0.7 t) with a sup
  error that grows linearly in both eps and n (delay-dominated);
* the single-window variant is far worse because the drifting slow
  component leaks straight into its correlation.

Writes ``output/demodulation_basics.csv`` with the decimated traces and
prints a sup-error table over window lengths n = 5, 10, 20.
"""
from pathlib import Path

import numpy as np

from injectlab.demod import DemodConfig, batch_demodulate, estimator_order_probe
from injectlab.signals import PeriodicSignal

OUT = Path(__file__).parent / "output"

EPS = 1e-3
N_PERIODS = 10
SAMPLE_STEP = 5e-5
T_END = 8.0


def main() -> None:
    OUT.mkdir(exist_ok=True)
    config = DemodConfig(epsilon=EPS, n_periods=N_PERIODS,
                         sample_step=SAMPLE_STEP, signal=PeriodicSignal())
    m = config.samples_per_period
    k = np.arange(round(T_END / SAMPLE_STEP) + 1)
    t = k * SAMPLE_STEP
    _, S_tab = config.phase_tables()
    y = np.sin(t) + EPS * np.cos(0.7 * t) * S_tab[k % m]

    res = batch_demodulate(y, config)
    half = 0.5 * config.group_delay

    print(f"bench: eps={EPS:g}, n={N_PERIODS}, window={config.window} "
          f"samples ({config.group_delay:g} s)")
    err_ybar = np.abs(res.ybar - np.sin(t - half))[res.ybar_valid]
    err_yv = np.abs(res.yv - np.cos(0.7 * t))[res.yv_valid]
    err_simple = np.abs(res.yv_simple - np.cos(0.7 * t))[res.yv_simple_valid]
    print(f"  slow estimate vs sin(t - n*eps/2):  sup {err_ybar.max():.3e} "
          f"(curvature bound (n*eps)^2/24 = {(N_PERIODS * EPS) ** 2 / 24:.3e})")
    print(f"  two-stage ripple amplitude:         sup {err_yv.max():.3e}")
    print(f"  single-window ripple amplitude:     sup {err_simple.max():.3e} "
          f"({err_simple.max() / err_yv.max():.0f}x worse)")

    print("\nsup error vs window length (same eps):")
    print(f"  {'n':>4}  {'slow':>11}  {'two-stage':>11}  {'single-window':>13}")
    for n in (5, 10, 20):
        probe = estimator_order_probe(DemodConfig(
            epsilon=EPS, n_periods=n, sample_step=SAMPLE_STEP,
            signal=PeriodicSignal()))
        print(f"  {n:>4}  {probe.err_ybar:>11.3e}  {probe.err_yv:>11.3e}  "
              f"{probe.err_yv_simple:>13.3e}")
    print("(quadrupling the slow error, doubling the two-stage error: the "
          "window helps curvature, not delay)")

    # decimate for the CSV: every 50th sample is plenty to plot from
    sl = slice(None, None, 50)
    table = np.column_stack([
        t[sl], y[sl],
        np.sin(t[sl]), res.ybar[sl],
        np.cos(0.7 * t[sl]), res.yv[sl], res.yv_simple[sl],
        res.yv_valid[sl].astype(float),
    ])
    path = OUT / "demodulation_basics.csv"
    np.savetxt(path, table, fmt="%.12g", delimiter=",",
               header="t,y,ybar_true,ybar_hat,yv_true,yv_hat,yv_hat_simple,valid",
               comments="")
    print(f"\nwrote {path} ({table.shape[0]} rows)")


if __name__ == "__main__":
    main()
