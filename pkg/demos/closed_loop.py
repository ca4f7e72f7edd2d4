#!/usr/bin/env python3
"""The worked example end to end: regulate x1 with demodulated feedback.

The plant is

    x1' = x2,  x2' = x3,  x3' = u + d + probing input,  y = x2 + x1*x3

and only y is measured.  The ripple of y carries x1 (see ripple_anatomy.py),
so the loop demodulates y on line and feeds the estimate to an
observer-based compensator.  The run exercises the three standard events:

* t = 2 s: a -2 load step lands on the input and is rejected;
* t = 14 s: the reference starts ramping (through a first-order filter)
  and x1 follows with a bounded lag;
* for contrast, the same loop with the injection amplitude set to zero has
  no usable feedback at all and drifts away by orders of magnitude.

Writes ``output/closed_loop_trajectory.csv`` and
``output/closed_loop_metrics.txt`` via the package's CSV/metrics emitters.
"""
from dataclasses import replace
from pathlib import Path

import numpy as np

from injectlab.io import emit_csv, write_metrics
from injectlab.scenario import Scenario, run_scenario

OUT = Path(__file__).parent / "output"


def main() -> None:
    OUT.mkdir(exist_ok=True)
    scn = Scenario()  # eps=1e-3, square probe, demodulated feedback, 20 s
    res = run_scenario(scn)
    metrics = res.metrics

    print(f"demodulated-feedback run: eps={scn.epsilon:g}, "
          f"{res.data.shape[0]} samples kept (stride {scn.stride})")
    print(f"  load step at 2 s: settles to 2% at t = "
          f"{metrics['settling_time']:.3f} s (threshold "
          f"{metrics['settling_threshold']:.3g})")
    t = res.t
    err = np.abs(res.column("x1") - res.column("x1_ref"))
    late = err[t >= 19.0].max()
    print(f"  ramp from 14 s: tracking error settles near {late:.3f} "
          "(constant velocity lag, bounded)")
    print(f"  sup |u| = {metrics['sup_abs_u']:.2f}, "
          f"sup tracking error = {metrics['sup_tracking_error']:.3f}")

    emit_csv(res, OUT / "closed_loop_trajectory.csv")
    write_metrics(OUT / "closed_loop_metrics.txt", metrics)
    print(f"  wrote {OUT / 'closed_loop_trajectory.csv'} and metrics sidecar")

    blind = run_scenario(replace(scn, amplitude=0.0)).metrics
    print("\nsame loop, injection off (no ripple -> no virtual output):")
    print(f"  sup tracking error = {blind['sup_tracking_error']:.4g} "
          f"({blind['sup_tracking_error'] / metrics['sup_tracking_error']:.0f}x "
          "the injected loop -- the probing signal is what buys observability)")


if __name__ == "__main__":
    main()
