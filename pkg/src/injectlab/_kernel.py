"""Compiled closed-loop integrator for the worked example.

The acceptance-scale studies integrate the 8-state loop (plant, observer
with disturbance state, reference filter) for ~10^7 RK4 steps while running
the sliding demodulator sample-by-sample inside the loop.  A straight numpy
implementation is two orders of magnitude too slow for that, so this module
carries a single numba kernel; :mod:`injectlab.scenario` owns the friendly
API and an uncompiled reference path used to cross-check the kernel.

Conventions baked into the kernel (shared with the pure-Python paths):

* The step divides a quarter period, so square-wave switches land exactly on
  step boundaries.  Square plateaus and the piecewise-constant disturbance
  are frozen over each step at their step-start (right-limit) values; a new
  plateau is integrated from its first instant and never bleeds into the
  step that ends at the switch.
* Demodulated feedback is zero-order-held over each step and updated from
  the measurement pushed at the step's end; while the estimate is still
  warming up, the fed value is 0.
* The measurement recorded and demodulated is h(x) plus the (optional)
  held noise sample.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# feedback source codes
FEED_CONTINUOUS = 0  # feed the true virtual output x1, evaluated per stage
FEED_DEMOD = 1  # feed the zero-order-held demodulated estimate

# waveform codes
SHAPE_SQUARE = 0
SHAPE_SINE = 1

# output column layout
COL_T = 0
COL_X1 = 1
COL_X2 = 2
COL_X3 = 3
COL_XH1 = 4
COL_XH2 = 5
COL_XH3 = 6
COL_DH = 7
COL_REF = 8
COL_U = 9
COL_Y = 10
COL_YBAR = 11
COL_YV = 12
COL_VALID = 13
N_COLS = 14


@njit(inline="always")
def _rhs(tt, x1, x2, x3, e1, e2, e3, e4, rf, yvf, sv, d,
         k1, k2, k3, kd, kref, l1, l2, l3, ld,
         ref_level, ref_start, ref_slope, ref_tau, use_filter):
    rr = ref_level
    if tt > ref_start:
        rr += ref_slope * (tt - ref_start)
    ref_out = rf if use_filter else rr
    u = -(k1 * e1 + k2 * e2 + k3 * e3) - kd * e4 + kref * ref_out
    inn = yvf - e1
    drf = (rr - rf) / ref_tau if use_filter else 0.0
    return (x2, x3, u + d + sv,
            e2 + l1 * inn, e3 + l2 * inn, u + e4 + l3 * inn, ld * inn,
            drf)


@njit(cache=True, nogil=True)
def run_loop(n_steps, h, eps, shape_code, amp, phase,
             s_tab, S_tab,
             feed_code, n_periods,
             k1, k2, k3, kd, kref, l1, l2, l3, ld,
             dist_steps, dist_vals,
             ref_level, ref_start, ref_slope, ref_tau,
             noise, has_noise,
             z0, out):
    """Integrate the loop over ``n_steps`` steps of size ``h`` from t=0.

    ``s_tab``/``S_tab`` sample the injection waveform (amplitude included)
    on the integrator grid, one period of ``m = round(eps/h)`` entries.
    ``out`` must be ``(n_steps+1, N_COLS)``.  Returns -1 on success, else
    the index of the first sample at which the state turned non-finite
    (rows beyond it are stale).
    """
    m = s_tab.shape[0]
    use_filter = ref_tau > 0.0
    two_pi = 2.0 * np.pi

    # --- sliding demodulator state (push grid == integrator grid) ---
    N = n_periods * m
    M = N // 2
    cap = N + 1
    y_ring = np.zeros(cap)
    w_ring = np.zeros(cap)
    sum_y = 0.0
    sum_w = 0.0
    den = 0.0
    for j in range(m):
        den += S_tab[j] * S_tab[j]
    den /= m

    x1 = z0[0]; x2 = z0[1]; x3 = z0[2]
    e1 = z0[3]; e2 = z0[4]; e3 = z0[5]; e4 = z0[6]
    rf = z0[7]

    d_now = 0.0
    ptr = 0
    nd = dist_steps.shape[0]

    ybar_now = 0.0
    yv_now = 0.0
    valid_now = 0.0

    for k in range(n_steps + 1):
        if k > 0:
            t = (k - 1) * h
            # disturbance value for the interval [t_{k-1}, t_k)
            while ptr < nd and k - 1 >= dist_steps[ptr]:
                d_now = dist_vals[ptr]
                ptr += 1
            # injection, frozen per step for the square shape
            if amp > 0.0 and shape_code == SHAPE_SQUARE:
                sv1 = s_tab[(k - 1) % m]
                sv2 = sv1
                sv4 = sv1
            elif amp > 0.0:
                sv1 = amp * np.sin(two_pi * ((t / eps + phase) % 1.0))
                sv2 = amp * np.sin(two_pi * (((t + 0.5 * h) / eps + phase) % 1.0))
                sv4 = amp * np.sin(two_pi * (((t + h) / eps + phase) % 1.0))
            else:
                sv1 = 0.0
                sv2 = 0.0
                sv4 = 0.0

            held = yv_now if feed_code == FEED_DEMOD else 0.0

            yvf = held if feed_code == FEED_DEMOD else x1
            a1, a2, a3, a4, a5, a6, a7, a8 = _rhs(
                t, x1, x2, x3, e1, e2, e3, e4, rf, yvf, sv1, d_now,
                k1, k2, k3, kd, kref, l1, l2, l3, ld,
                ref_level, ref_start, ref_slope, ref_tau, use_filter)

            hh = 0.5 * h
            p1 = x1 + hh * a1; p2 = x2 + hh * a2; p3 = x3 + hh * a3
            p4 = e1 + hh * a4; p5 = e2 + hh * a5; p6 = e3 + hh * a6
            p7 = e4 + hh * a7; p8 = rf + hh * a8
            yvf = held if feed_code == FEED_DEMOD else p1
            b1, b2, b3, b4, b5, b6, b7, b8 = _rhs(
                t + hh, p1, p2, p3, p4, p5, p6, p7, p8, yvf, sv2, d_now,
                k1, k2, k3, kd, kref, l1, l2, l3, ld,
                ref_level, ref_start, ref_slope, ref_tau, use_filter)

            p1 = x1 + hh * b1; p2 = x2 + hh * b2; p3 = x3 + hh * b3
            p4 = e1 + hh * b4; p5 = e2 + hh * b5; p6 = e3 + hh * b6
            p7 = e4 + hh * b7; p8 = rf + hh * b8
            yvf = held if feed_code == FEED_DEMOD else p1
            c1, c2, c3, c4, c5, c6, c7, c8 = _rhs(
                t + hh, p1, p2, p3, p4, p5, p6, p7, p8, yvf, sv2, d_now,
                k1, k2, k3, kd, kref, l1, l2, l3, ld,
                ref_level, ref_start, ref_slope, ref_tau, use_filter)

            p1 = x1 + h * c1; p2 = x2 + h * c2; p3 = x3 + h * c3
            p4 = e1 + h * c4; p5 = e2 + h * c5; p6 = e3 + h * c6
            p7 = e4 + h * c7; p8 = rf + h * c8
            yvf = held if feed_code == FEED_DEMOD else p1
            d1, d2, d3, d4, d5, d6, d7, d8 = _rhs(
                t + h, p1, p2, p3, p4, p5, p6, p7, p8, yvf, sv4, d_now,
                k1, k2, k3, kd, kref, l1, l2, l3, ld,
                ref_level, ref_start, ref_slope, ref_tau, use_filter)

            w6 = h / 6.0
            x1 += w6 * (a1 + 2.0 * (b1 + c1) + d1)
            x2 += w6 * (a2 + 2.0 * (b2 + c2) + d2)
            x3 += w6 * (a3 + 2.0 * (b3 + c3) + d3)
            e1 += w6 * (a4 + 2.0 * (b4 + c4) + d4)
            e2 += w6 * (a5 + 2.0 * (b5 + c5) + d5)
            e3 += w6 * (a6 + 2.0 * (b6 + c6) + d6)
            e4 += w6 * (a7 + 2.0 * (b7 + c7) + d7)
            rf += w6 * (a8 + 2.0 * (b8 + c8) + d8)

        tk = k * h
        y = x2 + x1 * x3
        if has_noise:
            y += noise[k]

        # --- demodulator push (trapezoid window sums, see demod module) ---
        idx = k % cap
        y_drop = y_ring[idx] if k >= cap else 0.0
        w_drop = w_ring[idx] if k >= cap else 0.0
        y_ring[idx] = y
        sum_y += y - y_drop
        ybar_valid = k >= N
        if ybar_valid:
            y_head = y_ring[(k - N) % cap]
            ybar_now = (sum_y - 0.5 * (y_head + y)) / N
        w = 0.0
        if ybar_valid:
            y_lag = y_ring[(k - M) % cap]
            w = (y_lag - ybar_now) * S_tab[(k - M) % m]
        w_ring[idx] = w
        sum_w += w - w_drop
        yv_valid = k >= 2 * N and den > 0.0
        if yv_valid:
            w_head = w_ring[(k - N) % cap]
            yv_now = (sum_w - 0.5 * (w_head + w)) / N / (den * eps)
        valid_now = 2.0 if yv_valid else (1.0 if ybar_valid else 0.0)

        # --- record ---
        rr = ref_level
        if tk > ref_start:
            rr += ref_slope * (tk - ref_start)
        ref_out = rf if use_filter else rr
        u_rec = -(k1 * e1 + k2 * e2 + k3 * e3) - kd * e4 + kref * ref_out
        out[k, COL_T] = tk
        out[k, COL_X1] = x1
        out[k, COL_X2] = x2
        out[k, COL_X3] = x3
        out[k, COL_XH1] = e1
        out[k, COL_XH2] = e2
        out[k, COL_XH3] = e3
        out[k, COL_DH] = e4
        out[k, COL_REF] = ref_out
        out[k, COL_U] = u_rec
        out[k, COL_Y] = y
        out[k, COL_YBAR] = ybar_now if ybar_valid else 0.0
        out[k, COL_YV] = yv_now
        out[k, COL_VALID] = valid_now

        if not np.isfinite(x1 + x2 + x3 + e1 + e2 + e3 + e4 + rf):
            return k
    return -1
