"""Paired-run verification of the averaging error structure.

The key claims this module measures: with a fast zero-mean injection of
period eps, the injected closed loop differs from the uninjected (averaged)
loop by a first-order ripple eps * g(xbar) * S(t/eps) on the plant state
while the compensator state and the ripple-corrected quantities stay within
O(eps^2), uniformly on long horizons.

A paired run integrates the two loops from identical initial conditions on
identical grids — the only difference is the injection amplitude — and the
residual series quantify the comparison pointwise.  Order fits over an
eps-sweep turn the O(.) symbols into measured log-log slopes, and window
ratios over a long horizon check that nothing grows secularly.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .demod import DemodConfig, estimator_order_probe
from .scenario import RunResult, Scenario, run_scenario
from .signals import PeriodicSignal

__all__ = [
    "PairedRun",
    "run_theorem_pair",
    "residual_series",
    "ResidualSups",
    "ripple_residual",
    "window_ratio",
    "LongHorizonReport",
    "long_horizon_bound",
    "OrderFit",
    "fit_order",
    "OrderStudy",
    "theorem_order_study",
]

RESIDUAL_NAMES = ("raw_x", "corrected_x", "eta", "corrected_y")


@dataclass
class PairedRun:
    """Injected and amplitude-zero runs of the same scenario."""

    epsilon: float
    signal: PeriodicSignal
    h_step: float
    t: np.ndarray
    x_inj: np.ndarray
    eta_inj: np.ndarray
    y_inj: np.ndarray
    x_avg: np.ndarray
    eta_avg: np.ndarray
    y_avg: np.ndarray

    @classmethod
    def from_runs(cls, injected: RunResult, averaged: RunResult) -> "PairedRun":
        scn = injected.scenario
        return cls(
            epsilon=scn.epsilon,
            signal=scn.signal,
            h_step=scn.step,
            t=injected.t,
            x_inj=injected.x,
            eta_inj=injected.eta,
            y_inj=injected.column("y"),
            x_avg=averaged.x,
            eta_avg=averaged.eta,
            y_avg=averaged.column("y"),
        )


def run_theorem_pair(scn: Scenario) -> PairedRun:
    """Integrate the injected loop and its averaged reference.

    Both runs feed the exact virtual output x1 to the compensator — the
    comparison isolates what injection does to the trajectories, with the
    demodulation path deliberately out of the loop.  Noise would confound
    the residuals, so noisy scenarios are rejected.
    """
    if scn.noise is not None:
        raise ValueError("paired averaging runs must be noiseless")
    injected = run_scenario(replace(scn, feedback_source="true_x1"))
    averaged = run_scenario(replace(scn, amplitude=0.0, feedback_source="true_x1"))
    return PairedRun.from_runs(injected, averaged)


def residual_series(pr: PairedRun) -> dict[str, np.ndarray]:
    """Pointwise residuals (max over components) of the paired comparison.

    ``raw_x``: |x - xbar|; ``corrected_x``: the same after subtracting the
    predicted ripple eps*g(xbar)*S(t/eps); ``eta``: |eta - etabar|;
    ``corrected_y``: |y - h(xbar) - eps*Lgh(xbar)*S(t/eps)|.  The carrier is
    sampled by grid index, so waveform phases are exact.
    """
    m = round(pr.epsilon / pr.h_step)
    _, S_tab = pr.signal.tables(m)
    S = S_tab[np.arange(pr.t.size) % m]

    dx = pr.x_inj - pr.x_avg
    raw_x = np.max(np.abs(dx), axis=1)
    # the input channel is the constant e3, so the ripple lives on x3 only
    dx[:, 2] -= pr.epsilon * S
    corrected_x = np.max(np.abs(dx), axis=1)
    eta = np.max(np.abs(pr.eta_inj - pr.eta_avg), axis=1)
    corrected_y = np.abs(pr.y_inj - pr.y_avg - pr.epsilon * pr.x_avg[:, 0] * S)
    return {
        "raw_x": raw_x,
        "corrected_x": corrected_x,
        "eta": eta,
        "corrected_y": corrected_y,
    }


@dataclass(frozen=True)
class ResidualSups:
    sup_x_raw: float
    sup_x_corrected: float
    sup_eta: float
    sup_y_corrected: float


def ripple_residual(pr: PairedRun, skip_time: float = 0.0) -> ResidualSups:
    """Sup-norms of the four residual series, past an initial exclusion.

    ``skip_time`` (typically one demodulation window n*eps) discards the
    start-up samples where the initial-condition alignment is still settling.
    """
    series = residual_series(pr)
    keep = pr.t >= pr.t[0] + skip_time
    return ResidualSups(
        sup_x_raw=float(series["raw_x"][keep].max()),
        sup_x_corrected=float(series["corrected_x"][keep].max()),
        sup_eta=float(series["eta"][keep].max()),
        sup_y_corrected=float(series["corrected_y"][keep].max()),
    )


def window_ratio(t: np.ndarray, series: np.ndarray,
                 skip_time: float = 0.0, fraction: float = 0.1) -> float:
    """Sup over the last ``fraction`` of the horizon divided by sup over the
    first ``fraction`` (taken after ``skip_time``).  Both-zero windows count
    as ratio 1 (identical runs)."""
    t0 = t[0] + skip_time
    t1 = t[-1]
    span = t1 - t0
    head = series[(t >= t0) & (t <= t0 + fraction * span)]
    tail = series[t >= t1 - fraction * span]
    first = float(head.max())
    last = float(tail.max())
    if first == 0.0:
        return 1.0 if last == 0.0 else float("inf")
    return last / first


@dataclass(frozen=True)
class LongHorizonReport:
    """Secular-growth check: last-window vs first-window residual ratios."""

    ratios: dict[str, float]
    diverged: bool


def long_horizon_bound(pr: PairedRun, skip_time: float = 0.0,
                       fraction: float = 0.1) -> LongHorizonReport:
    """Ratio of late to early residual sups for every residual series.

    A bounded comparison keeps every ratio near 1; secular growth (or an
    unstable loop) drives them up.  Non-finite residuals or ratios beyond
    100 are reported as divergence rather than a usable bound.
    """
    series = residual_series(pr)
    ratios = {name: window_ratio(pr.t, s, skip_time, fraction)
              for name, s in series.items()}
    finite = all(np.isfinite(s).all() for s in series.values())
    diverged = (not finite) or any(r > 100.0 for r in ratios.values())
    return LongHorizonReport(ratios=ratios, diverged=diverged)


@dataclass(frozen=True)
class OrderFit:
    """Least-squares log-log slope of error against eps."""

    epsilons: np.ndarray  # strictly decreasing
    errors: np.ndarray
    slope: float
    r_squared: float
    usable: bool  # False when any error sits at/below 10x the noise floor

    def __str__(self) -> str:  # convenient in study tables
        flag = "" if self.usable else " (floor-limited)"
        return f"slope {self.slope:+.3f} (r^2 {self.r_squared:.5f}){flag}"


def fit_order(epsilons, errors, floor: float = 0.0) -> OrderFit:
    """Fit log(error) = slope*log(eps) + c over an eps sweep.

    Requires at least three strictly decreasing eps levels.  Errors at or
    below ten times ``floor`` cannot be trusted to reflect the asymptotic
    order and mark the fit unusable (they are not silently dropped).
    """
    eps = np.asarray(epsilons, dtype=float)
    err = np.asarray(errors, dtype=float)
    if eps.size < 3 or eps.size != err.size:
        raise ValueError("need at least three (epsilon, error) pairs")
    if not np.all(np.diff(eps) < 0.0):
        raise ValueError("epsilons must be strictly decreasing")
    if not (np.all(np.isfinite(err)) and np.all(err > 0.0)):
        raise ValueError("errors must be positive and finite")
    slope, intercept = np.polyfit(np.log(eps), np.log(err), 1)
    pred = slope * np.log(eps) + intercept
    resid = np.log(err) - pred
    total = np.log(err) - np.log(err).mean()
    denom = float(total @ total)
    r_sq = 1.0 - float(resid @ resid) / denom if denom > 0.0 else 1.0
    usable = bool(np.all(err > 10.0 * floor))
    return OrderFit(epsilons=eps, errors=err, slope=float(slope),
                    r_squared=r_sq, usable=usable)


@dataclass
class OrderStudy:
    """Residual sups, boundedness ratios and estimator-probe errors per eps,
    with order fits for each quantity."""

    epsilons: np.ndarray
    table: dict[str, np.ndarray]  # column name -> one value per eps
    fits: dict[str, OrderFit]

    FIT_COLUMNS = ("sup_x_raw", "sup_x_corrected", "sup_eta", "sup_y_corrected",
                   "err_ybar", "err_yv")


_STUDY_COLUMNS = (
    "sup_x_raw", "sup_x_corrected", "sup_eta", "sup_y_corrected",
    "ratio_x_raw", "ratio_x_corrected", "ratio_eta", "ratio_y_corrected",
    "err_ybar", "err_yv", "err_yv_simple",
)


def _study_row(base: Scenario, eps: float) -> dict[str, float]:
    """One epsilon's residual sups, late/early ratios and probe errors."""
    scn = replace(base, epsilon=eps, h_step=None)
    pair = run_theorem_pair(scn)
    skip = scn.n_periods * eps
    sups = ripple_residual(pair, skip_time=skip)
    report = long_horizon_bound(pair, skip_time=skip)
    del pair
    probe = estimator_order_probe(DemodConfig(
        epsilon=eps, n_periods=scn.n_periods, sample_step=eps / 20.0,
        signal=scn.signal))
    return {
        "sup_x_raw": sups.sup_x_raw,
        "sup_x_corrected": sups.sup_x_corrected,
        "sup_eta": sups.sup_eta,
        "sup_y_corrected": sups.sup_y_corrected,
        "ratio_x_raw": report.ratios["raw_x"],
        "ratio_x_corrected": report.ratios["corrected_x"],
        "ratio_eta": report.ratios["eta"],
        "ratio_y_corrected": report.ratios["corrected_y"],
        "err_ybar": probe.err_ybar,
        "err_yv": probe.err_yv,
        "err_yv_simple": probe.err_yv_simple,
    }


def theorem_order_study(base: Scenario, epsilons,
                        max_workers: int = 1) -> OrderStudy:
    """Run the paired comparison and estimator probe across an eps sweep.

    Each eps gets its default grid (h = eps/100) and a skip of one
    demodulation window; each pair is reduced to its residual statistics
    immediately to bound memory.  Rows are independent — ``max_workers > 1``
    computes them in a thread pool (the integration kernel releases the
    GIL) and the table is always assembled in the caller's eps order, so
    the result is identical either way.  The estimator probe runs on its
    own coarser grid (eps/20) — its errors depend only on the demod
    geometry, not on the loop integration step.
    """
    eps_list = [float(e) for e in epsilons]
    if len(eps_list) < 3:
        raise ValueError("order study needs at least three epsilons")
    if sorted(set(eps_list), reverse=True) != eps_list:
        raise ValueError("epsilons must be unique and strictly decreasing")
    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(lambda e: _study_row(base, e), eps_list))
    else:
        rows = [_study_row(base, eps) for eps in eps_list]
    eps_arr = np.array(eps_list)
    table = {name: np.array([row[name] for row in rows])
             for name in _STUDY_COLUMNS}
    fits = {name: fit_order(eps_arr, table[name]) for name in OrderStudy.FIT_COLUMNS}
    return OrderStudy(epsilons=eps_arr, table=table, fits=fits)
