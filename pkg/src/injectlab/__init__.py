"""Virtual-output feedback through periodic probing-signal injection.

A small numerical laboratory for one idea: superimpose a fast zero-mean
waveform on the control of a single-input single-output nonlinear system,
and the measured output picks up a ripple whose amplitude is proportional
to the output's derivative along the input direction.  Demodulating that
ripple yields a *virtual output* — a signal that is not physically measured
but becomes available for feedback — at the price of an O(eps) ripple on
the state and a processing delay of one demodulation window.

The package provides:

- waveform primitives and their exact moments (:mod:`injectlab.signals`);
- a fixed-step RK4 integrator with trajectory recording
  (:mod:`injectlab.integrate`);
- the third-order example plant with its product-form output and a
  disturbance-estimating observer/controller synthesis
  (:mod:`injectlab.plant`, :mod:`injectlab.synthesis`);
- sliding-window demodulation estimators, batch and streaming
  (:mod:`injectlab.demod`);
- measurement-noise generation and estimator noise-floor predictions
  (:mod:`injectlab.noise`);
- the closed-loop scenario runner (:mod:`injectlab.scenario`), the
  averaging-comparison studies (:mod:`injectlab.averaging`), and the
  config/CSV plumbing plus CLI (:mod:`injectlab.io`, :mod:`injectlab.cli`).
"""
from .averaging import (
    LongHorizonReport,
    OrderFit,
    OrderStudy,
    PairedRun,
    ResidualSups,
    fit_order,
    long_horizon_bound,
    residual_series,
    ripple_residual,
    run_theorem_pair,
    theorem_order_study,
    window_ratio,
)
from .demod import (
    DemodConfig,
    DemodResult,
    DemodSample,
    EstimatorProbe,
    SlidingDemodulator,
    batch_demodulate,
    estimator_order_probe,
)
from .integrate import TimeGrid, Trajectory, rk4_step, simulate
from .io import (
    emit_csv,
    load_config,
    parse_config_text,
    read_csv,
    read_metrics,
    scenario_from_config,
    write_metrics,
)
from .noise import (
    NoiseMeasurement,
    NoiseSpec,
    NoiseStudyRow,
    generate_noise,
    hold_on_grid,
    measure_estimator_noise,
    noise_study,
    predicted_output_noise_var,
    predicted_virtual_noise_var,
    sliding_average_gain,
)
from .plant import ObservabilityReport, Plant, example_plant, observability_report
from .scenario import (
    CSV_COLUMNS,
    FEEDBACK_SOURCES,
    ConfigError,
    NumericalFailure,
    Reference,
    RunResult,
    Scenario,
    compute_metrics,
    run_feedback_pair,
    run_scenario,
)
from .signals import PeriodicSignal, signal_from_callable
from .synthesis import (
    DEFAULT_CONTROLLER_POLES,
    DEFAULT_OBSERVER_POLES,
    Compensator,
    compensator_step,
    control_law,
    default_compensator,
    injected_control,
    place_controller_gains,
    place_observer_gains,
)

__version__ = "0.1.0"

__all__ = [
    "CSV_COLUMNS",
    "Compensator",
    "ConfigError",
    "DEFAULT_CONTROLLER_POLES",
    "DEFAULT_OBSERVER_POLES",
    "DemodConfig",
    "DemodResult",
    "DemodSample",
    "EstimatorProbe",
    "FEEDBACK_SOURCES",
    "LongHorizonReport",
    "NoiseMeasurement",
    "NoiseSpec",
    "NoiseStudyRow",
    "NumericalFailure",
    "ObservabilityReport",
    "OrderFit",
    "OrderStudy",
    "PairedRun",
    "PeriodicSignal",
    "Plant",
    "Reference",
    "ResidualSups",
    "RunResult",
    "Scenario",
    "SlidingDemodulator",
    "TimeGrid",
    "Trajectory",
    "batch_demodulate",
    "compensator_step",
    "compute_metrics",
    "control_law",
    "default_compensator",
    "emit_csv",
    "estimator_order_probe",
    "example_plant",
    "fit_order",
    "generate_noise",
    "hold_on_grid",
    "injected_control",
    "load_config",
    "long_horizon_bound",
    "measure_estimator_noise",
    "noise_study",
    "observability_report",
    "parse_config_text",
    "place_controller_gains",
    "place_observer_gains",
    "predicted_output_noise_var",
    "predicted_virtual_noise_var",
    "read_csv",
    "read_metrics",
    "residual_series",
    "ripple_residual",
    "rk4_step",
    "run_feedback_pair",
    "run_scenario",
    "run_theorem_pair",
    "scenario_from_config",
    "signal_from_callable",
    "simulate",
    "sliding_average_gain",
    "theorem_order_study",
    "window_ratio",
    "write_metrics",
]
