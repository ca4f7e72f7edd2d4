"""Command-line front end: ``injectlab {run,sweep,noise} CONFIG OUTDIR``.

Verbs
-----
run
    Integrate one scenario from a config file; writes ``trajectory.csv``
    (header + one row per emitted step, 17 significant digits) and a
    ``metrics.txt`` sidecar with the summary block in config syntax.
sweep
    Order study over the ``epsilons`` config key (comma list, strictly
    decreasing): paired injected/averaged runs plus estimator probes per
    epsilon; writes ``order_study.csv`` and the fitted slopes to
    ``metrics.txt``.  Rows are integrated by independent workers and merged
    in the caller's epsilon order, so output is deterministic.
noise
    Open-loop estimator noise floors for the configured waveform and noise
    spec (plus doubled-window and doubled-amplitude variants) over
    ``duration`` seconds (default 40); writes ``noise_study.csv`` and the
    predicted/measured variances to ``metrics.txt``.

Exit codes: 0 success, 2 configuration problem (unreadable file, bad key or
value, invalid sweep list), 3 numerical failure (non-finite state during
integration).  Output-directory write errors also exit 2.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .averaging import theorem_order_study
from .demod import DemodConfig
from .io import (
    emit_csv,
    emit_noise_table,
    emit_order_table,
    load_config,
    noise_metrics,
    order_fit_metrics,
    scenario_from_config,
    write_metrics,
)
from .noise import noise_study
from .scenario import ConfigError, NumericalFailure, run_scenario

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="injectlab",
        description="Closed-loop probing-signal experiments: single runs, "
                    "epsilon order sweeps, and estimator noise studies.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, blurb in (
        ("run", "integrate one scenario and emit trajectory + metrics"),
        ("sweep", "order study across the 'epsilons' list"),
        ("noise", "estimator noise floors vs. predictions"),
    ):
        sp = sub.add_parser(verb, help=blurb)
        sp.add_argument("config", type=Path, help="flat key=value config file")
        sp.add_argument("outdir", type=Path, help="directory for result files")
    return parser


def _cmd_run(cfg: dict[str, str], outdir: Path) -> None:
    scenario = scenario_from_config(cfg)
    result = run_scenario(scenario)
    emit_csv(result, outdir / "trajectory.csv")
    write_metrics(outdir / "metrics.txt", result.metrics)


def _cmd_sweep(cfg: dict[str, str], outdir: Path) -> None:
    if "epsilons" not in cfg:
        raise ConfigError("epsilons", "required for sweep (comma list)")
    try:
        epsilons = [float(p) for p in cfg["epsilons"].split(",") if p.strip()]
    except ValueError:
        raise ConfigError("epsilons", "expected comma-separated numbers") from None
    base = scenario_from_config(cfg, reserved=("epsilons",))
    try:
        study = theorem_order_study(base, epsilons,
                                    max_workers=os.cpu_count() or 1)
    except ValueError as exc:
        raise ConfigError("epsilons", str(exc)) from exc
    emit_order_table(study, outdir / "order_study.csv")
    write_metrics(outdir / "metrics.txt", order_fit_metrics(study))


def _cmd_noise(cfg: dict[str, str], outdir: Path) -> None:
    try:
        duration = float(cfg.get("duration", "40.0"))
    except ValueError:
        raise ConfigError("duration", "expected a number") from None
    scenario = scenario_from_config(cfg, reserved=("duration",))
    if scenario.noise is None:
        raise ConfigError("noise_power", "noise study needs a noise spec")
    # Demodulate on the integrator grid (the noise is held onto it), exactly
    # as the closed loop does; the held sample time rarely divides eps/4.
    config = DemodConfig(
        epsilon=scenario.epsilon,
        n_periods=scenario.n_periods,
        sample_step=scenario.step,
        signal=scenario.signal,
    )
    rows = noise_study(config, scenario.noise, duration)
    emit_noise_table(rows, outdir / "noise_study.csv")
    write_metrics(outdir / "metrics.txt", noise_metrics(rows))


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "noise": _cmd_noise}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        args.outdir.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.verb](cfg, args.outdir)
    except ConfigError as exc:
        print(f"injectlab: config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"injectlab: error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"injectlab: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
