"""Command-line front end for the risk lab.

One command, config-driven.  The default action runs the full risk study
over every ``[[scenario]]`` in the config and writes ``risk.csv`` plus
the selected-index histogram ``khat.csv``.  ``--suite`` runs one
diagnostic suite instead; ``--trace N`` runs a single replication at
sample size N and dumps the per-candidate selection trace along with the
simulated path.

Exit codes: 0 success, 2 malformed config, 3 invalid numeric input,
4 bound-check failure under ``--strict``.
"""

from __future__ import annotations

import os
import sys
from dataclasses import replace

import click

from .adaptive import adaptive_estimate, build_grid
from .config import ConfigError, FieldError, load_config
from .process import PathConfig, simulate_path, substream_seed
from .reports import (
    write_grid_csv,
    write_khat_csv,
    write_lowerbound_csv,
    write_moments_csv,
    write_path_csv,
    write_risk_csv,
    write_stopping_csv,
    write_tail_csv,
    write_trace_csv,
)
from .risklab import (
    DOMAIN_TRACE,
    RiskExperiment,
    lower_bound_diagnostic,
    moment_suite,
    monte_carlo_risk,
    stopping_suite,
    tail_suite,
)

_SUITES = ("tail", "moments", "stopping", "lowerbound", "grid")


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _wrote(path: str):
    click.echo(f"wrote {path}")


def _first_scenario(cfg, what: str):
    if not cfg.scenarios:
        raise ConfigError(f"{what} needs at least one [[scenario]] in the config")
    return cfg.scenarios[0]


def _default_bandwidth(n: int, beta: float) -> float:
    import math

    d_n = n / math.log(n)
    return d_n ** (-1.0 / (2.0 * beta + 1.0))


def _run_risk(cfg, replications, workers):
    reports = []
    for i, sc in enumerate(cfg.scenarios):
        experiment = RiskExperiment(
            signal=sc.build_signal(),
            n_list=sc.n_list,
            replications=replications if replications is not None else sc.replications,
            beta_lo=sc.beta_lo,
            beta_hi=sc.beta_hi,
            holder_K=sc.holder_K,
            lam=sc.lam,
            master_seed=cfg.seed,
            scenario_id=i,
        )
        reports.append(monte_carlo_risk(experiment, workers=workers))
    risk_path = os.path.join(cfg.out_dir, "risk.csv")
    khat_path = os.path.join(cfg.out_dir, "khat.csv")
    write_risk_csv(risk_path, reports)
    write_khat_csv(khat_path, reports)
    _wrote(risk_path)
    _wrote(khat_path)


def _run_suite(cfg, suite, replications, workers, strict):
    failures = 0
    if suite == "tail":
        sc = _first_scenario(cfg, "the tail suite")
        signal = sc.build_signal()
        st = cfg.tail
        reps = replications if replications is not None else st.replications
        h = st.h if st.h is not None else _default_bandwidth(st.n, signal.beta)
        report = tail_suite(
            signal,
            st.n,
            h,
            reps,
            z_values=st.z_values,
            master_seed=cfg.seed,
            workers=workers,
        )
        out = os.path.join(cfg.out_dir, "tail.csv")
        write_tail_csv(out, report)
        _wrote(out)
        failures = sum(1 for row in report.rows if not row.passed)
    elif suite == "moments":
        sc = _first_scenario(cfg, "the moment suite")
        st = cfg.moments
        reps = replications if replications is not None else st.replications
        report = moment_suite(
            sc.build_signal(), st.n, reps, master_seed=cfg.seed, workers=workers
        )
        out = os.path.join(cfg.out_dir, "moments.csv")
        write_moments_csv(out, report)
        _wrote(out)
        failures = sum(1 for row in report.rows if not row.passed)
    elif suite == "stopping":
        sc = _first_scenario(cfg, "the stopping suite")
        st = cfg.stopping
        reps = replications if replications is not None else st.replications
        report = stopping_suite(
            sc.build_signal(),
            st.n_list,
            st.h_list,
            reps,
            master_seed=cfg.seed,
            workers=workers,
        )
        out = os.path.join(cfg.out_dir, "stopping.csv")
        write_stopping_csv(out, report)
        _wrote(out)
    elif suite == "lowerbound":
        st = cfg.lowerbound
        reps = replications if replications is not None else st.replications
        if cfg.scenarios:
            sc = cfg.scenarios[0]
            beta_lo, beta_hi, z0 = sc.beta_lo, sc.beta_hi, sc.z0
        else:
            beta_lo, beta_hi, z0 = 0.6, 0.8, 0.5
        diag = lower_bound_diagnostic(
            beta_lo,
            beta_hi,
            st.n,
            reps,
            z0=z0,
            master_seed=cfg.seed,
            workers=workers,
        )
        out = os.path.join(cfg.out_dir, "lowerbound.csv")
        write_lowerbound_csv(out, diag)
        _wrote(out)
    elif suite == "grid":
        sc = _first_scenario(cfg, "the grid listing")
        grids = [
            build_grid(n, sc.beta_lo, sc.beta_hi, sc.lam, sc.holder_K)
            for n in sc.n_list
        ]
        out = os.path.join(cfg.out_dir, "grid.csv")
        write_grid_csv(out, grids)
        _wrote(out)
    if strict and failures:
        _fail(f"strict mode: {failures} bound check(s) failed in suite '{suite}'", 4)


def _run_trace(cfg, trace_n, workers):
    sc = _first_scenario(cfg, "tracing")
    if trace_n < 3:
        raise ValueError(f"--trace sample size must be >= 3, got {trace_n}")
    signal = sc.build_signal()
    grid = build_grid(trace_n, sc.beta_lo, sc.beta_hi, sc.lam, sc.holder_K)
    stream_seed = substream_seed(cfg.seed, DOMAIN_TRACE, 0, trace_n)
    path = simulate_path(
        signal, PathConfig(n=trace_n, seed=stream_seed, replication_index=0)
    )
    result = adaptive_estimate(path, signal.z0, grid)
    trace_path = os.path.join(cfg.out_dir, "trace.csv")
    path_path = os.path.join(cfg.out_dir, "path.csv")
    write_trace_csv(trace_path, result)
    write_path_csv(path_path, path)
    _wrote(trace_path)
    _wrote(path_path)


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Experiment configuration (TOML).",
)
@click.option(
    "--suite",
    type=click.Choice(_SUITES),
    default=None,
    help="Run one diagnostic suite instead of the risk study.",
)
@click.option(
    "--trace",
    "trace_n",
    type=int,
    default=None,
    help="Trace one replication at this sample size and dump the selection ladder.",
)
@click.option(
    "--replications",
    type=int,
    default=None,
    help="Override the replication count from the config.",
)
@click.option("--workers", type=int, default=1, help="Worker processes (default 1).")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option(
    "--strict",
    is_flag=True,
    help="Exit 4 when a suite reports a failed bound check.",
)
def main(config_path, suite, trace_n, replications, workers, seed, strict):
    """Run the sequential-estimator risk study described by a config file."""
    if suite is not None and trace_n is not None:
        raise click.UsageError("--suite and --trace are mutually exclusive")
    if replications is not None and replications < 1:
        _fail(f"--replications must be >= 1, got {replications}", 3)
    if workers < 1:
        _fail(f"--workers must be >= 1, got {workers}", 3)
    if seed is not None and not (0 <= seed < 2**64):
        _fail(f"--seed must lie in [0, 2**64), got {seed}", 3)
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        _fail(str(exc), 2)
    except FieldError as exc:
        _fail(str(exc), 3)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    try:
        if trace_n is not None:
            _run_trace(cfg, trace_n, workers)
        elif suite is not None:
            _run_suite(cfg, suite, replications, workers, strict)
        else:
            _run_risk(cfg, replications, workers)
    except ConfigError as exc:
        _fail(str(exc), 2)
    except (FieldError, ValueError) as exc:
        _fail(str(exc), 3)


if __name__ == "__main__":
    main()
