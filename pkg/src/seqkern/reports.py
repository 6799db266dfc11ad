"""CSV emission for risk tables, diagnostics, and traces.

Floats are written with 17 significant digits (round-trip exact for
binary64), line endings are always ``\\n``, and every writer emits rows
in a fixed order -- so a table produced from the same config, seed, and
replication count is byte-identical across runs, platforms, and worker
counts.  Context that does not fit a table's columns (effective lambda,
sample sizes, conditional statistics) appears as ``#`` comment lines
above the header.
"""

from __future__ import annotations

import os


def fmt(x) -> str:
    """Render one float with 17 significant digits."""
    return "%.17g" % float(x)


def _fmt_bool(b) -> str:
    return "true" if b else "false"


def _open_out(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="\n")


RISK_HEADER = "scenario_id,n,M,beta,z0,lambda,R_n,stderr,rate_N,normalized,khat_mode"


def write_risk_csv(path, reports) -> None:
    """One row per (scenario, sample size) across all risk reports."""
    with _open_out(path) as f:
        f.write(RISK_HEADER + "\n")
        for report in reports:
            for row in report.rows:
                f.write(
                    ",".join(
                        [
                            str(row.scenario_id),
                            str(row.n),
                            str(row.replications),
                            fmt(row.beta),
                            fmt(row.z0),
                            fmt(row.lam),
                            fmt(row.risk),
                            fmt(row.stderr),
                            fmt(row.rate),
                            fmt(row.normalized),
                            str(row.khat_mode),
                        ]
                    )
                    + "\n"
                )


def write_khat_csv(path, reports) -> None:
    """Selected-index histograms: one row per (scenario, n, index)."""
    with _open_out(path) as f:
        f.write("scenario_id,n,k,count\n")
        for report in reports:
            for row in report.rows:
                for k in sorted(row.khat_counts):
                    f.write(f"{row.scenario_id},{row.n},{k},{row.khat_counts[k]}\n")


def write_tail_csv(path, report) -> None:
    with _open_out(path) as f:
        f.write(f"# n={report.n} h={fmt(report.h)} H={fmt(report.threshold)} M={report.replications}\n")
        f.write(f"# triggered_fraction={fmt(report.triggered_fraction)} var_noise={fmt(report.var_noise)}\n")
        f.write("z,bound,empirical,margin,pass\n")
        for row in report.rows:
            f.write(
                f"{fmt(row.z)},{fmt(row.bound)},{fmt(row.empirical)},"
                f"{fmt(row.margin)},{_fmt_bool(row.passed)}\n"
            )


def write_moments_csv(path, report) -> None:
    with _open_out(path) as f:
        f.write(f"# n={report.n} M={report.replications} eps={fmt(report.eps)}\n")
        f.write("k,order,bound,empirical,pass\n")
        for row in report.rows:
            f.write(
                f"{row.k},{row.order},{fmt(row.bound)},{fmt(row.empirical)},"
                f"{_fmt_bool(row.passed)}\n"
            )


def write_stopping_csv(path, report) -> None:
    with _open_out(path) as f:
        f.write("n,h,H,M,untriggered_freq,mean_tau\n")
        for row in report.rows:
            f.write(
                f"{row.n},{fmt(row.h)},{fmt(row.threshold)},{row.replications},"
                f"{fmt(row.untriggered_freq)},{fmt(row.mean_tau)}\n"
            )


def write_lowerbound_csv(path, diag) -> None:
    with _open_out(path) as f:
        f.write(
            f"# beta_lo={fmt(diag.beta_lo)} beta_hi={fmt(diag.beta_hi)} "
            f"beta_bar={fmt(diag.beta_bar)} width={fmt(diag.width)}\n"
        )
        f.write(
            f"# h_star={fmt(diag.h_star)} N_star={fmt(diag.N_star)} "
            f"rejected={diag.rejected}\n"
        )
        f.write("n,M,beta_bar_half,mean_varsigma,eta_mean,eta_var\n")
        f.write(
            f"{diag.n},{diag.replications},{fmt(diag.sigma_star_sq)},"
            f"{fmt(diag.mean_varsigma)},{fmt(diag.eta_mean)},{fmt(diag.eta_var)}\n"
        )


def write_grid_csv(path, grids) -> None:
    """Candidate ladders for a list of grids, one row per (n, candidate)."""
    with _open_out(path) as f:
        if grids:
            f.write(f"# lambda={fmt(grids[0].lam)}\n")
        f.write("n,j,beta_j,h_j,N_j,H_j,threshold_j\n")
        for grid in grids:
            budgets = grid.information_thresholds()
            thresholds = grid.thresholds
            for j in range(grid.m + 1):
                f.write(
                    f"{grid.n},{j},{fmt(grid.beta_points[j])},{fmt(grid.h_points[j])},"
                    f"{fmt(grid.N_points[j])},{fmt(budgets[j])},{fmt(thresholds[j])}\n"
                )


def write_trace_csv(path, adaptive) -> None:
    """Per-candidate trace of one adaptive estimation, with the selection."""
    grid = adaptive.grid
    with _open_out(path) as f:
        f.write(f"# lambda={fmt(grid.lam)}\n")
        f.write("j,beta_j,h_j,N_j,H_j,estimate_j,omega_j,threshold_j\n")
        budgets = grid.information_thresholds()
        thresholds = grid.thresholds
        for j in range(grid.m + 1):
            f.write(
                f"{j},{fmt(grid.beta_points[j])},{fmt(grid.h_points[j])},"
                f"{fmt(grid.N_points[j])},{fmt(budgets[j])},"
                f"{fmt(adaptive.grid_estimates[j].value)},"
                f"{fmt(adaptive.omega_values[j])},{fmt(thresholds[j])}\n"
            )
        f.write(f"# k_hat={adaptive.k_hat} value={fmt(adaptive.value)}\n")


def write_path_csv(path, sim_path) -> None:
    """Dump one simulated trajectory as (k, x_k, y_k) rows."""
    n = sim_path.n
    with _open_out(path) as f:
        f.write("k,x_k,y_k\n")
        for k in range(n + 1):
            f.write(f"{k},{fmt(k / n)},{fmt(sim_path.values[k])}\n")
