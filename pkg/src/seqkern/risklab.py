"""Monte Carlo risk studies and bound-checking suites.

Everything here reduces batched engine output to tables: absolute-error
risk of the adaptive estimator across sample sizes, tail frequencies of
the standardized noise term against its Gaussian-type bound, process
moments against their stationarity bounds, stopping-failure frequencies,
and a window-energy diagnostic for the construction used in efficiency
(lower-bound) arguments.

Reduction discipline: per-replication values come out of the engine
bit-identical for any worker count, and every cross-replication reduction
is either ``math.fsum`` (exactly rounded, order-independent) or a
fixed-shape ``np.sum`` over block lanes -- so the tables are byte-stable.

Seed derivation: component ``d`` of a run with master seed ``s`` uses
``substream_seed(s, d, *indices)`` with a fixed domain number per
component (risk 0, tail 1, moments 2, stopping 3, lower bound 4, trace
5), so components never share or shift each other's noise.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .adaptive import BandwidthGrid, build_grid, select_indices
from .engine import (
    BlockRequest,
    SequentialJob,
    WeightedSumJob,
    block_size,
    map_blocks,
    partition,
)
from .estimator import make_window
from .process import signal_values, substream_seed
from .signals import SignalFunction

DOMAIN_RISK = 0
DOMAIN_TAIL = 1
DOMAIN_MOMENTS = 2
DOMAIN_STOPPING = 3
DOMAIN_LOWERBOUND = 4
DOMAIN_TRACE = 5


def _mean_std(values) -> tuple[float, float]:
    """Exactly-rounded sample mean and standard deviation (ddof=1)."""
    vals = [float(v) for v in values]
    if not vals:
        return 0.0, 0.0
    mean = math.fsum(vals) / len(vals)
    if len(vals) == 1:
        return mean, 0.0
    var = math.fsum((v - mean) * (v - mean) for v in vals) / (len(vals) - 1)
    return mean, math.sqrt(max(0.0, var))


def rate_normalizer(beta: float, n: int) -> float:
    """The convergence-rate factor N = (n / ln n) ** (beta / (2*beta + 1))."""
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if not (isinstance(n, int) and n >= 3):
        raise ValueError(f"n must be an integer >= 3, got {n}")
    d_n = n / math.log(n)
    return d_n ** (beta / (2.0 * beta + 1.0))


@dataclass(frozen=True)
class RiskExperiment:
    """One scenario of the risk study: a signal, sample sizes, and grid knobs."""

    signal: SignalFunction
    n_list: tuple
    replications: int
    beta_lo: float
    beta_hi: float
    holder_K: float = 1.0
    lam: Optional[float] = None
    master_seed: int = 0
    scenario_id: int = 0

    def __post_init__(self):
        if not self.n_list:
            raise ValueError("n_list must not be empty")
        for n in self.n_list:
            if not (isinstance(n, int) and n >= 3):
                raise ValueError(f"each n must be an integer >= 3, got {n}")
        if not (isinstance(self.replications, int) and self.replications >= 1):
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if not (0.0 < self.beta_lo < self.beta_hi <= 1.0):
            raise ValueError(
                f"need 0 < beta_lo < beta_hi <= 1, got ({self.beta_lo}, {self.beta_hi})"
            )


@dataclass(frozen=True)
class RiskRow:
    """Risk of the adaptive estimator at one sample size."""

    scenario_id: int
    n: int
    replications: int
    beta: float
    z0: float
    lam: float
    risk: float
    stderr: float
    rate: float
    normalized: float
    khat_mode: int
    khat_counts: dict = field(repr=False)


@dataclass(frozen=True)
class RiskReport:
    experiment: RiskExperiment
    rows: list


def _collect_values(results, attr="value"):
    """Stack one per-lane array per sequential job across blocks -> (M, jobs)."""
    cols = []
    for res in results:
        cols.append(np.column_stack([getattr(out, attr) for out in res.sequential]))
    return np.vstack(cols)


def monte_carlo_risk(experiment: RiskExperiment, workers: int = 1) -> RiskReport:
    """Mean absolute error of the adaptive estimator, per sample size.

    For each n: builds the bandwidth ladder, evaluates every candidate on
    every replication, applies the selection rule, and averages
    |chosen - S(z0)|.  Also tallies the selected-index histogram, whose
    mode lands in the risk table.
    """
    sig = experiment.signal
    target = float(sig(sig.z0))
    rows = []
    for n in experiment.n_list:
        grid = build_grid(
            n,
            experiment.beta_lo,
            experiment.beta_hi,
            lambda_override=experiment.lam,
            holder_K=experiment.holder_K,
        )
        windows = [make_window(n, sig.z0, float(h)) for h in grid.h_points]
        jobs = tuple(
            SequentialJob(w.k_lo, w.k_hi, float(n * grid.h_points[j]))
            for j, w in enumerate(windows)
        )
        seed = substream_seed(
            experiment.master_seed, DOMAIN_RISK, experiment.scenario_id, n
        )
        svals = signal_values(sig, n)
        requests = [
            BlockRequest(
                n=n,
                signal_values=svals,
                stream_seed=seed,
                rep_lo=lo,
                rep_hi=hi,
                sequential_jobs=jobs,
            )
            for lo, hi in partition(experiment.replications, block_size(n))
        ]
        results = map_blocks(requests, workers)
        values = _collect_values(results)
        k_hat, chosen = select_indices(values, grid)
        errors = np.abs(chosen - target)
        risk, spread = _mean_std(errors)
        counts = Counter(int(k) for k in k_hat)
        # Deterministic mode: highest count, smallest index on ties.
        mode = min(counts, key=lambda k: (-counts[k], k))
        rate = rate_normalizer(sig.beta, n)
        rows.append(
            RiskRow(
                scenario_id=experiment.scenario_id,
                n=n,
                replications=experiment.replications,
                beta=sig.beta,
                z0=sig.z0,
                lam=grid.lam,
                risk=risk,
                stderr=spread / math.sqrt(experiment.replications),
                rate=rate,
                normalized=rate * risk,
                khat_mode=mode,
                khat_counts=dict(sorted(counts.items())),
            )
        )
    return RiskReport(experiment=experiment, rows=rows)


def rate_stability(report: RiskReport) -> float:
    """Max/min ratio of rate-normalized risks across the report's sample sizes.

    Near one when the empirical risk tracks the theoretical rate; used as
    the headline stability figure for a scenario.
    """
    normalized = [row.normalized for row in report.rows]
    if not normalized:
        raise ValueError("report has no rows")
    lo, hi = min(normalized), max(normalized)
    if lo <= 0.0:
        raise ValueError("normalized risks must be positive for a stability ratio")
    return hi / lo


# ----------------------------------------------------------------- tail suite


@dataclass(frozen=True)
class TailRow:
    z: float
    bound: float
    empirical: float
    margin: float
    passed: bool


@dataclass(frozen=True)
class TailReport:
    n: int
    h: float
    threshold: float
    replications: int
    triggered_fraction: float
    var_noise: float
    rows: list


def tail_suite(
    signal: SignalFunction,
    n: int,
    h: float,
    replications: int,
    z_values: Sequence[float] = (2.0, 2.5, 3.0),
    master_seed: int = 0,
    workers: int = 1,
) -> TailReport:
    """Tail frequencies of the standardized noise term vs 2*exp(-z**2/8).

    The bound is distribution-free over the smoothness class but only
    valid for z >= 2; each empirical frequency is reported with a
    three-sigma binomial margin, and a row passes when frequency <=
    bound + margin.  Untriggered replications contribute zero noise (they
    cannot exceed any z >= 2) and their fraction is reported; a warning
    fires when fewer than half the replications trigger, since the
    conditional variance figure then rests on a thin sample.
    """
    for z in z_values:
        if not z >= 2.0:
            raise ValueError(f"tail levels must satisfy z >= 2, got {z}")
    if not (isinstance(n, int) and n >= 2):
        raise ValueError(f"n must be an integer >= 2, got {n}")
    if not h > 0.0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    if not (isinstance(replications, int) and replications >= 1):
        raise ValueError(f"replications must be >= 1, got {replications}")
    window = make_window(n, signal.z0, h)
    H = float(n * h)
    job = SequentialJob(window.k_lo, window.k_hi, H, collect_noise=True)
    seed = substream_seed(master_seed, DOMAIN_TAIL, n)
    svals = signal_values(signal, n)
    requests = [
        BlockRequest(
            n=n,
            signal_values=svals,
            stream_seed=seed,
            rep_lo=lo,
            rep_hi=hi,
            sequential_jobs=(job,),
        )
        for lo, hi in partition(replications, block_size(n))
    ]
    results = map_blocks(requests, workers)
    noise = np.concatenate([res.sequential[0].noise for res in results])
    triggered = np.concatenate([res.sequential[0].triggered for res in results])
    frac = int(np.count_nonzero(triggered)) / replications
    if frac < 0.5:
        warnings.warn(
            f"only {frac:.1%} of replications reached the information threshold; "
            "conditional noise statistics are unreliable",
            stacklevel=2,
        )
    if np.count_nonzero(triggered) >= 2:
        _, sd = _mean_std(noise[triggered])
        var_noise = sd * sd
    else:
        var_noise = float("nan")
    rows = []
    for z in z_values:
        bound = 2.0 * math.exp(-z * z / 8.0)
        count = int(np.count_nonzero(np.abs(noise) > z))
        emp = count / replications
        margin = 3.0 * math.sqrt(emp * (1.0 - emp) / replications)
        rows.append(
            TailRow(
                z=float(z),
                bound=bound,
                empirical=emp,
                margin=margin,
                passed=emp <= bound + margin,
            )
        )
    return TailReport(
        n=n,
        h=h,
        threshold=H,
        replications=replications,
        triggered_fraction=frac,
        var_noise=var_noise,
        rows=rows,
    )


# -------------------------------------------------------------- moment suite


@dataclass(frozen=True)
class MomentRow:
    k: int
    order: int
    bound: float
    empirical: float
    passed: bool


@dataclass(frozen=True)
class MomentReport:
    n: int
    replications: int
    eps: float
    mean_sq: np.ndarray
    mean_fourth: np.ndarray
    rows: list


def moment_suite(
    signal: SignalFunction,
    n: int,
    replications: int,
    master_seed: int = 0,
    workers: int = 1,
) -> MomentReport:
    """Empirical E y_k**2 and E y_k**4 against their stability-margin bounds.

    The bounds are (1/eps)**2 and 3*(1/eps)**4 with eps the signal's
    stability margin -- uniform in k and in the signal over its class.  A
    row passes when the empirical moment stays below its bound plus three
    standard errors.  Rows cover k = 1..n for both orders (y_0 is
    identically zero).
    """
    if not (isinstance(n, int) and n >= 2):
        raise ValueError(f"n must be an integer >= 2, got {n}")
    if not (isinstance(replications, int) and replications >= 1):
        raise ValueError(f"replications must be >= 1, got {replications}")
    seed = substream_seed(master_seed, DOMAIN_MOMENTS, n)
    svals = signal_values(signal, n)
    requests = [
        BlockRequest(
            n=n,
            signal_values=svals,
            stream_seed=seed,
            rep_lo=lo,
            rep_hi=hi,
            track_moments=True,
        )
        for lo, hi in partition(replications, block_size(n))
    ]
    results = map_blocks(requests, workers)
    M = replications
    totals = np.empty((3, n + 1))
    for row in range(3):
        for k in range(n + 1):
            totals[row, k] = math.fsum(float(res.moment_sums[row, k]) for res in results)
    mean_sq = totals[0] / M
    mean_fourth = totals[1] / M
    mean_eighth = totals[2] / M
    bound_sq = (1.0 / signal.eps) ** 2
    bound_fourth = 3.0 * (1.0 / signal.eps) ** 4
    se_sq = np.sqrt(np.maximum(0.0, mean_fourth - mean_sq * mean_sq) / M)
    se_fourth = np.sqrt(np.maximum(0.0, mean_eighth - mean_fourth * mean_fourth) / M)
    rows = []
    for k in range(1, n + 1):
        rows.append(
            MomentRow(
                k=k,
                order=2,
                bound=bound_sq,
                empirical=float(mean_sq[k]),
                passed=bool(mean_sq[k] <= bound_sq + 3.0 * se_sq[k]),
            )
        )
    for k in range(1, n + 1):
        rows.append(
            MomentRow(
                k=k,
                order=4,
                bound=bound_fourth,
                empirical=float(mean_fourth[k]),
                passed=bool(mean_fourth[k] <= bound_fourth + 3.0 * se_fourth[k]),
            )
        )
    return MomentReport(
        n=n,
        replications=M,
        eps=signal.eps,
        mean_sq=mean_sq,
        mean_fourth=mean_fourth,
        rows=rows,
    )


# ------------------------------------------------------------ stopping suite


@dataclass(frozen=True)
class StoppingRow:
    n: int
    h: float
    threshold: float
    replications: int
    untriggered_freq: float
    mean_tau: float


@dataclass(frozen=True)
class StoppingReport:
    rows: list


def stopping_suite(
    signal: SignalFunction,
    n_list: Sequence[int],
    h_list: Sequence[float],
    replications: int,
    master_seed: int = 0,
    workers: int = 1,
) -> StoppingReport:
    """Frequency of failing to reach the information budget H = n*h.

    Runs the cross product of sample sizes and bandwidths with the
    natural budget H = n*h.  The failure probability decays like a power
    of the bandwidth-window mass, so at a fixed bandwidth rule it should
    fall rapidly in n; ``check_monotone`` verifies that on a report.
    ``mean_tau`` averages the stopping index over triggered replications
    (nan if none trigger).
    """
    for n in n_list:
        if not (isinstance(n, int) and n >= 2):
            raise ValueError(f"each n must be an integer >= 2, got {n}")
    for h in h_list:
        if not h > 0.0:
            raise ValueError(f"bandwidths must be positive, got {h}")
    if not (isinstance(replications, int) and replications >= 1):
        raise ValueError(f"replications must be >= 1, got {replications}")
    rows = []
    for i_n, n in enumerate(n_list):
        svals = signal_values(signal, n)
        for i_h, h in enumerate(h_list):
            window = make_window(n, signal.z0, h)
            H = float(n * h)
            job = SequentialJob(window.k_lo, window.k_hi, H)
            seed = substream_seed(master_seed, DOMAIN_STOPPING, i_n, i_h)
            requests = [
                BlockRequest(
                    n=n,
                    signal_values=svals,
                    stream_seed=seed,
                    rep_lo=lo,
                    rep_hi=hi,
                    sequential_jobs=(job,),
                )
                for lo, hi in partition(replications, block_size(n))
            ]
            results = map_blocks(requests, workers)
            triggered = np.concatenate([res.sequential[0].triggered for res in results])
            tau = np.concatenate([res.sequential[0].tau for res in results])
            hits = int(np.count_nonzero(triggered))
            mean_tau = (
                math.fsum(float(t) for t in tau[triggered]) / hits
                if hits
                else float("nan")
            )
            rows.append(
                StoppingRow(
                    n=n,
                    h=h,
                    threshold=H,
                    replications=replications,
                    untriggered_freq=(replications - hits) / replications,
                    mean_tau=mean_tau,
                )
            )
    return StoppingReport(rows=rows)


def check_monotone(report: StoppingReport, slack: float = 0.0) -> bool:
    """True when untriggered frequency is non-increasing in n at each bandwidth.

    ``slack`` absorbs Monte Carlo noise: an increase up to ``slack`` is
    tolerated.
    """
    by_h: dict = {}
    for row in report.rows:
        by_h.setdefault(row.h, []).append((row.n, row.untriggered_freq))
    for h, pairs in by_h.items():
        pairs.sort()
        freqs = [f for _, f in pairs]
        for a, b in zip(freqs, freqs[1:]):
            if b > a + slack:
                return False
    return True


# --------------------------------------------------- lower-bound diagnostic


def smooth_bump(u):
    """The standard C-infinity bump exp(1 - 1/(1 - u**2)) on (-1, 1), else 0."""
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


def bump_squared_integral() -> float:
    """Integral of the squared standard bump over [-1, 1] (about 0.98338)."""
    val, _ = quad(lambda t: float(smooth_bump(t)) ** 2, -1.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    return val


def perturbation_width(beta_lo: float, beta_hi: float) -> float:
    """Half-width of the scaled bump used in the efficiency construction.

    Solves for the width ``a`` making the squared profile integrate to
    beta_bar / 2, where beta_bar = (beta_hi - beta_lo) /
    ((2*beta_hi + 1) * (2*beta_lo + 1)) is the rate-exponent gap the
    construction needs to exhibit.
    """
    if not (0.0 < beta_lo < beta_hi <= 1.0):
        raise ValueError(f"need 0 < beta_lo < beta_hi <= 1, got ({beta_lo}, {beta_hi})")
    beta_bar = (beta_hi - beta_lo) / ((2.0 * beta_hi + 1.0) * (2.0 * beta_lo + 1.0))
    return (beta_bar / 2.0) / bump_squared_integral()


@dataclass(frozen=True)
class LowerBoundDiagnostic:
    """Window-energy statistics for the efficiency construction at one n.

    ``varsigma_samples`` holds the rate-scaled window energy
    (sum of V(u_k)**2 * y_{k-1}**2) / (n * h), whose mean should approach
    sigma_star_sq = beta_bar / 2 divided by the limiting variance factor;
    ``eta_samples`` holds the self-normalized noise couplings, which
    should look standard normal.  Replications whose unscaled energy is
    below 1e-12 are dropped from ``eta_samples`` and counted in
    ``rejected``.
    """

    n: int
    replications: int
    beta_lo: float
    beta_hi: float
    beta_bar: float
    sigma_star_sq: float
    width: float
    h_star: float
    N_star: float
    rejected: int
    varsigma_samples: np.ndarray = field(repr=False)
    eta_samples: np.ndarray = field(repr=False)
    mean_varsigma: float = 0.0
    eta_mean: float = 0.0
    eta_var: float = 0.0


def perturbation_signal(beta_lo: float, beta_hi: float, n: int, z0: float):
    """The small-bump signal that saturates the efficiency bound at size n.

    Returns ``(signal, h_star, N_star, a)``: the signal is
    (1/N_star) * V((x - z0)/h_star) with V(u) = smooth_bump(u / a), the
    bandwidth/rate pair is taken at the coarse exponent beta_lo, and
    ``a`` is the profile half-width from ``perturbation_width``.  Raises
    when the bump support [z0 - a*h_star, z0 + a*h_star] leaves (0, 1).
    """
    if not (isinstance(n, int) and n >= 3):
        raise ValueError(f"n must be an integer >= 3, got {n}")
    if not (0.0 < z0 < 1.0):
        raise ValueError(f"z0 must lie in (0, 1), got {z0}")
    a = perturbation_width(beta_lo, beta_hi)
    d_n = n / math.log(n)
    h_star = d_n ** (-1.0 / (2.0 * beta_lo + 1.0))
    N_star = d_n ** (beta_lo / (2.0 * beta_lo + 1.0))
    if not (0.0 < z0 - a * h_star and z0 + a * h_star < 1.0):
        raise ValueError(
            f"bump support [z0 - {a * h_star:g}, z0 + {a * h_star:g}] leaves (0, 1)"
        )

    def evaluator(x):
        return smooth_bump((np.asarray(x, dtype=np.float64) - z0) / (a * h_star)) / N_star

    # In rescaled coordinates the increment constant is scale-free:
    # N_star * h_star**beta_lo = 1 exactly on the ladder.
    ugrid = np.linspace(-1.5, 1.5, 20001)
    prof = smooth_bump(ugrid / a)
    nz = ugrid != 0.0
    K = float(np.max(np.abs(prof[nz] - 1.0) / np.abs(ugrid[nz]) ** beta_lo))
    sig = SignalFunction(
        evaluator=evaluator,
        beta=beta_lo,
        holder_K=K,
        z0=z0,
        eps=1.0 - 1.0 / N_star,
    )
    return sig, h_star, N_star, a


def lower_bound_diagnostic(
    beta_lo: float,
    beta_hi: float,
    n: int,
    replications: int,
    z0: float = 0.5,
    master_seed: int = 0,
    workers: int = 1,
) -> LowerBoundDiagnostic:
    """Simulate the efficiency construction and report its energy statistics.

    Runs the autoregression under the small-bump signal and accumulates,
    over the bandwidth window at the coarse exponent, the weighted energy
    sum V(u_k)**2 * y_{k-1}**2 and the coupling sum V(u_k) * y_{k-1} * xi_k.
    The rate-scaled energy should concentrate near sigma_star_sq (up to
    the limiting variance factor, within a few percent at large n), and
    coupling / sqrt(energy) should be approximately standard normal --
    the two ingredients that make the construction's likelihood ratios
    behave.
    """
    if not (isinstance(replications, int) and replications >= 1):
        raise ValueError(f"replications must be >= 1, got {replications}")
    sig, h_star, N_star, a = perturbation_signal(beta_lo, beta_hi, n, z0)
    beta_bar = (beta_hi - beta_lo) / ((2.0 * beta_hi + 1.0) * (2.0 * beta_lo + 1.0))
    window = make_window(n, z0, h_star)
    ks = np.arange(window.k_lo, window.k_hi + 1, dtype=np.float64)
    u = (ks / n - z0) / h_star
    weights = smooth_bump(u / a)
    job = WeightedSumJob(window.k_lo, window.k_hi, weights)
    seed = substream_seed(master_seed, DOMAIN_LOWERBOUND, n)
    svals = signal_values(sig, n)
    requests = [
        BlockRequest(
            n=n,
            signal_values=svals,
            stream_seed=seed,
            rep_lo=lo,
            rep_hi=hi,
            weighted_jobs=(job,),
        )
        for lo, hi in partition(replications, block_size(n))
    ]
    results = map_blocks(requests, workers)
    energy = np.concatenate([res.weighted[0].weighted_sq for res in results])
    coupling = np.concatenate([res.weighted[0].weighted_noise for res in results])
    d_n = n / math.log(n)
    scaled = energy / (n * h_star)
    keep = energy / (d_n * h_star) >= 1e-12
    rejected = int(np.count_nonzero(~keep))
    eta = coupling[keep] / np.sqrt(energy[keep])
    mean_varsigma, _ = _mean_std(scaled)
    eta_mean, eta_sd = _mean_std(eta)
    return LowerBoundDiagnostic(
        n=n,
        replications=replications,
        beta_lo=beta_lo,
        beta_hi=beta_hi,
        beta_bar=beta_bar,
        sigma_star_sq=beta_bar / 2.0,
        width=a,
        h_star=h_star,
        N_star=N_star,
        rejected=rejected,
        varsigma_samples=scaled,
        eta_samples=eta,
        mean_varsigma=mean_varsigma,
        eta_mean=eta_mean,
        eta_var=eta_sd * eta_sd,
    )
