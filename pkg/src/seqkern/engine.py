"""Batched simulation and window accumulation with a bitwise contract.

One replication occupies one lane of a batch; the time loop advances all
lanes together, and every per-lane reduction follows the identical
ascending-index compensated-summation op sequence as the per-path
reference in ``estimator``.  All elementwise IEEE-754 operations give the
same bits regardless of vector width, so batch results are bit-for-bit
equal to per-path results and independent of batch grouping and worker
count.  Three rules make this work:

* Replication r always draws its own noise stream (see ``process``), so
  lane contents never depend on which batch a replication landed in.
* Batch boundaries follow a fixed size rule ``block_size(n)`` that does
  not look at the worker count.
* Accumulators that stop early (the estimate numerator and the noise
  sum) advance through masked compensated additions: a stopped lane's
  total and compensation are left untouched rather than fed zero terms,
  which would perturb the compensation carry.

Squared observations are always formed as ``y * y`` (never ``y ** 2``) in
both the scalar and batched code, since the two need not round
identically.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kahan import kahan_add, kahan_add_where
from .process import noise_stream


@dataclass(frozen=True)
class SequentialJob:
    """One sequential-estimator evaluation: a window plus an information budget."""

    k_lo: int
    k_hi: int
    threshold: float
    collect_noise: bool = False


@dataclass(frozen=True)
class WeightedSumJob:
    """Window sums with a fixed smooth weight per design index.

    Accumulates sum of w_k**2 * y_{k-1}**2 (weighted squared observations)
    and sum of w_k * y_{k-1} * xi_k (weighted noise couplings) over the
    window; ``weights`` holds w_k for k = k_lo..k_hi.
    """

    k_lo: int
    k_hi: int
    weights: np.ndarray


@dataclass(frozen=True)
class BlockRequest:
    """A contiguous range of replications to run against a set of jobs.

    ``signal_values`` is S on the design grid (length n); replication r
    in [rep_lo, rep_hi) uses the noise stream addressed by
    ``(stream_seed, r)``.  With ``track_moments`` the block also returns
    per-step lane sums of y**2, y**4 and y**8.
    """

    n: int
    signal_values: np.ndarray
    stream_seed: int
    rep_lo: int
    rep_hi: int
    sequential_jobs: tuple = ()
    weighted_jobs: tuple = ()
    track_moments: bool = False


@dataclass
class SequentialBlockOutput:
    """Per-lane results of one SequentialJob (sentinels tau=0, alpha=0 when untriggered)."""

    value: np.ndarray
    triggered: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    accumulated: np.ndarray
    noise: Optional[np.ndarray] = None


@dataclass
class WeightedBlockOutput:
    weighted_sq: np.ndarray
    weighted_noise: np.ndarray


@dataclass
class BlockResult:
    rep_lo: int
    rep_hi: int
    sequential: list
    weighted: list
    moment_sums: Optional[np.ndarray] = None


class _SeqState:
    """Running accumulators for one SequentialJob across a batch."""

    def __init__(self, job: SequentialJob, batch: int):
        self.job = job
        self.A = np.zeros(batch)
        self.A_comp = np.zeros(batch)
        self.num = np.zeros(batch)
        self.num_comp = np.zeros(batch)
        self.stopped = np.zeros(batch, dtype=bool)
        self.tau = np.zeros(batch, dtype=np.int64)
        self.alpha = np.zeros(batch)
        if job.collect_noise:
            self.zeta = np.zeros(batch)
            self.zeta_comp = np.zeros(batch)

    def step(self, k, y_prev, y_cur, xi_k, ysq):
        job = self.job
        A_old = self.A
        A_new, A_comp_new = kahan_add(self.A, self.A_comp, ysq)
        active = ~self.stopped
        newly = active & (A_new >= job.threshold)
        denom = np.where(newly, ysq, 1.0)
        alpha_k = (job.threshold - A_old) / denom
        w = np.where(newly, alpha_k, 1.0)
        self.num, self.num_comp = kahan_add_where(
            self.num, self.num_comp, w * (y_prev * y_cur), active
        )
        if job.collect_noise:
            self.zeta, self.zeta_comp = kahan_add_where(
                self.zeta, self.zeta_comp, w * (y_prev * xi_k), active
            )
        self.alpha = np.where(newly, alpha_k, self.alpha)
        self.tau = np.where(newly, k, self.tau)
        self.stopped = self.stopped | newly
        self.A = A_new
        self.A_comp = A_comp_new

    def finish(self) -> SequentialBlockOutput:
        H = self.job.threshold
        value = np.where(self.stopped, self.num / H, 0.0)
        noise = None
        if self.job.collect_noise:
            noise = np.where(self.stopped, self.zeta / math.sqrt(H), 0.0)
        return SequentialBlockOutput(
            value=value,
            triggered=self.stopped.copy(),
            tau=self.tau,
            alpha=np.where(self.stopped, self.alpha, 0.0),
            accumulated=self.A,
            noise=noise,
        )


class _WeightedState:
    def __init__(self, job: WeightedSumJob, batch: int):
        self.job = job
        w = np.asarray(job.weights, dtype=np.float64)
        if w.shape != (job.k_hi - job.k_lo + 1,):
            raise ValueError(
                f"weights shape {w.shape} does not match window "
                f"[{job.k_lo}, {job.k_hi}]"
            )
        self.w = w
        self.wsq = w * w
        self.sq = np.zeros(batch)
        self.sq_comp = np.zeros(batch)
        self.noise = np.zeros(batch)
        self.noise_comp = np.zeros(batch)

    def step(self, k, y_prev, xi_k, ysq):
        i = k - self.job.k_lo
        self.sq, self.sq_comp = kahan_add(self.sq, self.sq_comp, self.wsq[i] * ysq)
        self.noise, self.noise_comp = kahan_add(
            self.noise, self.noise_comp, self.w[i] * (y_prev * xi_k)
        )

    def finish(self) -> WeightedBlockOutput:
        return WeightedBlockOutput(weighted_sq=self.sq, weighted_noise=self.noise)


def run_block(req: BlockRequest) -> BlockResult:
    """Simulate one batch of replications and evaluate all jobs on it.

    The path history is not stored: the time loop keeps only the current
    and previous observations per lane.  When no job looks at a step and
    the signal vanishes over an initial segment, the loop entry point is
    advanced past that segment (there y_k = xi_k identically).
    """
    n = req.n
    s = np.asarray(req.signal_values, dtype=np.float64)
    if s.shape != (n,):
        raise ValueError(f"signal_values must have shape ({n},), got {s.shape}")
    batch = req.rep_hi - req.rep_lo
    if batch <= 0:
        raise ValueError(f"empty replication range [{req.rep_lo}, {req.rep_hi})")

    xi = np.empty((batch, n))
    for i, r in enumerate(range(req.rep_lo, req.rep_hi)):
        xi[i] = noise_stream(req.stream_seed, r).standard_normal(n)

    seq_states = [_SeqState(j, batch) for j in req.sequential_jobs]
    wt_states = [_WeightedState(j, batch) for j in req.weighted_jobs]
    windows = [
        (j.k_lo, j.k_hi)
        for j in list(req.sequential_jobs) + list(req.weighted_jobs)
        if j.k_lo <= j.k_hi
    ]

    moment_sums = None
    if req.track_moments:
        moment_sums = np.zeros((3, n + 1))
        k_start, k_stop = 1, n
    else:
        nz = np.nonzero(s)[0]
        sig_lo = int(nz[0]) + 1 if nz.size else n + 1
        sig_hi = int(nz[-1]) + 1 if nz.size else 0
        starts = [sig_lo] + [lo for lo, hi in windows]
        stops = [sig_hi] + [hi for lo, hi in windows]
        k_start = min(starts)
        k_stop = min(n, max(stops))

    if k_start <= k_stop:
        if k_start <= 1:
            y_prev = np.zeros(batch)
        else:
            # Signal vanishes before k_start, so y_{k_start-1} = xi_{k_start-1}.
            y_prev = xi[:, k_start - 2].copy()
        for k in range(k_start, k_stop + 1):
            y_cur = s[k - 1] * y_prev + xi[:, k - 1]
            ysq = y_prev * y_prev
            for st in seq_states:
                if st.job.k_lo <= k <= st.job.k_hi:
                    st.step(k, y_prev, y_cur, xi[:, k - 1], ysq)
            for st in wt_states:
                if st.job.k_lo <= k <= st.job.k_hi:
                    st.step(k, y_prev, xi[:, k - 1], ysq)
            if moment_sums is not None:
                ysq_cur = y_cur * y_cur
                y4 = ysq_cur * ysq_cur
                moment_sums[0, k] = np.sum(ysq_cur)
                moment_sums[1, k] = np.sum(y4)
                moment_sums[2, k] = np.sum(y4 * y4)
            y_prev = y_cur

    return BlockResult(
        rep_lo=req.rep_lo,
        rep_hi=req.rep_hi,
        sequential=[st.finish() for st in seq_states],
        weighted=[st.finish() for st in wt_states],
        moment_sums=moment_sums,
    )


def block_size(n: int) -> int:
    """Replications per batch: a fixed rule in n only, 16..512 lanes.

    Sized so a batch's noise matrix stays within ~64 MiB.  Deliberately
    independent of the worker count so batch boundaries -- and therefore
    reduction groupings -- never change with parallelism.
    """
    return int(max(16, min(512, (64 << 20) // (8 * max(1, n)))))


def partition(total: int, size: int):
    """Contiguous [lo, hi) chunks of the replication range [0, total)."""
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def map_blocks(requests, workers: int = 1):
    """Run block requests, optionally across processes; order-preserving.

    Results are returned in request order no matter when workers finish,
    and every block's content is fully determined by the request itself,
    so the worker count cannot influence any downstream reduction.
    """
    if workers <= 1:
        return [run_block(r) for r in requests]
    results = [None] * len(requests)
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = {ex.submit(run_block, r): i for i, r in enumerate(requests)}
        for fut in as_completed(futures):
            results[futures[fut]] = fut.result()
    return results
