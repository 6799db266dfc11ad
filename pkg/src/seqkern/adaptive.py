"""Adaptive bandwidth selection over a geometric smoothness grid.

The selection rule compares sequential estimates computed at a short
ladder of candidate bandwidths.  Candidates come from a grid of
smoothness exponents between ``beta_lo`` and ``beta_hi``: with
d_n = n / ln(n), the grid has m = floor(ln(d_n)) + 1 interior steps and

    beta_j = beta_lo + (j/m) * (beta_hi - beta_lo),
    h_j    = d_n ** (-1 / (2*beta_j + 1)),          (bandwidths, increasing)
    N_j    = d_n ** (beta_j / (2*beta_j + 1)),      (rate values, increasing)

for j = 0..m.  Two identities tie the ladder together and are enforced by
tests: N_j**2 = d_n * h_j, and sqrt(n*h_j) / N_j = sqrt(ln n) for every j.

A candidate j is rejected once its estimate drifts from some
coarser-bandwidth estimate by more than the noise level lambda / N_{k+1}
allows; the selected index is the last one before the first rejection.
The comparison at k = j uses one extra ladder value N_{m+1} (the exponent
extended one step past beta_hi, capped at 1) purely so the j-th deviation
term is well defined; it is never a selectable candidate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimator import make_window, point_estimate


@dataclass(frozen=True)
class BandwidthGrid:
    """The candidate ladder for one sample size, with its threshold scale."""

    n: int
    d_n: float
    m: int
    beta_points: np.ndarray
    h_points: np.ndarray
    N_points: np.ndarray
    N_ext: float
    lam: float

    @property
    def thresholds(self) -> np.ndarray:
        """Rejection thresholds lambda / N_j, one per candidate."""
        return self.lam / self.N_points

    def rate_chain(self) -> np.ndarray:
        """N_1, ..., N_m, N_{m+1}: the deviation scales used at steps 0..m."""
        return np.append(self.N_points[1:], self.N_ext)

    def information_thresholds(self) -> np.ndarray:
        """Information budgets H_j = n * h_j, one per candidate."""
        return self.n * self.h_points


def default_lambda(holder_K: float = 1.0, beta_lo: float = 0.5) -> float:
    """Default threshold constant for a smoothness class.

    Slightly above the smallest value for which the coarse-side deviation
    bound (bias plus a Gaussian-tail noise term at the grid's coarsest
    exponent) is guaranteed; scales linearly with the class increment
    constant.
    """
    if not holder_K > 0.0:
        raise ValueError(f"holder_K must be positive, got {holder_K}")
    if not (0.0 < beta_lo <= 1.0):
        raise ValueError(f"beta_lo must lie in (0, 1], got {beta_lo}")
    return 1.01 * (holder_K + math.e * math.sqrt(4.0 + 4.0 / (2.0 * beta_lo + 1.0)))


def build_grid(
    n: int,
    beta_lo: float,
    beta_hi: float,
    lambda_override: float | None = None,
    holder_K: float = 1.0,
) -> BandwidthGrid:
    """Construct the candidate ladder for sample size ``n``.

    ``lambda_override`` replaces the default threshold constant when
    given; ``holder_K`` feeds the default.  Requires n >= 3 so that
    d_n > 1 and the grid is well defined.
    """
    if not (isinstance(n, int) and n >= 3):
        raise ValueError(f"n must be an integer >= 3, got {n}")
    if not (0.0 < beta_lo < beta_hi <= 1.0):
        raise ValueError(
            f"need 0 < beta_lo < beta_hi <= 1, got ({beta_lo}, {beta_hi})"
        )
    if lambda_override is not None and not lambda_override > 0.0:
        raise ValueError(f"lambda_override must be positive, got {lambda_override}")
    d_n = n / math.log(n)
    m = math.floor(math.log(d_n)) + 1
    j = np.arange(m + 1, dtype=np.float64)
    beta_points = beta_lo + (j / m) * (beta_hi - beta_lo)
    h_points = d_n ** (-1.0 / (2.0 * beta_points + 1.0))
    N_points = d_n ** (beta_points / (2.0 * beta_points + 1.0))
    beta_ext = min(1.0, beta_lo + ((m + 1) / m) * (beta_hi - beta_lo))
    N_ext = d_n ** (beta_ext / (2.0 * beta_ext + 1.0))
    lam = default_lambda(holder_K, beta_lo) if lambda_override is None else lambda_override
    return BandwidthGrid(
        n=n,
        d_n=d_n,
        m=m,
        beta_points=beta_points,
        h_points=h_points,
        N_points=N_points,
        N_ext=float(N_ext),
        lam=float(lam),
    )


def omega_sequence(estimates, grid: BandwidthGrid) -> np.ndarray:
    """Deviation statistic of each candidate from all coarser ones.

    omega_j = max over k <= j of (|e_j - e_k| - lambda / N_{k+1}), using
    the extended scale N_{m+1} when k = j = m.  The j = 0 value is always
    -lambda / N_1 (self-comparison only), so the first candidate can never
    be rejected against itself.
    """
    e = np.asarray(estimates, dtype=np.float64)
    if e.shape != (grid.m + 1,):
        raise ValueError(f"need {grid.m + 1} estimates, got shape {e.shape}")
    chain = grid.rate_chain()
    out = np.empty(grid.m + 1, dtype=np.float64)
    for j in range(grid.m + 1):
        dev = np.abs(e[j] - e[: j + 1]) - grid.lam / chain[: j + 1]
        out[j] = np.max(dev)
    return out


def select_index(omega: np.ndarray, grid: BandwidthGrid) -> int:
    """Last candidate before the first threshold breach; m if none breach.

    The breach test is omega_j >= lambda / N_j.  Candidate 0 cannot breach
    (its deviation is the negative self-term), so the result is in [0, m]
    for any omega produced by ``omega_sequence``.
    """
    thresholds = grid.thresholds
    for j in range(grid.m + 1):
        if omega[j] >= thresholds[j]:
            return j - 1
    return grid.m


@dataclass(frozen=True)
class AdaptiveEstimate:
    """A data-driven bandwidth choice and the ladder that produced it."""

    value: float
    k_hat: int
    h_hat: float
    grid: BandwidthGrid
    grid_estimates: list = field(repr=False)
    omega_values: np.ndarray = field(repr=False)


def adaptive_estimate(path, z0: float, grid: BandwidthGrid) -> AdaptiveEstimate:
    """Run the full ladder on one path and select a bandwidth.

    Computes the sequential estimate at every candidate bandwidth with
    information budget H_j = n * h_j, forms the deviation statistics, and
    returns the estimate at the selected index.
    """
    if path.n != grid.n:
        raise ValueError(f"path has n={path.n} but grid was built for n={grid.n}")
    budgets = grid.information_thresholds()
    ests = []
    for j in range(grid.m + 1):
        window = make_window(grid.n, z0, float(grid.h_points[j]))
        ests.append(point_estimate(path, window, float(budgets[j])))
    values = np.array([e.value for e in ests], dtype=np.float64)
    omega = omega_sequence(values, grid)
    k_hat = select_index(omega, grid)
    return AdaptiveEstimate(
        value=float(values[k_hat]),
        k_hat=k_hat,
        h_hat=float(grid.h_points[k_hat]),
        grid=grid,
        grid_estimates=ests,
        omega_values=omega,
    )


def omega_matrix(values: np.ndarray, grid: BandwidthGrid) -> np.ndarray:
    """Row-wise ``omega_sequence`` for a (batch, m+1) matrix of estimates."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != grid.m + 1:
        raise ValueError(f"need shape (batch, {grid.m + 1}), got {v.shape}")
    penal = grid.lam / grid.rate_chain()
    out = np.empty_like(v)
    for j in range(grid.m + 1):
        dev = np.abs(v[:, j : j + 1] - v[:, : j + 1]) - penal[: j + 1]
        out[:, j] = np.max(dev, axis=1)
    return out


def select_indices(values: np.ndarray, grid: BandwidthGrid):
    """Vectorized selection: (k_hat, chosen value) per row of ``values``."""
    v = np.asarray(values, dtype=np.float64)
    omega = omega_matrix(v, grid)
    breach = omega >= grid.thresholds[np.newaxis, :]
    any_breach = breach.any(axis=1)
    first = breach.argmax(axis=1)
    k_hat = np.where(any_breach, first - 1, grid.m).astype(np.int64)
    chosen = v[np.arange(v.shape[0]), k_hat]
    return k_hat, chosen
