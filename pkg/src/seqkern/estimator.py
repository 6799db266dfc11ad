"""Sequential kernel estimation of the signal at a point.

The estimator looks at design points within a bandwidth ``h`` of the
target ``z0`` (a uniform kernel on the closed interval [-1, 1] after
rescaling), accumulates the observed information

    A_k = sum of y_{j-1}**2 over in-window indices j <= k,

and stops at the first k where A_k reaches a prescribed threshold H.  The
final crossing term gets a fractional weight alpha in (0, 1] chosen so
the information actually used is exactly H; the estimate is the
correspondingly weighted sum of y_{j-1} * y_j divided by H.  Stopping at
a fixed amount of information rather than a fixed sample size is what
gives the stochastic part of the error a Gaussian-type tail bound that
holds for every signal in the smoothness class, not just on average.

All window sums run in ascending index order with compensated addition;
see the reproducibility notes in the engine module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import quad

from ._kahan import kahan_add


@dataclass(frozen=True)
class KernelWindow:
    """The set of design indices within bandwidth h of the target z0.

    Indices run over the closed integer range [k_lo, k_hi]; the window is
    empty when k_lo > k_hi.  Bounds are derived by floor arithmetic so that
    k is in-window exactly when |x_k - z0| <= h (with x_k = k/n), then
    clamped to the design range [1, n].
    """

    z0: float
    h: float
    n: int
    k_lo: int
    k_hi: int

    @property
    def is_empty(self) -> bool:
        return self.k_lo > self.k_hi

    @property
    def size(self) -> int:
        return max(0, self.k_hi - self.k_lo + 1)

    def indices(self) -> range:
        return range(self.k_lo, self.k_hi + 1)

    def rescaled(self, k):
        """u_k = (x_k - z0) / h, the kernel argument at design index k."""
        return (np.asarray(k, dtype=np.float64) / self.n - self.z0) / self.h


def make_window(n: int, z0: float, h: float) -> KernelWindow:
    """Window of design indices with |k/n - z0| <= h, clamped to [1, n].

    The first in-window index is floor(n*z0 - n*h) + 1 and the last is
    floor(n*z0 + n*h); since z0 < 1 the lower bound never exceeds n, so
    clamping below at 1 and above at n is enough.
    """
    if not (isinstance(n, int) and n >= 2):
        raise ValueError(f"n must be an integer >= 2, got {n}")
    if not (0.0 < z0 < 1.0):
        raise ValueError(f"z0 must lie in (0, 1), got {z0}")
    if not h > 0.0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    k_lo = max(1, math.floor(n * z0 - n * h) + 1)
    k_hi = min(n, math.floor(n * z0 + n * h))
    return KernelWindow(z0=z0, h=h, n=n, k_lo=k_lo, k_hi=k_hi)


def accumulate(path, window: KernelWindow) -> np.ndarray:
    """Observed information A_k for k = 0..n, as an array of length n+1.

    A_k is the compensated running sum of y_{j-1}**2 over in-window j <= k;
    it is zero before the window opens and flat after it closes.
    """
    y = path.values
    A = np.zeros(path.n + 1, dtype=np.float64)
    total = 0.0
    comp = 0.0
    for k in window.indices():
        total, comp = kahan_add(total, comp, y[k - 1] * y[k - 1])
        A[k] = total
    if window.k_hi + 1 <= path.n:
        A[window.k_hi + 1 :] = total
    return A


class StoppingResult(NamedTuple):
    tau: Optional[int]
    alpha: Optional[float]
    triggered: bool


def stopping_time(path, window: KernelWindow, H: float) -> StoppingResult:
    """First in-window index where the observed information reaches H.

    Returns the crossing index tau, the fractional weight
    alpha = (H - A_{tau-1}) / y_{tau-1}**2 in (0, 1] that makes the used
    information exactly H, and whether the threshold was reached at all.
    Untriggered paths return (None, None, False).
    """
    if not H > 0.0:
        raise ValueError(f"information threshold must be positive, got {H}")
    y = path.values
    A = accumulate(path, window)
    for k in window.indices():
        if A[k] >= H:
            prev = A[k - 1] if k - 1 >= window.k_lo else 0.0
            ysq = y[k - 1] * y[k - 1]
            if not ysq > 0.0:
                # A crossing step necessarily added positive mass.
                raise RuntimeError(f"zero squared observation at crossing index {k}")
            return StoppingResult(tau=k, alpha=(H - prev) / ysq, triggered=True)
    return StoppingResult(tau=None, alpha=None, triggered=False)


@dataclass(frozen=True)
class SequentialEstimate:
    """Outcome of one sequential estimation.

    ``value`` is zero whenever the information threshold was not reached
    (``triggered`` false); ``accumulated`` is the full-window information,
    available either way.
    """

    value: float
    tau: Optional[int]
    alpha: Optional[float]
    triggered: bool
    accumulated: float
    threshold: float


def point_estimate(path, window: KernelWindow, H: float) -> SequentialEstimate:
    """The sequential kernel estimate of S(z0) with information budget H."""
    y = path.values
    stop = stopping_time(path, window, H)
    A = accumulate(path, window)
    if not stop.triggered:
        return SequentialEstimate(
            value=0.0,
            tau=None,
            alpha=None,
            triggered=False,
            accumulated=float(A[path.n]),
            threshold=H,
        )
    total = 0.0
    comp = 0.0
    for k in range(window.k_lo, stop.tau + 1):
        w = stop.alpha if k == stop.tau else 1.0
        total, comp = kahan_add(total, comp, w * (y[k - 1] * y[k]))
    return SequentialEstimate(
        value=total / H,
        tau=stop.tau,
        alpha=stop.alpha,
        triggered=True,
        accumulated=float(A[path.n]),
        threshold=H,
    )


@dataclass(frozen=True)
class ErrorDecomposition:
    """Additive split of the estimation error on a triggered path.

    On trigger, estimate - S(z0) equals bias_term + noise_term / sqrt(H);
    on an untriggered path both terms are zero and the error is -S(z0).
    ``noise_term`` is the standardized stochastic component: the weighted
    sum of y_{j-1} * xi_j over the used window, divided by sqrt(H), which
    has unit-order variance by construction.
    """

    bias_term: float
    noise_term: float
    triggered: bool


def decompose_error(path, signal, window: KernelWindow, H: float) -> ErrorDecomposition:
    """Split the error of ``point_estimate`` into bias and noise parts.

    Innovations are recovered from the path as xi_j = y_j - S(x_j)*y_{j-1},
    so the identity

        estimate - S(z0) = bias_term + noise_term / sqrt(H)

    holds as floating-point algebra on triggered paths (to roundoff), for
    any signal -- it is an exact rearrangement, not an approximation.
    """
    y = path.values
    stop = stopping_time(path, window, H)
    if not stop.triggered:
        return ErrorDecomposition(bias_term=0.0, noise_term=0.0, triggered=False)
    from .process import signal_values  # local import to avoid cycle at module load

    s = signal_values(signal, path.n)
    s_at_z0 = float(signal(window.z0))
    bias_total = 0.0
    bias_comp = 0.0
    noise_total = 0.0
    noise_comp = 0.0
    for k in range(window.k_lo, stop.tau + 1):
        w = stop.alpha if k == stop.tau else 1.0
        xi_k = y[k] - s[k - 1] * y[k - 1]
        bias_total, bias_comp = kahan_add(
            bias_total, bias_comp, w * ((s[k - 1] - s_at_z0) * (y[k - 1] * y[k - 1]))
        )
        noise_total, noise_comp = kahan_add(
            noise_total, noise_comp, w * (y[k - 1] * xi_k)
        )
    return ErrorDecomposition(
        bias_term=bias_total / H,
        noise_term=noise_total / math.sqrt(H),
        triggered=True,
    )


def delta_n(path, f, h: float, signal) -> float:
    """Discrepancy between the empirical kernel functional and its limit.

    Compares (1/(n*h)) * sum of f(u_k) * y_{k-1}**2 over the window with
    the limiting value integral(f, -1, 1) / (1 - S(z0)**2).  ``f`` is only
    evaluated inside [-1, 1] (the window) and is integrated over [-1, 1]
    by adaptive quadrature at tolerance well below 1e-10.
    """
    window = make_window(path.n, signal.z0, h)
    y = path.values
    total = 0.0
    comp = 0.0
    for k in window.indices():
        u = (k / path.n - signal.z0) / h
        total, comp = kahan_add(total, comp, float(f(u)) * (y[k - 1] * y[k - 1]))
    empirical = total / (path.n * h)
    integral, _ = quad(f, -1.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    s_at_z0 = float(signal(signal.z0))
    return empirical - integral / (1.0 - s_at_z0 * s_at_z0)
