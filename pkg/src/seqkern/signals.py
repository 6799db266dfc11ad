"""Autoregression signal functions and their smoothness metadata.

A signal is the coefficient function S mapping the design interval (0, 1]
to the open interval (-1, 1); the observed process is the time-varying
AR(1) recursion y_k = S(k/n) * y_{k-1} + noise.  Estimation targets the
value S(z0) at a fixed interior point z0.  Each signal carries the class
metadata the adaptive procedure needs: a smoothness exponent ``beta``, an
increment-bound constant ``holder_K`` with

    |S(x) - S(z0)| <= holder_K * |x - z0| ** beta,

and a stability margin ``eps`` with sup |S| <= 1 - eps, which keeps the
process geometrically ergodic and its moments bounded uniformly in time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SignalFunction:
    """A signal together with the class constants attached to it.

    Attributes:
        evaluator: vectorized map from points in (0, 1] to signal values.
        beta: smoothness exponent, in (0, 1].
        holder_K: increment-bound constant, positive.
        z0: the estimation point, in (0, 1).
        eps: stability margin, in (0, 1]; sup |S| <= 1 - eps.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    beta: float
    holder_K: float
    z0: float
    eps: float

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if not self.holder_K > 0.0:
            raise ValueError(f"holder_K must be positive, got {self.holder_K}")
        if not (0.0 < self.z0 < 1.0):
            raise ValueError(f"z0 must lie in (0, 1), got {self.z0}")
        if not (0.0 < self.eps <= 1.0):
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")

    def __call__(self, x):
        return self.evaluator(x)


def make_benchmark_signal(beta: float, z0: float) -> SignalFunction:
    """Build the cusp benchmark S(x) = |x - z0|**beta scaled to be stable.

    The raw cusp has increment constant exactly 1 and takes the value 0 at
    the estimation point, so the estimation error is the estimate itself.
    The supremum of |x - z0|**beta over (0, 1] is max(z0, 1 - z0)**beta,
    attained at an endpoint; ``eps`` is one minus that supremum.
    """
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if not (0.0 < z0 < 1.0):
        raise ValueError(f"z0 must lie in (0, 1), got {z0}")
    sup = max(z0, 1.0 - z0) ** beta

    def evaluator(x):
        return np.abs(np.asarray(x, dtype=np.float64) - z0) ** beta

    return SignalFunction(
        evaluator=evaluator, beta=beta, holder_K=1.0, z0=z0, eps=1.0 - sup
    )


def make_constant_signal(c: float, z0: float = 0.5) -> SignalFunction:
    """Build the constant signal S == c, estimated at ``z0``.

    Constant signals are infinitely smooth; they are tagged with exponent
    1 and the conventional increment constant 1 (any positive constant is
    a valid bound since the increments vanish).
    """
    if not abs(c) < 1.0:
        raise ValueError(f"constant signal needs |c| < 1 for stability, got {c}")
    if not (0.0 < z0 < 1.0):
        raise ValueError(f"z0 must lie in (0, 1), got {z0}")
    cval = float(c)

    def evaluator(x):
        return np.full_like(np.asarray(x, dtype=np.float64), cval)

    return SignalFunction(
        evaluator=evaluator, beta=1.0, holder_K=1.0, z0=z0, eps=1.0 - abs(cval)
    )


def empirical_sup(signal: SignalFunction, grid_size: int = 4096) -> float:
    """Max of |S| over the uniform grid {i/grid_size : i = 1..grid_size}."""
    x = np.arange(1, grid_size + 1, dtype=np.float64) / grid_size
    return float(np.max(np.abs(signal(x))))


def empirical_holder_constant(signal: SignalFunction, grid_size: int = 4096) -> float:
    """Grid estimate of the smallest valid increment-bound constant.

    Evaluates |S(x) - S(z0)| / |x - z0|**beta over the uniform grid,
    skipping points that coincide with z0.  A lower bound for the true
    constant; equals it for the benchmark cusp (the ratio is identically
    one there).
    """
    x = np.arange(1, grid_size + 1, dtype=np.float64) / grid_size
    d = np.abs(x - signal.z0)
    keep = d > 0.0
    num = np.abs(np.asarray(signal(x), dtype=np.float64) - float(signal(signal.z0)))
    ratio = num[keep] / d[keep] ** signal.beta
    return float(np.max(ratio)) if ratio.size else 0.0
