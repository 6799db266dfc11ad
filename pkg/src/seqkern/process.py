"""Path simulation for the observed autoregression.

The process starts at zero and evolves as

    y_k = S(x_k) * y_{k-1} + xi_k,        x_k = k / n,  k = 1..n,

with independent standard normal innovations.  Noise generation follows a
counter-based scheme so that every replication owns an independent,
individually addressable stream: replication ``r`` of a run with master
seed ``s`` draws from ``Philox`` keyed by ``SeedSequence(s, spawn_key=(r,))``
and fills its innovations with a single ``standard_normal(n)`` call.  This
makes any single path reproducible in isolation, independent of how many
other paths are simulated or in what order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PathConfig:
    """Identity of one simulated path: size plus its noise-stream address."""

    n: int
    seed: int
    replication_index: int

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 2):
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError(f"seed must be an integer in [0, 2**64), got {self.seed}")
        if not (isinstance(self.replication_index, int) and self.replication_index >= 0):
            raise ValueError(
                f"replication_index must be a nonnegative integer, got {self.replication_index}"
            )


@dataclass(frozen=True)
class Path:
    """A realized trajectory (y_0, ..., y_n) with its generating config."""

    values: np.ndarray
    config: PathConfig

    def __post_init__(self):
        if len(self.values) != self.config.n + 1:
            raise ValueError(
                f"need n + 1 = {self.config.n + 1} values, got {len(self.values)}"
            )

    @property
    def n(self) -> int:
        return self.config.n


def noise_stream(seed: int, replication_index: int) -> np.random.Generator:
    """The dedicated generator for one replication.

    Philox is counter-based: streams for distinct ``(seed, replication)``
    pairs are statistically independent and cheap to construct on demand.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(replication_index,))
    return np.random.Generator(np.random.Philox(ss))


def draw_noise(config: PathConfig) -> np.ndarray:
    """The canonical innovation vector (xi_1, ..., xi_n) for a path.

    One ``standard_normal(n)`` call on the path's stream -- the normative
    definition of which normals a given replication consumes.
    """
    return noise_stream(config.seed, config.replication_index).standard_normal(config.n)


def design_points(n: int) -> np.ndarray:
    """The design grid x_k = k/n for k = 1..n."""
    return np.arange(1, n + 1, dtype=np.float64) / n


def signal_values(signal, n: int) -> np.ndarray:
    """S evaluated on the design grid, as a float64 array of length n."""
    vals = np.asarray(signal(design_points(n)), dtype=np.float64)
    if vals.shape != (n,):
        raise ValueError(f"signal evaluation must give shape ({n},), got {vals.shape}")
    return vals


def simulate_path(signal, config: PathConfig) -> Path:
    """Simulate one trajectory of the autoregression driven by ``signal``."""
    xi = draw_noise(config)
    s = signal_values(signal, config.n)
    y = np.empty(config.n + 1, dtype=np.float64)
    y[0] = 0.0
    prev = y[0]
    for k in range(1, config.n + 1):
        prev = s[k - 1] * prev + xi[k - 1]
        y[k] = prev
    return Path(values=y, config=config)


def substream_seed(master_seed: int, domain: int, *indices: int) -> int:
    """Derive a child seed for an experiment component.

    Components of a larger run (risk scenarios, diagnostic suites, traces)
    each get their own master seed derived as
    ``SeedSequence(master_seed, spawn_key=(domain, *indices))``, so adding
    or reordering components never shifts the noise any other component
    sees.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(domain, *indices))
    return int(ss.generate_state(1, np.uint64)[0])
