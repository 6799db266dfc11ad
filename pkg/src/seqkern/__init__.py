"""Sequential kernel estimation at a point with adaptive bandwidth selection.

The package splits into a small estimation core and a Monte Carlo lab on
top of it:

* ``signals`` -- coefficient functions with smoothness/stability metadata
* ``process`` -- path simulation with addressable per-replication noise
* ``estimator`` -- windows, information-based stopping, the point estimate
  and its exact bias/noise error split
* ``adaptive`` -- the bandwidth ladder and the comparison selection rule
* ``engine`` -- batched evaluation, bit-for-bit equal to the scalar core
* ``risklab`` -- risk tables and bound-checking suites
* ``reports`` / ``config`` / ``cli`` -- CSV output and the command line
"""

from .adaptive import (
    AdaptiveEstimate,
    BandwidthGrid,
    adaptive_estimate,
    build_grid,
    default_lambda,
    omega_sequence,
    select_index,
)
from .estimator import (
    ErrorDecomposition,
    KernelWindow,
    SequentialEstimate,
    StoppingResult,
    accumulate,
    decompose_error,
    delta_n,
    make_window,
    point_estimate,
    stopping_time,
)
from .process import (
    Path,
    PathConfig,
    design_points,
    draw_noise,
    noise_stream,
    signal_values,
    simulate_path,
    substream_seed,
)
from .risklab import (
    LowerBoundDiagnostic,
    MomentReport,
    RiskExperiment,
    RiskReport,
    StoppingReport,
    TailReport,
    lower_bound_diagnostic,
    moment_suite,
    monte_carlo_risk,
    rate_normalizer,
    rate_stability,
    stopping_suite,
    tail_suite,
)
from .signals import (
    SignalFunction,
    empirical_holder_constant,
    empirical_sup,
    make_benchmark_signal,
    make_constant_signal,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveEstimate",
    "BandwidthGrid",
    "ErrorDecomposition",
    "KernelWindow",
    "LowerBoundDiagnostic",
    "MomentReport",
    "Path",
    "PathConfig",
    "RiskExperiment",
    "RiskReport",
    "SequentialEstimate",
    "SignalFunction",
    "StoppingReport",
    "StoppingResult",
    "TailReport",
    "accumulate",
    "adaptive_estimate",
    "build_grid",
    "decompose_error",
    "default_lambda",
    "delta_n",
    "design_points",
    "draw_noise",
    "empirical_holder_constant",
    "empirical_sup",
    "lower_bound_diagnostic",
    "make_benchmark_signal",
    "make_constant_signal",
    "make_window",
    "moment_suite",
    "monte_carlo_risk",
    "noise_stream",
    "omega_sequence",
    "point_estimate",
    "rate_normalizer",
    "rate_stability",
    "select_index",
    "signal_values",
    "simulate_path",
    "stopping_suite",
    "stopping_time",
    "substream_seed",
    "tail_suite",
]
