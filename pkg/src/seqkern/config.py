"""TOML experiment configuration: parsing, validation, defaults.

Two error layers with distinct exit codes in the CLI: ``ConfigError`` for
structural problems (unreadable file, missing or mistyped keys, unknown
signal kinds) and ``FieldError`` for values of the right type that fail a
numeric precondition (exponents outside (0, 1], nonpositive replication
counts, and so on).  A ``FieldError`` always names the offending field.

Layout::

    seed = 20260823          # required
    out_dir = "results"      # required

    [[scenario]]
    [scenario.signal]
    kind = "benchmark"       # or "constant"
    beta = 0.7               # benchmark only
    z0 = 0.70710678118654746
    # c = 0.5                # constant only
    n_list = [100, 1000]
    replications = 15000     # default if omitted
    [scenario.grid]
    beta_lo = 0.6
    beta_hi = 0.8
    K = 1.0                  # optional
    lambda = 7.6             # optional; default derived from K and beta_lo

    [suites.tail]            # all suite tables optional
    n = 1000
    h = 0.125                # default: bandwidth at the first scenario's beta
    replications = 100000
    z_values = [2.0, 2.5, 3.0]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import tomli

from .signals import SignalFunction, make_benchmark_signal, make_constant_signal


class ConfigError(Exception):
    """Structural configuration problem (missing/mistyped keys, bad file)."""


class FieldError(Exception):
    """A well-typed field whose value violates a precondition."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    z0: float
    beta: Optional[float]
    c: Optional[float]
    n_list: tuple
    replications: int
    beta_lo: float
    beta_hi: float
    holder_K: float
    lam: Optional[float]

    def build_signal(self) -> SignalFunction:
        if self.kind == "benchmark":
            return make_benchmark_signal(self.beta, self.z0)
        return make_constant_signal(self.c, self.z0)


@dataclass(frozen=True)
class TailSettings:
    n: int = 1000
    h: Optional[float] = None
    replications: int = 100_000
    z_values: tuple = (2.0, 2.5, 3.0)


@dataclass(frozen=True)
class MomentSettings:
    n: int = 1000
    replications: int = 10_000


@dataclass(frozen=True)
class StoppingSettings:
    n_list: tuple = (1000, 2000, 4000)
    h_list: tuple = (0.05, 0.1, 3.0)
    replications: int = 10_000


@dataclass(frozen=True)
class LowerBoundSettings:
    n: int = 100_000
    replications: int = 500


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    out_dir: str
    scenarios: tuple
    tail: TailSettings = field(default_factory=TailSettings)
    moments: MomentSettings = field(default_factory=MomentSettings)
    stopping: StoppingSettings = field(default_factory=StoppingSettings)
    lowerbound: LowerBoundSettings = field(default_factory=LowerBoundSettings)


def _get(table, key, kinds, where, required=True, default=None):
    name = f"{where}.{key}" if where else key
    if key not in table:
        if required:
            raise ConfigError(f"missing required key '{name}'")
        return default
    val = table[key]
    if isinstance(val, bool) or not isinstance(val, kinds):
        names = "/".join(k.__name__ for k in (kinds if isinstance(kinds, tuple) else (kinds,)))
        raise ConfigError(f"'{name}' must be {names}, got {type(val).__name__}")
    return val


def _number(table, key, where, required=True, default=None):
    val = _get(table, key, (int, float), where, required, default)
    return None if val is None else float(val)


def _check(cond: bool, field_name: str, message: str):
    if not cond:
        raise FieldError(field_name, message)


def _parse_scenario(table, idx: int) -> ScenarioConfig:
    where = f"scenario[{idx}]"
    sig = _get(table, "signal", dict, where)
    kind = _get(sig, "kind", str, f"{where}.signal")
    if kind not in ("benchmark", "constant"):
        raise ConfigError(
            f"'{where}.signal.kind' must be 'benchmark' or 'constant', got '{kind}'"
        )
    z0 = _number(sig, "z0", f"{where}.signal")
    _check(0.0 < z0 < 1.0, f"{where}.signal.z0", f"must lie in (0, 1), got {z0}")
    beta = c = None
    if kind == "benchmark":
        beta = _number(sig, "beta", f"{where}.signal")
        _check(0.0 < beta <= 1.0, f"{where}.signal.beta", f"must lie in (0, 1], got {beta}")
    else:
        c = _number(sig, "c", f"{where}.signal")
        _check(abs(c) < 1.0, f"{where}.signal.c", f"must satisfy |c| < 1, got {c}")

    raw_n = _get(table, "n_list", list, where)
    if not raw_n or not all(isinstance(v, int) and not isinstance(v, bool) for v in raw_n):
        raise ConfigError(f"'{where}.n_list' must be a non-empty list of integers")
    for v in raw_n:
        _check(v >= 3, f"{where}.n_list", f"sample sizes must be >= 3, got {v}")

    reps = _get(table, "replications", int, where, required=False, default=15_000)
    _check(reps >= 1, f"{where}.replications", f"must be >= 1, got {reps}")

    grid = _get(table, "grid", dict, where)
    beta_lo = _number(grid, "beta_lo", f"{where}.grid")
    beta_hi = _number(grid, "beta_hi", f"{where}.grid")
    _check(
        0.0 < beta_lo < beta_hi <= 1.0,
        f"{where}.grid.beta_lo/beta_hi",
        f"need 0 < beta_lo < beta_hi <= 1, got ({beta_lo}, {beta_hi})",
    )
    holder_K = _number(grid, "K", f"{where}.grid", required=False, default=1.0)
    _check(holder_K > 0.0, f"{where}.grid.K", f"must be positive, got {holder_K}")
    lam = _number(grid, "lambda", f"{where}.grid", required=False)
    if lam is not None:
        _check(lam > 0.0, f"{where}.grid.lambda", f"must be positive, got {lam}")

    return ScenarioConfig(
        kind=kind,
        z0=z0,
        beta=beta,
        c=c,
        n_list=tuple(raw_n),
        replications=reps,
        beta_lo=beta_lo,
        beta_hi=beta_hi,
        holder_K=holder_K,
        lam=lam,
    )


def _parse_suites(table) -> dict:
    out = {}
    tail = table.get("tail")
    if tail is not None:
        n = _get(tail, "n", int, "suites.tail", required=False, default=1000)
        _check(n >= 2, "suites.tail.n", f"must be >= 2, got {n}")
        h = _number(tail, "h", "suites.tail", required=False)
        if h is not None:
            _check(h > 0.0, "suites.tail.h", f"must be positive, got {h}")
        reps = _get(tail, "replications", int, "suites.tail", required=False, default=100_000)
        _check(reps >= 1, "suites.tail.replications", f"must be >= 1, got {reps}")
        zs = _get(tail, "z_values", list, "suites.tail", required=False, default=[2.0, 2.5, 3.0])
        if not zs or not all(isinstance(z, (int, float)) and not isinstance(z, bool) for z in zs):
            raise ConfigError("'suites.tail.z_values' must be a non-empty list of numbers")
        for z in zs:
            _check(float(z) >= 2.0, "suites.tail.z_values", f"levels must be >= 2, got {z}")
        out["tail"] = TailSettings(n=n, h=h, replications=reps, z_values=tuple(float(z) for z in zs))
    moments = table.get("moments")
    if moments is not None:
        n = _get(moments, "n", int, "suites.moments", required=False, default=1000)
        _check(n >= 2, "suites.moments.n", f"must be >= 2, got {n}")
        reps = _get(moments, "replications", int, "suites.moments", required=False, default=10_000)
        _check(reps >= 1, "suites.moments.replications", f"must be >= 1, got {reps}")
        out["moments"] = MomentSettings(n=n, replications=reps)
    stopping = table.get("stopping")
    if stopping is not None:
        raw_n = _get(stopping, "n_list", list, "suites.stopping", required=False, default=[1000, 2000, 4000])
        if not raw_n or not all(isinstance(v, int) and not isinstance(v, bool) for v in raw_n):
            raise ConfigError("'suites.stopping.n_list' must be a non-empty list of integers")
        for v in raw_n:
            _check(v >= 2, "suites.stopping.n_list", f"sample sizes must be >= 2, got {v}")
        raw_h = _get(stopping, "h_list", list, "suites.stopping", required=False, default=[0.05, 0.1, 3.0])
        if not raw_h or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw_h):
            raise ConfigError("'suites.stopping.h_list' must be a non-empty list of numbers")
        for v in raw_h:
            _check(float(v) > 0.0, "suites.stopping.h_list", f"bandwidths must be positive, got {v}")
        reps = _get(stopping, "replications", int, "suites.stopping", required=False, default=10_000)
        _check(reps >= 1, "suites.stopping.replications", f"must be >= 1, got {reps}")
        out["stopping"] = StoppingSettings(
            n_list=tuple(raw_n), h_list=tuple(float(v) for v in raw_h), replications=reps
        )
    lower = table.get("lowerbound")
    if lower is not None:
        n = _get(lower, "n", int, "suites.lowerbound", required=False, default=100_000)
        _check(n >= 3, "suites.lowerbound.n", f"must be >= 3, got {n}")
        reps = _get(lower, "replications", int, "suites.lowerbound", required=False, default=500)
        _check(reps >= 1, "suites.lowerbound.replications", f"must be >= 1, got {reps}")
        out["lowerbound"] = LowerBoundSettings(n=n, replications=reps)
    return out


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment file.

    Raises ConfigError for structural problems and FieldError for numeric
    precondition violations; both carry messages suitable for direct
    display.
    """
    try:
        with open(path, "rb") as f:
            doc = tomli.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc

    seed = _get(doc, "seed", int, "")
    _check(0 <= seed < 2**64, "seed", f"must lie in [0, 2**64), got {seed}")
    out_dir = _get(doc, "out_dir", str, "")

    raw_scenarios = doc.get("scenario", [])
    if not isinstance(raw_scenarios, list) or not all(
        isinstance(s, dict) for s in raw_scenarios
    ):
        raise ConfigError("'scenario' must be an array of tables ([[scenario]])")
    scenarios = tuple(_parse_scenario(s, i) for i, s in enumerate(raw_scenarios))

    suites_table = doc.get("suites", {})
    if not isinstance(suites_table, dict):
        raise ConfigError("'suites' must be a table")
    suites = _parse_suites(suites_table)

    return ExperimentConfig(
        seed=seed,
        out_dir=out_dir,
        scenarios=scenarios,
        tail=suites.get("tail", TailSettings()),
        moments=suites.get("moments", MomentSettings()),
        stopping=suites.get("stopping", StoppingSettings()),
        lowerbound=suites.get("lowerbound", LowerBoundSettings()),
    )
