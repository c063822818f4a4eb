"""
Experiment configuration files.

A config file uses the dotenv KEY=VALUE format, one flat namespace with a prefix
per section (KERNEL_, SCHEDULE_, GRID_, BUDGET_, TOL_, SPACE_, OUTPUT_). Lists
are comma-separated. SEED is mandatory; there is no wall-clock default.
"""

import hashlib
import json
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Mapping, Optional, Tuple

from dotenv import dotenv_values

from config.settings import Config
from models.errors import ConfigError, ImpatientWalkError
from services.kernels import Domain, make_drift_kernel, make_drift_profile, make_lattice_kernel, make_orbit_kernel
from services.passage import make_schedule

EXPERIMENTS = ("phase-sweep", "uniform-test", "classify", "excursions", "range", "space")
DRIFT_KERNELS = ("Lamperti", "LogLamperti", "Zero", "Constant", "Tabulated")
OUTPUT_FORMATS = ("csv", "json")
# SCHEDULE_KIND for the classification of s(e) = (1 + ||e||)^-SCHEDULE_PARAM on a lattice
SPACE_SCHEDULE = "Space"


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "Zero"
    param: float = 0.0
    domain: str = Domain.HALF_LINE.value
    x_min: int = 1
    table: Tuple[float, ...] = ()
    left_kind: str = ""
    left_param: float = 0.0
    k_max: int = 64
    dim: int = 1


@dataclass(frozen=True)
class ScheduleSpec:
    kind: str = "Constant"
    param: float = 0.0
    sequence: Tuple[float, ...] = ()


@dataclass(frozen=True)
class GridSpec:
    c: Tuple[float, ...] = ()
    alpha: Tuple[float, ...] = ()
    d: Tuple[float, ...] = ()
    n: Tuple[int, ...] = ()
    step_cap: Tuple[int, ...] = ()


@dataclass(frozen=True)
class BudgetSpec:
    replicas: int = 0
    step_cap: int = Config.STEP_CAP
    m_horizon: int = Config.M_HORIZON
    j_horizon: int = Config.J_HORIZON
    streams: int = 1
    workers: int = Config.WORKERS
    batch: int = Config.MC_BATCH
    edge_cap: int = 0
    n: int = 0
    control_replicas: int = 0
    t_max: float = 0.0
    checkpoints: int = 16
    paths: int = 0
    successive: int = 0
    start: int = 0
    exit_n: int = 16
    tail_m: int = 50
    trace_steps: int = 1000


@dataclass(frozen=True)
class TolSpec:
    abs: float = Config.SERIES_ABS_TOL
    rel: float = Config.SERIES_REL_TOL
    ks: float = Config.KS_TOLERANCE
    sigmas: float = 3.0
    boundary: float = 1e-9


@dataclass(frozen=True)
class SpaceSpec:
    graph: str = "Z"
    alpha: float = 2.0
    core_radius: int = 20


@dataclass(frozen=True)
class OutputSpec:
    dir: str = Config.OUTPUT_DIR
    format: str = Config.OUTPUT_FORMAT
    name: str = ""


_SECTIONS = (
    ("KERNEL", "kernel", KernelSpec),
    ("SCHEDULE", "schedule", ScheduleSpec),
    ("GRID", "grid", GridSpec),
    ("BUDGET", "budget", BudgetSpec),
    ("TOL", "tol", TolSpec),
    ("SPACE", "space", SpaceSpec),
    ("OUTPUT", "output", OutputSpec),
)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    kernel: KernelSpec = field(default_factory=KernelSpec)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    budget: BudgetSpec = field(default_factory=BudgetSpec)
    tol: TolSpec = field(default_factory=TolSpec)
    space: SpaceSpec = field(default_factory=SpaceSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    def to_mapping(self, include_output: bool = True) -> Dict[str, Any]:
        """Flat KEY -> value mapping in a fixed order; lists stay lists."""
        out: Dict[str, Any] = {"EXPERIMENT": self.experiment, "SEED": self.seed}
        for prefix, attr, _ in _SECTIONS:
            if prefix == "OUTPUT" and not include_output:
                continue
            spec = getattr(self, attr)
            for f in fields(spec):
                value = getattr(spec, f.name)
                out[f"{prefix}_{f.name.upper()}"] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "ExperimentConfig":
        """Parse a flat mapping (strings from a file or native values from JSON)."""
        known = {"EXPERIMENT", "SEED"}
        sections = {}
        for prefix, attr, spec_cls in _SECTIONS:
            values = {}
            for f in fields(spec_cls):
                key = f"{prefix}_{f.name.upper()}"
                known.add(key)
                raw = mapping.get(key)
                if raw is None or raw == "":
                    continue
                values[f.name] = _coerce(key, raw, f.default)
            sections[attr] = spec_cls(**values)

        unknown = sorted(k for k in mapping if k not in known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

        experiment = str(mapping.get("EXPERIMENT") or "").strip()
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"EXPERIMENT must be one of {', '.join(EXPERIMENTS)}, got {experiment!r}")
        seed = mapping.get("SEED")
        if seed is None or seed == "":
            raise ConfigError("SEED is mandatory")
        seed = _coerce("SEED", seed, 0)
        if seed < 0:
            raise ConfigError("SEED must be nonnegative")
        cfg = cls(experiment, seed, **sections)
        validate(cfg)
        return cfg

    def with_overrides(self, overrides: Optional[Mapping[str, Any]]) -> "ExperimentConfig":
        if not overrides:
            return self
        mapping = self.to_mapping()
        mapping.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig.from_mapping(mapping)

    @property
    def config_hash(self) -> str:
        """sha256 of the canonical JSON of the mapping (output section excluded)."""
        payload = json.dumps(self.to_mapping(include_output=False), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_experiment_config(path: str, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Read and validate an experiment config file.

    Args:
        path: dotenv-style config file
        overrides: KEY -> value pairs applied on top of the file (None values ignored)

    Raises:
        ConfigError: unreadable file, unknown keys, bad values or a missing SEED
    """
    try:
        with open(path, encoding="utf-8") as f:
            raw = dotenv_values(stream=f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e}") from e
    mapping = {k.upper(): v for k, v in raw.items()}
    mapping.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.from_mapping(mapping)


def _coerce(key: str, raw: Any, default: Any) -> Any:
    try:
        if isinstance(default, tuple):
            items = raw.split(",") if isinstance(raw, str) else list(raw)
            items = [x for x in (str(i).strip() for i in items) if x]
            if key in ("GRID_N", "GRID_STEP_CAP"):
                return tuple(_as_int(x) for x in items)
            return tuple(float(x) for x in items)
        if isinstance(default, int):
            return _as_int(raw)
        if isinstance(default, float):
            return float(raw)
        return str(raw).strip()
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from e


def _as_int(raw: Any) -> int:
    # accepts 1e6 style budgets
    value = float(raw)
    if value != int(value):
        raise ValueError(f"{raw!r} is not an integer")
    return int(value)


def validate(cfg: ExperimentConfig) -> None:
    """Check every referenced parameter by building the objects it names."""
    b = cfg.budget
    for name in ("replicas", "edge_cap", "control_replicas", "paths", "successive"):
        if getattr(b, name) < 0:
            raise ConfigError(f"BUDGET_{name.upper()} must be nonnegative")
    for name in ("step_cap", "m_horizon", "j_horizon", "streams", "workers", "batch", "checkpoints"):
        if getattr(b, name) < 1:
            raise ConfigError(f"BUDGET_{name.upper()} must be >= 1")
    if cfg.output.format not in OUTPUT_FORMATS:
        raise ConfigError(f"OUTPUT_FORMAT must be csv or json, got {cfg.output.format!r}")
    if any(cap < 1 for cap in cfg.grid.step_cap):
        raise ConfigError("GRID_STEP_CAP entries must be >= 1")
    if cfg.tol.abs <= 0.0 or cfg.tol.rel < 0.0 or cfg.tol.ks <= 0.0 or cfg.tol.sigmas <= 0.0:
        raise ConfigError("tolerances must be positive")

    if cfg.experiment == "phase-sweep":
        if not cfg.grid.c or not cfg.grid.alpha:
            raise ConfigError("phase-sweep needs GRID_C and GRID_ALPHA")
        for c in cfg.grid.c:
            _build(lambda: make_drift_profile("Lamperti", c, cfg.kernel.x_min))
        for alpha in cfg.grid.alpha:
            _build(lambda: make_schedule("Power", alpha))
    elif cfg.experiment == "uniform-test":
        if not (cfg.grid.n or b.n):
            raise ConfigError("uniform-test needs BUDGET_N or GRID_N")
    elif cfg.experiment == "space":
        if cfg.space.graph not in ("Z", "Z2"):
            raise ConfigError(f"SPACE_GRAPH must be Z or Z2, got {cfg.space.graph!r}")
        if cfg.space.core_radius < 0:
            raise ConfigError("SPACE_CORE_RADIUS must be nonnegative")
    else:
        build_kernel(cfg)
        if cfg.schedule.kind == SPACE_SCHEDULE:
            if cfg.experiment != "classify" or cfg.kernel.kind != "Lattice":
                raise ConfigError("a Space schedule is classified on a Lattice kernel only")
            if not cfg.schedule.param > 0.0:
                raise ConfigError("a Space schedule needs SCHEDULE_PARAM > 0")
        else:
            build_schedule(cfg)
        if cfg.experiment == "range" and not b.t_max > 0.0:
            raise ConfigError("range needs BUDGET_T_MAX > 0")


def _build(factory):
    try:
        return factory()
    except ImpatientWalkError as e:
        raise ConfigError(str(e)) from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid parameter: {e}") from e


def build_kernel(cfg: ExperimentConfig, **changes):
    """The kernel the config names; keyword changes override KernelSpec fields."""
    k = KernelSpec(**{**cfg.kernel.__dict__, **changes})
    if k.kind == "Orbit":
        return _build(lambda: make_orbit_kernel(k.k_max))
    if k.kind == "Lattice":
        return _build(lambda: make_lattice_kernel(k.dim))
    if k.kind not in DRIFT_KERNELS:
        raise ConfigError(f"unknown KERNEL_KIND {k.kind!r}")

    def factory():
        left = None
        if k.left_kind:
            left = make_drift_profile(k.left_kind, k.left_param, k.x_min)
        return make_drift_kernel(k.kind, k.param, Domain(k.domain), k.x_min, k.table or None, left)

    return _build(factory)


def build_schedule(cfg: ExperimentConfig, **changes):
    s = ScheduleSpec(**{**cfg.schedule.__dict__, **changes})
    if s.kind == SPACE_SCHEDULE:
        raise ConfigError("space-dependent costs are not a crossing-count schedule")
    return _build(lambda: make_schedule(s.kind, s.param, s.sequence or None))


def grid_values(values: Tuple, fallback) -> List:
    """A grid list, or the single fallback value when the grid is empty."""
    return list(values) if values else [fallback]
