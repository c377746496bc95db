"""TOML experiment configs: strict loading, validation, builders.

Every module precondition that can be checked statically is checked at load
time, all violations are collected and reported together, and unknown keys
are rejected so typos cannot silently fall back to defaults.  Values set on
the command line via --override key.path=value are merged into the raw
mapping before validation and therefore change the config hash recorded in
the artifacts.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .grid import DIM_MODES, Field, Grid, make_grid, norms
from .model import WELL_KINDS, NonlinearityModel, PotentialSpec, Well
from .semiflow import MonitorConfig


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid config:\n" + "\n".join(f"  - {p}" for p in problems))


def _positive(v) -> bool:
    return v > 0


def _nonnegative(v) -> bool:
    return v >= 0


@dataclass(frozen=True)
class WellConfig:
    kind: str = field(
        default="zero",
        metadata={"check": lambda v: v in WELL_KINDS, "msg": f"must be one of {WELL_KINDS}"},
    )
    amplitude: float = 0.0
    width: float = field(default=1.0, metadata={"check": _positive, "msg": "must be > 0"})

    def build(self) -> Well:
        return Well(self.kind, self.amplitude, self.width)


@dataclass(frozen=True)
class PotentialConfig:
    base_level: float = field(default=1.0, metadata={"check": _positive, "msg": "must be > 0"})
    well: WellConfig = WellConfig()

    def build(self) -> PotentialSpec:
        return PotentialSpec(self.base_level, self.well.build())


_FIELD_KINDS = ("zero", "gaussian", "random")


@dataclass(frozen=True)
class FieldConfig:
    """Initial-data recipe: zero, a gaussian bump, or a seeded random field."""

    kind: str = field(
        default="gaussian",
        metadata={"check": lambda v: v in _FIELD_KINDS, "msg": f"must be one of {_FIELD_KINDS}"},
    )
    amplitude: float = 1.0
    width: float = field(default=1.0, metadata={"check": _positive, "msg": "must be > 0"})
    center: float = 0.0

    def build(self, grid: Grid, rng: np.random.Generator) -> Field:
        if self.kind == "zero":
            return Field(np.zeros(grid.n_interior), grid)
        if self.kind == "gaussian":
            vals = self.amplitude * np.exp(-(((grid.nodes - self.center) / self.width) ** 2))
            return Field(vals, grid)
        if self.kind == "random":
            raw = rng.standard_normal(grid.n_interior)
            h1 = norms(Field(raw, grid))[1]
            return Field(raw * (self.amplitude / max(h1, 1e-300)), grid)
        raise ValueError(f"unknown field kind {self.kind!r}")


@dataclass(frozen=True)
class GridConfig:
    half_width: float = field(default=10.0, metadata={"check": _positive, "msg": "must be > 0"})
    n_interior: int = field(default=199, metadata={"check": lambda v: v >= 3, "msg": "must be >= 3"})
    dim_mode: str = field(
        default="line",
        metadata={"check": lambda v: v in DIM_MODES, "msg": f"must be one of {DIM_MODES}"},
    )

    def build(self) -> Grid:
        return make_grid(self.half_width, self.n_interior, self.dim_mode)


@dataclass(frozen=True)
class ModelConfig:
    alpha: PotentialConfig = PotentialConfig()
    gamma: PotentialConfig = PotentialConfig()
    s0: float = field(default=1.0, metadata={"check": _positive, "msg": "must be > 0"})
    nu: float = field(default=0.0, metadata={"check": _nonnegative, "msg": "must be >= 0"})
    q: float = field(default=2.0, metadata={"check": lambda v: v >= 2, "msg": "must be >= 2"})
    b: WellConfig | None = None  # omitted: auto dissipativity certificate
    c: WellConfig | None = None

    def build(self) -> NonlinearityModel:
        nu = self.nu if self.nu > 0 else min(self.alpha.base_level, self.gamma.base_level)
        return NonlinearityModel(
            alpha=self.alpha.build(),
            gamma=self.gamma.build(),
            s0=self.s0,
            nu=nu,
            q=self.q,
            b=self.b.build() if self.b is not None else None,
            c=self.c.build() if self.c is not None else Well(),
        )


@dataclass(frozen=True)
class RunConfig:
    dt: float = field(default=1e-3, metadata={"check": _positive, "msg": "must be > 0"})
    T: float = field(default=20.0, metadata={"check": _positive, "msg": "must be > 0"})
    r_cap: float = field(default=1e3, metadata={"check": _positive, "msg": "must be > 0"})
    k_list: tuple[float, ...] = (2.5, 5.0)
    seed: int = 12345
    eps_conv: float = field(default=1e-8, metadata={"check": _nonnegative, "msg": "must be >= 0"})
    conv_streak: int = field(default=10, metadata={"check": _positive, "msg": "must be > 0"})
    state_stride: int = field(default=0, metadata={"check": _nonnegative, "msg": "must be >= 0"})
    u0: FieldConfig = FieldConfig()

    def monitors(self) -> MonitorConfig:
        return MonitorConfig(
            r_cap=self.r_cap,
            eps_conv=self.eps_conv,
            conv_streak=self.conv_streak,
            k_list=tuple(self.k_list),
            state_stride=self.state_stride,
        )


@dataclass(frozen=True)
class SpectrumConfig:
    tol: float = 0.0  # 0: default 10 h^2


@dataclass(frozen=True)
class EquilibriaConfig:
    n_random: int = 16
    eigen_amplitudes: tuple[float, ...] = (0.5, 1.0, 2.0)
    random_amplitude: float = 1.0
    dedup_tol_factor: float = field(default=1e-4, metadata={"check": _positive, "msg": "must be > 0"})
    delta_trivial: float = field(default=1e-3, metadata={"check": _positive, "msg": "must be > 0"})


@dataclass(frozen=True)
class HomotopyConfig:
    n_lambda: int = field(default=11, metadata={"check": lambda v: v >= 2, "msg": "must be >= 2"})
    lambda_grid: tuple[float, ...] = ()  # overrides n_lambda when nonempty
    n_probes: int = 6
    probe_amplitude: float = 0.5
    T: float = field(default=30.0, metadata={"check": _positive, "msg": "must be > 0"})

    def grid_points(self):
        if self.lambda_grid:
            return list(self.lambda_grid)
        return np.linspace(0.0, 1.0, self.n_lambda).tolist()


@dataclass(frozen=True)
class HeteroclinicConfig:
    eps_seed: float = field(default=1e-2, metadata={"check": _positive, "msg": "must be > 0"})
    T_max: float = field(default=500.0, metadata={"check": _positive, "msg": "must be > 0"})
    conn_tol_factor: float = 1e-6
    full_trajectories: bool = False


@dataclass(frozen=True)
class AdmissibilityConfig:
    n_trajectories: int = 40
    k: float = field(default=5.0, metadata={"check": _positive, "msg": "must be > 0"})
    tau: float = field(default=1.0, metadata={"check": _positive, "msg": "must be > 0"})
    amplitude: float = 0.5
    R: float = 0.0  # 0: twice the largest initial h1


@dataclass(frozen=True)
class ConvergenceConfig:
    j_list: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64)
    delta: float = field(default=0.5, metadata={"check": _positive, "msg": "must be > 0"})
    T: float = field(default=5.0, metadata={"check": _positive, "msg": "must be > 0"})


@dataclass(frozen=True)
class CertifyConfig:
    u_range: float = field(default=10.0, metadata={"check": _positive, "msg": "must be > 0"})
    n_samples: int = field(default=201, metadata={"check": lambda v: v >= 3, "msg": "must be >= 3"})
    u_large_factor: float = field(default=1e3, metadata={"check": _positive, "msg": "must be > 0"})


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridConfig = GridConfig()
    model: ModelConfig = ModelConfig()
    run: RunConfig = RunConfig()
    spectrum: SpectrumConfig = SpectrumConfig()
    equilibria: EquilibriaConfig = EquilibriaConfig()
    homotopy: HomotopyConfig = HomotopyConfig()
    heteroclinic: HeteroclinicConfig = HeteroclinicConfig()
    admissibility: AdmissibilityConfig = AdmissibilityConfig()
    convergence: ConvergenceConfig = ConvergenceConfig()
    certify: CertifyConfig = CertifyConfig()
    config_hash: str = ""


_SCALARS = {float: (int, float), int: (int,), str: (str,), bool: (bool,)}


def _coerce(value, ftype, path: str, errors: list[str]):
    if dataclasses.is_dataclass(ftype):
        if not isinstance(value, dict):
            errors.append(f"{path}: expected a table")
            return None
        return _build_section(ftype, value, path, errors)
    origin = getattr(ftype, "__origin__", None)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            errors.append(f"{path}: expected a list")
            return None
        item_t = ftype.__args__[0]
        out = []
        for i, v in enumerate(value):
            cv = _coerce(v, item_t, f"{path}[{i}]", errors)
            if cv is not None:
                out.append(cv)
        return tuple(out)
    for base, accepted in _SCALARS.items():
        if ftype is base:
            if isinstance(value, bool) and base is not bool:
                errors.append(f"{path}: expected {base.__name__}, got bool")
                return None
            if isinstance(value, accepted):
                return base(value)
            errors.append(f"{path}: expected {base.__name__}, got {type(value).__name__}")
            return None
    errors.append(f"{path}: unsupported config type {ftype}")
    return None


_OPTIONAL_SECTIONS = {"b": WellConfig, "c": WellConfig}


def _build_section(cls, data: dict, path: str, errors: list[str]):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            errors.append(f"{path}.{key}: unknown key")
            continue
        f = known[key]
        ftype = f.type if not isinstance(f.type, str) else _resolve_type(cls, f.name)
        coerced = _coerce(value, ftype, f"{path}.{key}", errors)
        if coerced is None:
            continue
        check = f.metadata.get("check")
        if check is not None and not check(coerced):
            errors.append(f"{path}.{key}: {f.metadata.get('msg', 'invalid value')} (got {value!r})")
            continue
        kwargs[key] = coerced
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"{path}: {exc}")
        return None


def _resolve_type(cls, name: str):
    # `from __future__ import annotations` stringizes field types; undo that,
    # mapping the optional well sections by hand
    if name in _OPTIONAL_SECTIONS:
        return _OPTIONAL_SECTIONS[name]
    import typing

    hints = typing.get_type_hints(cls)
    return hints[name]


def config_from_dict(raw: dict) -> ExperimentConfig:
    errors: list[str] = []
    cfg = _build_section(ExperimentConfig, raw, "config", errors)
    if errors or cfg is None:
        raise ConfigError(errors or ["could not build config"])
    digest = hashlib.sha256(
        json.dumps(raw, sort_keys=True, default=str).encode()
    ).hexdigest()[:12]
    return dataclasses.replace(cfg, config_hash=digest)


def parse_override(expr: str) -> tuple[list[str], object]:
    """key.path=value with the value read as a TOML literal."""
    if "=" not in expr:
        raise ConfigError([f"override {expr!r} is not of the form key.path=value"])
    key, _, raw_value = expr.partition("=")
    path = [p.strip() for p in key.strip().split(".")]
    if not all(path):
        raise ConfigError([f"override {expr!r} has an empty key component"])
    try:
        value = tomllib.loads(f"v = {raw_value.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw_value.strip()
    return path, value


def apply_override(raw: dict, path: list[str], value) -> None:
    node = raw
    for part in path[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError([f"override path {'.'.join(path)} crosses a non-table value"])
    node[path[-1]] = value


def load_config(path: str | Path, overrides: list[str] = ()) -> ExperimentConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    for expr in overrides:
        key_path, value = parse_override(expr)
        apply_override(raw, key_path, value)
    return config_from_dict(raw)
