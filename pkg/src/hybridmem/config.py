"""Experiment configuration: nested dataclasses, JSON files and ``path=value`` overrides.

Every field has a default, so an empty file (or no file) describes the
4x4 Table-1-style study. Unknown keys and ill-typed values are rejected
with the dotted path of the offending field.
"""
from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, get_type_hints

from .area import AreaSpec, CellConstant
from .device import DeviceParams, read_resistance
from .protocol import TimingConfig
from .solver import SolverConfig
from .topology import HybridArraySpec, SwitchParams

R_ON = 124947.93185363549  # 1 V read of a fully-ON default device


class ConfigError(ValueError):
    """Configuration problem; ``path`` is the dotted field path."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path or '<root>'}: {msg}")
        self.path = path


@dataclass
class DeviceBlock:
    Vp: float = 1.088
    Vn: float = 1.088
    Ap: float = 816000.0
    An: float = 816000.0
    xp: float = 0.985
    xn: float = 0.985
    alpha_p: float = 0.1
    alpha_n: float = 0.1
    a1: float = 1.6e-4
    a2: float = 1.6e-4
    b: float = 0.05
    x0: float = 0.01
    x_floor: float = 1e-6


@dataclass
class TopologyBlock:
    type: str = "hybrid"  # hybrid | crossbar | 1t1m
    tile_rows: int = 4
    tile_cols: int = 4
    tiles_x: int = 2
    tiles_y: int = 2
    crossbar_rows: int = 4  # crossbar and 1t1m only
    crossbar_cols: int = 4
    wire_r: float = 500.0
    sense_r_ron: float = 8.0  # sense resistor in units of R_on
    threshold_r: float | None = None
    switch_r_closed: float = 1e3
    switch_r_open: float = 1e10


@dataclass
class TimingBlock:
    write_width: float = 10e-9
    vw: float = 7.0
    v_read: float = 1.0
    read_width: float = 0.3e-9
    gap: float = 1e-9
    ramp: float = 0.1e-9


@dataclass
class WorkloadBlock:
    seed: int = 1
    rounds: int = 50
    energy_writes: int = 10  # writes in the writes-only energy run
    read_passes: int = 1  # full-array passes in the reads-only energy run


@dataclass
class SolverBlock:
    dt: float = 0.05e-9
    v_tol: float = 1e-9
    i_tol: float = 1e-12
    max_iter: int = 100


@dataclass
class SweepBlock:
    sense_r_ron: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0, 8.0])
    vw: list[float] = field(default_factory=list)  # empty -> timing.vw only
    tile: list[int] = field(default_factory=list)  # square tile sizes; empty -> topology tile
    rounds: int = 20
    energies: bool = False  # also run the energy workloads at every point


@dataclass
class ScalingBlock:
    sizes: list[int] = field(default_factory=lambda: [4, 8, 12, 16])
    writes: int = 5  # single-bit writes per background
    backgrounds: int = 8  # independent random ON/OFF backgrounds pooled per size


@dataclass
class DeviceTestBlock:
    v_pulse: float = 7.0
    pulse_width: float = 10e-9
    read_only: bool = False


@dataclass
class AreaBlock:
    feature_nm: float = 45.0
    transistor_f2: float = 50.0
    memristor_f2: float = 4.0
    tiles: list[int] = field(default_factory=lambda: [4, 8])
    sram_f2: float = 146.1
    sram_nm: float = 45.0
    stt_f2: float = 31.14
    stt_nm: float = 65.0


@dataclass
class OutputBlock:
    directory: str = "runs"
    probes: list[str] = field(default_factory=list)  # extra node names to record


@dataclass
class ExperimentConfig:
    device: DeviceBlock = field(default_factory=DeviceBlock)
    topology: TopologyBlock = field(default_factory=TopologyBlock)
    timing: TimingBlock = field(default_factory=TimingBlock)
    workload: WorkloadBlock = field(default_factory=WorkloadBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    scaling: ScalingBlock = field(default_factory=ScalingBlock)
    device_test: DeviceTestBlock = field(default_factory=DeviceTestBlock)
    area: AreaBlock = field(default_factory=AreaBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    # -- conversions -----------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def device_params(self) -> DeviceParams:
        try:
            return DeviceParams(**dataclasses.asdict(self.device))
        except ValueError as exc:
            raise ConfigError("device", str(exc)) from None

    def r_on(self) -> float:
        return float(read_resistance(1.0, self.device_params(), 1.0))

    def switch_params(self) -> SwitchParams:
        t = self.topology
        try:
            return SwitchParams(t.switch_r_closed, t.switch_r_open)
        except ValueError as exc:
            raise ConfigError("topology.switch_r_closed", str(exc)) from None

    def hybrid_spec(self) -> HybridArraySpec:
        t = self.topology
        try:
            return HybridArraySpec(
                tile_rows=t.tile_rows, tile_cols=t.tile_cols, tiles_x=t.tiles_x, tiles_y=t.tiles_y,
                wire_r=t.wire_r, sense_r=t.sense_r_ron * self.r_on(), threshold_r=t.threshold_r,
                switch=self.switch_params(), params=self.device_params())
        except ValueError as exc:
            raise ConfigError("topology", str(exc)) from None

    def timing_config(self) -> TimingConfig:
        return TimingConfig(**dataclasses.asdict(self.timing))

    def solver_config(self) -> SolverConfig:
        try:
            return SolverConfig(**dataclasses.asdict(self.solver))
        except ValueError as exc:
            raise ConfigError("solver", str(exc)) from None

    def area_spec(self) -> AreaSpec:
        a = self.area
        try:
            return AreaSpec(
                feature_nm=a.feature_nm, transistor_f2=a.transistor_f2, memristor_f2=a.memristor_f2,
                tile_rows=self.topology.tile_rows, tile_cols=self.topology.tile_cols,
                comparisons={"SRAM": CellConstant(a.sram_f2, a.sram_nm),
                             "STT-MRAM": CellConstant(a.stt_f2, a.stt_nm)})
        except ValueError as exc:
            raise ConfigError("area", str(exc)) from None

    def validate(self) -> "ExperimentConfig":
        """Cross-field checks; returns self so calls can chain."""
        t = self.topology
        if t.type not in ("hybrid", "crossbar", "1t1m"):
            raise ConfigError("topology.type", f"unknown topology {t.type!r}")
        params = self.device_params()
        self.hybrid_spec()
        self.solver_config()
        self.area_spec()
        try:
            self.timing_config().check(params)
        except ValueError as exc:
            raise ConfigError("timing", str(exc)) from None
        for name in ("crossbar_rows", "crossbar_cols"):
            if getattr(t, name) < 1:
                raise ConfigError(f"topology.{name}", "must be >= 1")
        w = self.workload
        if w.rounds < 1:
            raise ConfigError("workload.rounds", "must be >= 1")
        if w.seed < 0 or w.seed >= 2**64:
            raise ConfigError("workload.seed", "must be an unsigned 64-bit integer")
        if w.energy_writes < 1 or w.read_passes < 1:
            raise ConfigError("workload", "energy_writes and read_passes must be >= 1")
        s = self.sweep
        if s.rounds < 1:
            raise ConfigError("sweep.rounds", "must be >= 1")
        for i, v in enumerate(s.sense_r_ron):
            if v <= 0:
                raise ConfigError(f"sweep.sense_r_ron[{i}]", "must be positive")
        for i, v in enumerate(s.tile):
            if not 1 <= v <= 16:
                raise ConfigError(f"sweep.tile[{i}]", "tile size must lie in 1..16")
        for i, v in enumerate(self.scaling.sizes):
            if v < 1:
                raise ConfigError(f"scaling.sizes[{i}]", "must be >= 1")
        if self.scaling.writes < 1:
            raise ConfigError("scaling.writes", "must be >= 1")
        if self.scaling.backgrounds < 1:
            raise ConfigError("scaling.backgrounds", "must be >= 1")
        if self.device_test.pulse_width <= 0:
            raise ConfigError("device_test.pulse_width", "must be positive")
        for i, v in enumerate(self.area.tiles):
            if v < 1:
                raise ConfigError(f"area.tiles[{i}]", "must be >= 1")
        return self


# -- presets ----------------------------------------------------------------


def preset(name: str) -> ExperimentConfig:
    """``tile4`` (Vw 7 V, R_s 8 R_on) or ``tile8`` (Vw 7.5 V, R_s 0.5 R_on)."""
    cfg = ExperimentConfig()
    if name == "tile4":
        return cfg
    if name == "tile8":
        cfg.topology.tile_rows = cfg.topology.tile_cols = 8
        cfg.topology.sense_r_ron = 0.5
        cfg.timing.vw = 7.5
        return cfg
    raise KeyError(f"unknown preset {name!r}; choose tile4 or tile8")


# -- dict / JSON loading ------------------------------------------------------


def _coerce(value: Any, tp: Any, path: str) -> Any:
    origin = getattr(tp, "__origin__", None)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(path, f"expected an object, got {type(value).__name__}")
        return _from_dict(tp, value, path)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        (inner,) = tp.__args__
        return [_coerce(v, inner, f"{path}[{i}]") for i, v in enumerate(value)]
    args = getattr(tp, "__args__", None)
    if args and type(None) in args:  # Optional[X]
        if value is None:
            return None
        return _coerce(value, next(a for a in args if a is not type(None)), path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    raise ConfigError(path, f"unsupported field type {tp!r}")


def _from_dict(cls, data: dict, path: str = ""):
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"{path}.{key}".lstrip("."), "unknown field")
    obj = cls()
    for key, value in data.items():
        setattr(obj, key, _coerce(value, hints[key], f"{path}.{key}".lstrip(".")))
    return obj


def from_dict(data: dict) -> ExperimentConfig:
    return _from_dict(ExperimentConfig, data).validate()


def load(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig().validate()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path} is not valid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ConfigError("", "top level must be an object")
    return from_dict(data)


def apply_overrides(cfg: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply ``block.field=value`` strings; values parse as JSON, else as bare strings."""
    data = copy.deepcopy(cfg.to_dict())
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(key, f"override {item!r} is not of the form path=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parts = key.split(".")
        node = data
        for i, part in enumerate(parts[:-1]):
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(".".join(parts[: i + 1]), "unknown field")
            node = node[part]
        if not isinstance(node, dict) or parts[-1] not in node:
            raise ConfigError(key, "unknown field")
        node[parts[-1]] = value
    return from_dict(data)
