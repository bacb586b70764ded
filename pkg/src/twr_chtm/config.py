"""Run configuration loaded from TOML.

Required tables: [gait], [radar], [wall]. Everything else is optional and
falls back to defaults. A [dataset] table switches ``simulate`` from a single
walker to the 8-class preset dataset.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dsp import DspConfig
from .echo import DEFAULT_RCS, RadarConfig, ScattererSet, WallConfig
from .envelope import SmoothingConfig
from .evaluation import REPRESENTATIONS, Pipeline, config_hash
from .kinematics import Gait, GaitConfig

REQUIRED_SECTIONS = ("gait", "radar", "wall")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending section/field."""


@dataclass(frozen=True)
class ChtmParams:
    n_order: int = 32
    epsilon: float = 1e-6
    region: str = "micro"

    def validate(self) -> "ChtmParams":
        if self.n_order < 0:
            raise ValueError("chtm.n_order must be >= 0")
        if not self.epsilon > 0:
            raise ValueError("chtm.epsilon must be positive")
        if self.region not in ("macro", "micro"):
            raise ValueError("chtm.region must be 'macro' or 'micro'")
        return self


@dataclass(frozen=True)
class DatasetParams:
    per_class: int = 20
    range_limits: tuple = (1.0, 5.0)
    heading_jitter_deg: float = 10.0
    frequency_jitter: float = 0.10
    phase_jitter: float = 2 * math.pi

    def validate(self) -> "DatasetParams":
        if self.per_class < 1:
            raise ValueError("dataset.per_class must be >= 1")
        lo, hi = self.range_limits
        if not 0 < lo < hi:
            raise ValueError("dataset.range_limits must satisfy 0 < min < max")
        if self.frequency_jitter < 0 or self.frequency_jitter >= 1:
            raise ValueError("dataset.frequency_jitter must lie in [0, 1)")
        if self.heading_jitter_deg < 0 or self.phase_jitter < 0:
            raise ValueError("dataset jitters must be non-negative")
        return self


@dataclass(frozen=True)
class EvalParams:
    split_seed: int = 0
    test_fraction: float = 0.2
    snr_levels: tuple = (0.0, -8.0, -16.0)
    orders: tuple = (4, 8, 16, 32, 48, 64)
    representations: tuple = REPRESENTATIONS
    # k = 0 means nearest centroid, otherwise k-NN
    k: int = 0

    def validate(self) -> "EvalParams":
        if not 0 < self.test_fraction < 1:
            raise ValueError("eval.test_fraction must lie in (0, 1)")
        if not self.snr_levels or not self.orders:
            raise ValueError("eval.snr_levels and eval.orders must be non-empty")
        if any(o < 0 for o in self.orders):
            raise ValueError("eval.orders must be non-negative")
        bad = set(self.representations) - set(REPRESENTATIONS)
        if bad or not self.representations:
            raise ValueError(f"eval.representations must be a subset of {REPRESENTATIONS}")
        if self.k < 0:
            raise ValueError("eval.k must be >= 0")
        return self


@dataclass(frozen=True)
class RunConfig:
    gait: GaitConfig = GaitConfig()
    radar: RadarConfig = RadarConfig()
    wall: WallConfig = WallConfig()
    scatterers: ScattererSet = field(default_factory=ScattererSet)
    dsp: DspConfig = DspConfig()
    envelope: SmoothingConfig = SmoothingConfig()
    chtm: ChtmParams = ChtmParams()
    eval: EvalParams = EvalParams()
    dataset: DatasetParams | None = None
    seed: int = 0
    save_cubes: bool = False
    output: str = "out"

    def validate(self) -> "RunConfig":
        for name in ("gait", "radar", "wall", "scatterers", "dsp", "envelope", "chtm", "eval", "dataset"):
            sub = getattr(self, name)
            if sub is None:
                continue
            try:
                sub.validate()
            except ValueError as exc:
                msg = str(exc)
                raise ConfigError(msg if msg.startswith(name) else f"{name}: {msg}") from None
        if self.dsp.n_fft < self.radar.fast_samples:
            raise ConfigError("dsp.n_fft must be >= radar.fast_samples")
        if self.dsp.window_len > self.radar.pulses - 1:
            raise ConfigError("dsp.window_len exceeds the number of MTI pulses")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        return self

    def with_seed(self, seed: int | None) -> "RunConfig":
        return self if seed is None else replace(self, seed=int(seed))

    def pipeline(self, n_order: int | None = None) -> Pipeline:
        return Pipeline(self.radar, self.wall, self.scatterers, self.dsp, self.envelope,
                        self.chtm.n_order if n_order is None else n_order, self.chtm.epsilon)

    def to_dict(self) -> dict:
        """Canonical plain-data form; the output location is not part of it."""
        d = {name: _plain(getattr(self, name)) for name in
             ("gait", "radar", "wall", "dsp", "envelope", "chtm", "eval", "dataset", "seed", "save_cubes")}
        d["scatterers"] = dict(sorted(self.scatterers.rcs.items()))
        return d

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())

    @property
    def scene_hash(self) -> str:
        """Hash of everything that shapes the simulated maps (eval settings excluded)."""
        d = self.to_dict()
        d.pop("eval")
        return config_hash(d)

    @property
    def observation_time(self) -> float:
        return self.radar.pulses * self.radar.prt


def _plain(obj):
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    if isinstance(obj, Gait):
        return obj.value
    if hasattr(obj, "__dataclass_fields__"):
        return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _build(cls, section: str, table: dict, tuples=()):
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"{section}: unknown field(s) {', '.join(unknown)}")
    kwargs = {}
    for key, value in table.items():
        if key in tuples:
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from None


def _check_types(obj, section: str):
    """Reject strings where numbers belong and vice versa."""
    defaults = type(obj)()
    for f in fields(obj):
        ref, got = getattr(defaults, f.name), getattr(obj, f.name)
        if ref is None or got is None:
            continue
        if isinstance(ref, bool) != isinstance(got, bool):
            raise ConfigError(f"{section}.{f.name} has the wrong type")
        if isinstance(ref, (int, float)) and not isinstance(got, (int, float)):
            raise ConfigError(f"{section}.{f.name} must be a number")
        if isinstance(ref, str) and not isinstance(got, str):
            raise ConfigError(f"{section}.{f.name} must be a string")
        if isinstance(ref, tuple) and not isinstance(got, tuple):
            raise ConfigError(f"{section}.{f.name} must be an array")


def from_dict(doc: dict) -> RunConfig:
    missing = [s for s in REQUIRED_SECTIONS if s not in doc]
    if missing:
        raise ConfigError(f"missing required section(s): {', '.join(missing)}")
    top = {"gait", "radar", "wall", "scatterers", "dsp", "envelope", "chtm", "eval", "dataset",
           "seed", "save_cubes", "output"}
    unknown = sorted(set(doc) - top)
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {', '.join(unknown)}")

    gait_table = dict(doc["gait"])
    if "pattern" in gait_table:
        try:
            gait_table["pattern"] = Gait(gait_table["pattern"])
        except ValueError:
            raise ConfigError("gait.pattern must be 'normal' or 'armed'") from None
    parts = {
        "gait": _build(GaitConfig, "gait", gait_table,
                       ("initial_position", "stock_offset", "body_offset", "muzzle_offset")),
        "radar": _build(RadarConfig, "radar", doc["radar"], ("tx_positions", "rx_positions")),
        "wall": _build(WallConfig, "wall", doc["wall"]),
        "dsp": _build(DspConfig, "dsp", doc.get("dsp", {}), ("range_gate",)),
        "envelope": _build(SmoothingConfig, "envelope", doc.get("envelope", {})),
        "chtm": _build(ChtmParams, "chtm", doc.get("chtm", {})),
        "eval": _build(EvalParams, "eval", doc.get("eval", {}),
                       ("snr_levels", "orders", "representations")),
    }
    for name, obj in parts.items():
        _check_types(obj, name)
    if "dataset" in doc:
        parts["dataset"] = _build(DatasetParams, "dataset", doc["dataset"], ("range_limits",))
        _check_types(parts["dataset"], "dataset")
    if "scatterers" in doc:
        rcs = dict(DEFAULT_RCS)
        table = doc["scatterers"]
        unknown = sorted(set(table) - set(DEFAULT_RCS))
        if unknown:
            raise ConfigError(f"scatterers: unknown joint(s) {', '.join(unknown)}")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in table.values()):
            raise ConfigError("scatterers: cross sections must be numbers")
        rcs.update({k: float(v) for k, v in table.items()})
        parts["scatterers"] = ScattererSet(rcs)
    for key, kind in (("seed", int), ("save_cubes", bool), ("output", str)):
        if key in doc:
            if not isinstance(doc[key], kind) or (kind is int and isinstance(doc[key], bool)):
                raise ConfigError(f"{key} must be of type {kind.__name__}")
            parts[key] = doc[key]
    return RunConfig(**parts).validate()


def load(path) -> RunConfig:
    """Parse and validate a TOML file. Raises ``OSError`` or ``ConfigError``."""
    text = Path(path).read_bytes()
    try:
        doc = tomllib.loads(text.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return from_dict(doc)


def dumps(cfg: RunConfig) -> str:
    """TOML text that loads back into ``cfg`` (no third-party writer needed for this flat shape)."""
    d = cfg.to_dict()
    lines = [f"seed = {_toml(d['seed'])}", f"save_cubes = {_toml(d['save_cubes'])}",
             f"output = {_toml(cfg.output)}", ""]
    for section in ("gait", "radar", "wall", "scatterers", "dsp", "envelope", "chtm", "eval", "dataset"):
        table = d[section]
        if table is None:
            continue
        lines.append(f"[{section}]")
        lines += [f"{k} = {_toml(v)}" for k, v in table.items() if v is not None]
        lines.append("")
    return "\n".join(lines)


def _toml(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml(x) for x in v) + "]"
    return str(v)


def default_config() -> RunConfig:
    return RunConfig().validate()


__all__ = ["ConfigError", "RunConfig", "ChtmParams", "DatasetParams", "EvalParams",
           "from_dict", "load", "dumps", "default_config"]
