"""Experiment configuration: nested dataclasses loaded from YAML with dotted overrides."""

from __future__ import annotations

import dataclasses
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    pass


@dataclass
class DataConfig:
    webnlg_dir: str | None = None       # release root with train/dev/test subdirectories
    synthetic_graphs: int = 2000        # used when webnlg_dir is unset
    synthetic_seed: int = 0
    max_graphs: int | None = None       # cap on train graphs (desk-scale subsets)
    text_model: str = "hashing-ngram-384"
    cache_path: str | None = None


@dataclass
class EncoderConfig:
    variant: str = "llm_gnn"            # llm_gnn | llm_ffn
    d_z: int = 128
    in_dim: int = 384
    hidden: int = 256
    layers: int = 2
    reverse_edges: bool = False         # ablation: also aggregate along reversed edges

    def __post_init__(self):
        if self.variant not in ("llm_gnn", "llm_ffn"):
            raise ConfigError(f"unknown encoder variant {self.variant!r}")
        if self.d_z < 1 or self.layers < 1:
            raise ConfigError("encoder.d_z and encoder.layers must be >= 1")

    @property
    def compression_factor(self) -> float:
        return self.in_dim / self.d_z


@dataclass
class ChannelConfig:
    k: int = 5                          # complex symbols per node
    hidden: int = 256

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("channel.k must be >= 1")


@dataclass
class DecoderConfig:
    node_hidden: int = 512
    heads: int = 4
    ff_dim: int = 256
    none_weighting: bool = False        # scale the "none" class by positive/negative pair ratio


@dataclass
class TrainConfig:
    alpha: float = 0.01
    batch_size: int = 8
    reference_snr_db: float = 14.0
    lr: float = 1e-3
    lr_schedule: str = "cosine"         # cosine | constant
    grad_clip: float | None = 1.0
    mine_lr: float = 1e-4
    mine_hidden: int = 64
    mine_ema: float = 0.99
    mine_steps: int | None = None       # MINE updates per epoch; default one per batch
    epochs: int = 30
    seed: int = 0
    deterministic: bool = True

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError("train.alpha must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("train.batch_size must be >= 1")
        if not (math.isfinite(self.lr) and self.lr > 0):
            raise ConfigError(f"train.lr must be a positive finite number, got {self.lr}")


@dataclass
class EvalConfig:
    snr_grid: list[float] = field(default_factory=lambda: [-4, 0, 4, 8, 12, 16, 20, 24, 28, 32, 36, 40])
    d_z_grid: list[int] = field(default_factory=lambda: [16, 32, 64, 128])
    bits_per_symbol: int = 6
    seed: int = 1234
    repeats: int = 1


@dataclass
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=True))

    def replace(self, **sections) -> "ExperimentConfig":
        return dataclasses.replace(self, **sections)


def _cast(hint, val, name: str):
    """Check ``val`` against a field annotation; ints are accepted where floats are expected."""
    args = typing.get_args(hint)
    if val is None:
        if type(None) in args:
            return None
        raise ConfigError(f"{name} may not be null")
    if args and type(None) in args:
        hint = next(a for a in args if a is not type(None))
    origin = typing.get_origin(hint)
    if origin is list:
        if not isinstance(val, (list, tuple)):
            raise ConfigError(f"{name} must be a list, got {val!r}")
        (inner,) = typing.get_args(hint)
        return [_cast(inner, v, name) for v in val]
    if hint is float:
        if isinstance(val, str) and val.strip().lower() in ("inf", "+inf", "-inf", "nan"):
            return float(val)  # YAML only knows .inf
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{name} must be a number, got {val!r}")
        return float(val)
    if hint is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{name} must be an integer, got {val!r}")
        return val
    if hint in (str, bool) and not isinstance(val, hint):
        raise ConfigError(f"{name} must be {hint.__name__}, got {val!r}")
    return val


def _build(cls, values: dict[str, Any], where: str):
    if not isinstance(values, dict):
        raise ConfigError(f"config section {where.rstrip('.') or 'root'} must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    hints = typing.get_type_hints(cls)
    kwargs = {}
    for key, val in (values or {}).items():
        if key not in known:
            raise ConfigError(f"unknown config key {where}{key}")
        sub = _SECTIONS.get(key) if cls is ExperimentConfig else None
        kwargs[key] = _build(sub, val or {}, f"{key}.") if sub else _cast(hints[key], val, where + key)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


_SECTIONS = {"data": DataConfig, "encoder": EncoderConfig, "channel": ChannelConfig,
             "decoder": DecoderConfig, "train": TrainConfig, "eval": EvalConfig}


def _coerce(text: str) -> Any:
    return yaml.safe_load(text)


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Read a YAML config (optional) and apply ``section.key=value`` overrides."""
    raw: dict[str, Any] = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        dotted, value = item.split("=", 1)
        section, key = dotted.split(".", 1)
        raw.setdefault(section, {})[key] = _coerce(value)
    return config_from_dict(raw)


def config_from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    return _build(ExperimentConfig, raw, "")


def is_noiseless(snr_db: float) -> bool:
    return math.isinf(snr_db) and snr_db > 0
