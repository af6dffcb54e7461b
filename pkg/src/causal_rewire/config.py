"""Pipeline configuration: nested dataclasses, JSON files, dotted overrides, presets."""
from __future__ import annotations

import copy
import dataclasses
import json
import os
import types
import typing
from dataclasses import dataclass, field

from .errors import ConfigError, MissingFile


@dataclass
class SynthConfig:
    n: int = 8
    t: int = 1000
    n_samples: int = 100
    noise_std: float = 1.0
    coupling: float = 0.5
    self_weight: float = 0.5
    # class 0 / class 1 planted topologies
    topologies: tuple[str, str] = ("chain", "hub")


@dataclass
class DataConfig:
    manifest: str | None = None
    synthetic: SynthConfig = field(default_factory=SynthConfig)


@dataclass
class EntropyConfig:
    bins: int = 8
    q: int = 1
    o: int = 1


@dataclass
class GraphConfig:
    c: float = 0.15
    # |Pearson r| threshold for the correlation-graph ablation
    c_corr: float = 0.3


@dataclass
class RewiringConfig:
    enabled: bool = True
    tau: float = 20.0
    max_iterations: int | None = None
    c_plus: float | None = None
    c_minus: float | None = None
    curvature_floor: float = 0.0


@dataclass
class ModelSection:
    layer_sizes: tuple[int, ...] = (32, 16)
    heads: int = 2
    dropout_rate: float = 0.5
    fc_hidden_1: int = 64
    fc_hidden_2: int = 32
    layer_activation: str = "sigmoid"


@dataclass
class TrainSection:
    lr: float = 1e-4
    batch_size: int = 16
    max_epochs: int = 200
    patience: int = 20


@dataclass
class PipelineConfig:
    seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    entropy: EntropyConfig = field(default_factory=EntropyConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    rewiring: RewiringConfig = field(default_factory=RewiringConfig)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _pyramid(width: int, layers: int) -> list[int]:
    return [width // 2**k for k in range(layers)]


# hidden width, depth, heads, classifier widths and threshold per dataset
PRESETS: dict[str, dict] = {
    "cobre": {"graph": {"c": 0.1},
              "model": {"layer_sizes": _pyramid(256, 4), "heads": 2, "fc_hidden_1": 256, "fc_hidden_2": 128}},
    "acpi": {"graph": {"c": 0.05},
             "model": {"layer_sizes": _pyramid(128, 2), "heads": 4, "fc_hidden_1": 512, "fc_hidden_2": 64}},
    "abide": {"graph": {"c": 0.1},
              "model": {"layer_sizes": _pyramid(128, 4), "heads": 4, "fc_hidden_1": 128, "fc_hidden_2": 128}},
    "adni": {"graph": {"c": 0.1},
             "model": {"layer_sizes": _pyramid(128, 4), "heads": 4, "fc_hidden_1": 256, "fc_hidden_2": 256}},
}


def _coerce(value, tp, key_path):
    """Convert a JSON value to the annotated field type, or raise ConfigError."""
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(key_path, f"expected a mapping, got {type(value).__name__}")
        return _build(tp, value, key_path)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], key_path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key_path, "expected a list")
        elem = args[0]
        return tuple(_coerce(v, elem, key_path) for v in value)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(key_path, f"expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key_path, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key_path, f"expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(key_path, f"expected a string, got {value!r}")
        return value
    return value


def _build(cls, doc: dict, prefix: str = ""):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in doc.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in names:
            raise ConfigError(path, "unknown key")
        kwargs[key] = _coerce(value, hints[key], path)
    return cls(**kwargs)


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_override(item: str) -> dict:
    """``"graph.c=0.05"`` -> ``{"graph": {"c": 0.05}}``; the value is parsed as JSON when possible."""
    if "=" not in item:
        raise ConfigError(item, "override must look like section.key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    doc: dict = value
    for part in reversed(key.strip().split(".")):
        doc = {part: doc}
    return doc


def validate(cfg: PipelineConfig) -> PipelineConfig:
    checks = [
        ("graph.c", cfg.graph.c >= 0, "must be >= 0"),
        ("graph.c_corr", 0 <= cfg.graph.c_corr <= 1, "must lie in [0, 1]"),
        ("entropy.bins", cfg.entropy.bins >= 2, "must be >= 2"),
        ("entropy.q", cfg.entropy.q >= 1, "must be >= 1"),
        ("entropy.o", cfg.entropy.o >= 1, "must be >= 1"),
        ("rewiring.tau", cfg.rewiring.tau > 0, "must be > 0"),
        ("rewiring.max_iterations",
         cfg.rewiring.max_iterations is None or cfg.rewiring.max_iterations >= 0, "must be >= 0"),
        ("model.layer_sizes", len(cfg.model.layer_sizes) > 0 and all(s > 0 for s in cfg.model.layer_sizes),
         "must be a non-empty list of positive widths"),
        ("model.layer_sizes",
         all(b <= a for a, b in zip(cfg.model.layer_sizes, cfg.model.layer_sizes[1:])), "must be non-increasing"),
        ("model.heads", cfg.model.heads >= 1 and all(s % cfg.model.heads == 0 for s in cfg.model.layer_sizes),
         "must be >= 1 and divide every layer width"),
        ("model.dropout_rate", 0 <= cfg.model.dropout_rate < 1, "must lie in [0, 1)"),
        ("model.fc_hidden_1", cfg.model.fc_hidden_1 >= 1, "must be >= 1"),
        ("model.fc_hidden_2", cfg.model.fc_hidden_2 >= 1, "must be >= 1"),
        ("model.layer_activation", cfg.model.layer_activation in ("sigmoid", "relu"), "must be sigmoid or relu"),
        ("train.lr", cfg.train.lr >= 0, "must be >= 0"),
        ("train.batch_size", cfg.train.batch_size >= 1, "must be >= 1"),
        ("train.max_epochs", cfg.train.max_epochs >= 1, "must be >= 1"),
        ("train.patience", cfg.train.patience >= 1, "must be >= 1"),
        ("data.synthetic.n", cfg.data.synthetic.n >= 2, "must be >= 2"),
        ("data.synthetic.t", cfg.data.synthetic.t >= 4, "must be >= 4"),
        ("data.synthetic.n_samples", cfg.data.synthetic.n_samples >= 10 and cfg.data.synthetic.n_samples % 2 == 0,
         "must be an even number >= 10"),
        ("data.synthetic.noise_std", cfg.data.synthetic.noise_std > 0, "must be > 0"),
        ("data.synthetic.topologies",
         all(t in ("chain", "hub") for t in cfg.data.synthetic.topologies)
         and len(cfg.data.synthetic.topologies) == 2, "must be two of chain/hub"),
    ]
    for key, ok, msg in checks:
        if not ok:
            raise ConfigError(key, msg)
    return cfg


def load_config(path=None, preset: str | None = None, overrides=(), seed: int | None = None) -> PipelineConfig:
    """Defaults, then preset, then file, then ``--set`` overrides, then ``--seed``."""
    doc: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        doc = _deep_merge(doc, PRESETS[preset])
    if path is not None:
        if not os.path.isfile(path):
            raise MissingFile(f"no such config file: {path}")
        with open(path) as fh:
            try:
                file_doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
        if not isinstance(file_doc, dict):
            raise ConfigError(str(path), "top level must be a mapping")
        doc = _deep_merge(doc, file_doc)
        manifest = doc.get("data", {}).get("manifest")
        if manifest and not os.path.isabs(manifest):
            doc["data"]["manifest"] = os.path.join(os.path.dirname(os.path.abspath(path)), manifest)
    for item in overrides:
        doc = _deep_merge(doc, parse_override(item))
    if seed is not None:
        doc["seed"] = seed
    return validate(_build(PipelineConfig, doc))
