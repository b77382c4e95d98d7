"""YAML experiment configuration: loading, deep merge, overrides, validation.

A config file is a tree of maps, sequences and scalars.  The top level keys
are ``seed_everything``, ``trainer``, ``model``, ``data`` and optionally
``analysis``.  Documented defaults::

    trainer.max_epochs   10
    trainer.lr           1e-2
    trainer.monitor      auroc
    data.batch_size      32
"""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import BadType, MissingFile, MissingKey, ParseError, TypeConflict

__all__ = [
    "AnalysisSpec",
    "DataSpec",
    "ExperimentConfig",
    "ModelSpec",
    "TrainerConfig",
    "apply_overrides",
    "config_hash",
    "dump_config",
    "load_config",
    "merge",
    "parse_override",
    "parse_scalar",
    "validate",
]


class _Loader(yaml.SafeLoader):
    """SafeLoader that rejects duplicate keys and reads ``1e-3`` as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+][0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def _construct_mapping(loader, node, deep=False):
    loader.flatten_mapping(node)
    out = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if not isinstance(key, str):
            mark = key_node.start_mark
            raise ParseError(f"non-string key {key!r}", mark.line + 1, mark.column + 1)
        if key in out:
            mark = key_node.start_mark
            raise ParseError(f"duplicate key {key!r}", mark.line + 1, mark.column + 1)
        out[key] = loader.construct_object(value_node, deep=deep)
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _parse_yaml(text: str, source: str = "<string>"):
    try:
        return yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ParseError(f"{source}: {exc.problem or exc}", line, col) from exc
    except yaml.YAMLError as exc:
        raise ParseError(f"{source}: {exc}") from exc


def load_config(path) -> dict:
    """Read a YAML config file into a plain nested dict."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"config file not found: {path}")
    tree = _parse_yaml(path.read_text(encoding="utf-8"), str(path))
    if tree is None:
        return {}
    if not isinstance(tree, dict):
        raise ParseError(f"{path}: top level must be a mapping, got {type(tree).__name__}", 1, 1)
    return tree


def dump_config(tree: dict) -> str:
    return yaml.safe_dump(tree, sort_keys=False, default_flow_style=False, allow_unicode=True)


def merge(base: dict, override: dict, _path: str = "") -> dict:
    """Deep-merge ``override`` onto ``base`` without touching either input.

    Maps merge recursively, scalars and sequences from ``override`` replace
    those in ``base`` wholesale.
    """
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{_path}.{key}" if _path else key
        if key in out:
            left = out[key]
            if isinstance(left, dict) and isinstance(value, dict):
                out[key] = merge(left, value, where)
                continue
            if isinstance(left, dict) != isinstance(value, dict):
                raise TypeConflict(where)
        out[key] = copy.deepcopy(value)
    return out


def parse_scalar(text: str):
    """Type a CLI scalar with the same rules as the YAML loader."""
    if text == "":
        return ""
    value = _parse_yaml(text)
    if isinstance(value, (dict, list)):
        return value
    return text if value is None and text not in ("null", "~", "Null", "NULL") else value


def parse_override(item: str) -> dict:
    """``"trainer.max_epochs=3"`` -> ``{"trainer": {"max_epochs": 3}}``."""
    if "=" not in item:
        raise ParseError(f"override {item!r} is not of the form key.path=value")
    dotted, raw = item.split("=", 1)
    keys = [k for k in dotted.strip().split(".")]
    if not all(keys):
        raise ParseError(f"override {item!r} has an empty key segment")
    tree = parse_scalar(raw.strip())
    for key in reversed(keys):
        tree = {key: tree}
    return tree


def apply_overrides(tree: dict, overrides) -> dict:
    """Apply ``key.path=value`` strings left to right; later ones win."""
    for item in overrides or ():
        tree = merge(tree, parse_override(item))
    return tree


def config_hash(tree: dict) -> str:
    canonical = json.dumps(tree, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


# --------------------------------------------------------------------------
# typed config


@dataclass(frozen=True)
class TrainerConfig:
    max_epochs: int = 10
    lr: float = 1e-2
    weight_decay: float = 0.0
    monitor: str = "auroc"
    checkpoint_dir: str = "runs"
    device: str = "cpu"


@dataclass(frozen=True)
class ModelSpec:
    name: str
    backbone: str = ""
    num_classes: int = 2
    hidden_size: int = 32
    task: str | None = None
    verbalizer: dict | None = None
    modalities: tuple = ("text", "image")
    vocab_size: int = 4096
    max_len: int = 128
    visual_dim: int = 64


@dataclass(frozen=True)
class DataSpec:
    name: str
    root: str = "data"
    batch_size: int = 32
    max_len: int = 128
    visual: str = "regions"
    n_regions: int = 4
    feature_dim: int = 64
    features: str | None = None
    captions: str | None = None
    backend: str = "stub"


@dataclass(frozen=True)
class AnalysisSpec:
    method: str = "lime"
    num_samples: int = 1000
    kernel_width: float = 0.25
    ridge_lambda: float = 1.0
    steps: int = 50
    target: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    trainer: TrainerConfig
    model: ModelSpec
    data: DataSpec
    analysis: AnalysisSpec | None = None
    warnings: tuple = field(default=(), compare=False)

    def to_tree(self) -> dict:
        tree = {
            "seed_everything": self.seed,
            "trainer": asdict(self.trainer),
            "model": asdict(self.model),
            "data": asdict(self.data),
        }
        tree["model"]["modalities"] = list(self.model.modalities)
        if self.analysis is not None:
            tree["analysis"] = asdict(self.analysis)
        return tree


_DEFAULT_BACKBONE = {
    "single_stream": "stub-encoder",
    "two_stream": "stub-encoder",
    "text_generative": "stub-seq2seq",
    "prompt": "stub-mlm",
}

_BINARY_VERBALIZER = {0: "good", 1: "bad"}

_TYPES = {int: "int", float: "float", str: "string", bool: "bool"}


def _typed(section: dict, key: str, path: str, kind, default, warnings_out=None):
    if key not in section:
        if default is MissingKey:
            raise MissingKey(path)
        return default
    value = section[key]
    if value is None and default is None:
        return None
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    ok = isinstance(value, kind) and not (kind is int and isinstance(value, bool))
    if not ok:
        expected = _TYPES.get(kind, getattr(kind, "__name__", str(kind)))
        raise BadType(path, expected, type(value).__name__)
    return value


def _section(tree: dict, key: str, required: bool = True) -> dict | None:
    if key not in tree:
        if required:
            raise MissingKey(key)
        return None
    value = tree[key]
    if not isinstance(value, dict):
        raise BadType(key, "map", type(value).__name__)
    return value


def _unknown(section: dict, known, prefix: str) -> list[str]:
    return [f"unknown key {prefix}.{k!r} ignored" for k in section if k not in known]


def validate(tree: dict) -> ExperimentConfig:
    """Type-check ``tree``, fill defaults and resolve registry names.

    Raises on the first fatal problem; unknown keys are collected in
    ``ExperimentConfig.warnings`` instead.
    """
    from .datasets import get_schema
    from .models import ARCHETYPES, resolve_backbone

    notes: list[str] = []
    top_known = {"seed_everything", "trainer", "model", "data", "analysis"}
    notes += [f"unknown top-level key {k!r} ignored" for k in tree if k not in top_known]

    seed = _typed(tree, "seed_everything", "seed_everything", int, MissingKey)
    if seed < 0:
        raise BadType("seed_everything", "int >= 0", str(seed))

    t = _section(tree, "trainer")
    m = _section(tree, "model")
    d = _section(tree, "data")
    a = _section(tree, "analysis", required=False)

    defaults = TrainerConfig()
    trainer = TrainerConfig(
        max_epochs=_typed(t, "max_epochs", "trainer.max_epochs", int, defaults.max_epochs),
        lr=_typed(t, "lr", "trainer.lr", float, defaults.lr),
        weight_decay=_typed(t, "weight_decay", "trainer.weight_decay", float, defaults.weight_decay),
        monitor=_typed(t, "monitor", "trainer.monitor", str, defaults.monitor),
        checkpoint_dir=_typed(t, "checkpoint_dir", "trainer.checkpoint_dir", str, defaults.checkpoint_dir),
        device=_typed(t, "device", "trainer.device", str, defaults.device),
    )
    if trainer.max_epochs < 1:
        raise BadType("trainer.max_epochs", "int >= 1", str(trainer.max_epochs))
    if not trainer.lr > 0:
        raise BadType("trainer.lr", "float > 0", str(trainer.lr))
    if trainer.monitor not in ("auroc", "accuracy", "loss"):
        raise BadType("trainer.monitor", "one of auroc|accuracy|loss", trainer.monitor)
    notes += _unknown(t, TrainerConfig.__dataclass_fields__, "trainer")

    data_defaults = DataSpec(name="")
    data = DataSpec(
        name=_typed(d, "name", "data.name", str, MissingKey),
        root=_typed(d, "root", "data.root", str, data_defaults.root),
        batch_size=_typed(d, "batch_size", "data.batch_size", int, data_defaults.batch_size),
        max_len=_typed(d, "max_len", "data.max_len", int, data_defaults.max_len),
        visual=_typed(d, "visual", "data.visual", str, data_defaults.visual),
        n_regions=_typed(d, "n_regions", "data.n_regions", int, data_defaults.n_regions),
        feature_dim=_typed(d, "feature_dim", "data.feature_dim", int, data_defaults.feature_dim),
        features=_typed(d, "features", "data.features", str, None),
        captions=_typed(d, "captions", "data.captions", str, None),
        backend=_typed(d, "backend", "data.backend", str, data_defaults.backend),
    )
    if data.batch_size < 1:
        raise BadType("data.batch_size", "int >= 1", str(data.batch_size))
    if data.visual not in ("regions", "global", "none"):
        raise BadType("data.visual", "one of regions|global|none", data.visual)
    schema = get_schema(data.name)
    notes += _unknown(d, DataSpec.__dataclass_fields__, "data")

    name = _typed(m, "name", "model.name", str, MissingKey)
    if name not in ARCHETYPES:
        from .errors import UnresolvedName

        raise UnresolvedName("model", name)
    backbone = _typed(m, "backbone", "model.backbone", str, _DEFAULT_BACKBONE[name])
    resolve_backbone(backbone)
    task = _typed(m, "task", "model.task", str, None) or next(iter(schema.tasks))
    if task not in schema.tasks:
        from .errors import UnresolvedName

        raise UnresolvedName(f"task of dataset {data.name!r}", task)
    n_cls = len(schema.tasks[task].class_names)
    num_classes = _typed(m, "num_classes", "model.num_classes", int, n_cls)
    if num_classes != n_cls:
        raise BadType("model.num_classes", f"{n_cls} (classes of task {task!r})", str(num_classes))
    verbalizer = m.get("verbalizer")
    if verbalizer is not None:
        if not isinstance(verbalizer, dict):
            raise BadType("model.verbalizer", "map", type(verbalizer).__name__)
        verbalizer = {int(k): v for k, v in verbalizer.items()}
    elif name in ("text_generative", "prompt") and num_classes == 2:
        verbalizer = dict(_BINARY_VERBALIZER)
    modalities = m.get("modalities", ["text", "image"])
    if not isinstance(modalities, list) or not set(modalities) <= {"text", "image"} or not modalities:
        raise BadType("model.modalities", "non-empty subset of [text, image]", repr(modalities))
    model = ModelSpec(
        name=name,
        backbone=backbone,
        num_classes=num_classes,
        hidden_size=_typed(m, "hidden_size", "model.hidden_size", int, 32),
        task=task,
        verbalizer=verbalizer,
        modalities=tuple(modalities),
        vocab_size=_typed(m, "vocab_size", "model.vocab_size", int, 4096),
        max_len=data.max_len,
        visual_dim=data.feature_dim,
    )
    notes += _unknown(m, ModelSpec.__dataclass_fields__, "model")

    analysis = None
    if a is not None:
        ad = AnalysisSpec()
        analysis = AnalysisSpec(
            method=_typed(a, "method", "analysis.method", str, ad.method),
            num_samples=_typed(a, "num_samples", "analysis.num_samples", int, ad.num_samples),
            kernel_width=_typed(a, "kernel_width", "analysis.kernel_width", float, ad.kernel_width),
            ridge_lambda=_typed(a, "ridge_lambda", "analysis.ridge_lambda", float, ad.ridge_lambda),
            steps=_typed(a, "steps", "analysis.steps", int, ad.steps),
            target=_typed(a, "target", "analysis.target", int, None),
        )
        notes += _unknown(a, AnalysisSpec.__dataclass_fields__, "analysis")

    return ExperimentConfig(seed, trainer, model, data, analysis, tuple(notes))
