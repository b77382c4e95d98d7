"""Dataset registry and the JSON-lines annotation loader."""

from __future__ import annotations

import functools
import json
from pathlib import Path

from ..errors import DuplicateName, MissingFile, SchemaError, UnknownClass, UnresolvedName
from .collate import MemeRecord
from .schema import BUILTIN_SCHEMAS, LabelSchema, encode_labels

SPLITS = ("train", "validate", "test")

_LOADERS: dict = {}
_SCHEMAS: dict = {}


def register_dataset(name: str, loader, schema: LabelSchema) -> None:
    """Make ``loader(split, root)`` resolvable as ``data.name = name``."""
    if name in _LOADERS:
        raise DuplicateName("dataset", name)
    _LOADERS[name] = loader
    _SCHEMAS[name] = schema


def resolve_dataset(name: str):
    try:
        return _LOADERS[name]
    except KeyError:
        raise UnresolvedName("dataset", name) from None


def get_schema(name: str) -> LabelSchema:
    try:
        return _SCHEMAS[name]
    except KeyError:
        raise UnresolvedName("dataset", name) from None


def registered_datasets() -> list[str]:
    return sorted(_LOADERS)


def read_jsonl_split(path, schema: LabelSchema) -> list[MemeRecord]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"annotation file not found: {path}")
    records = []
    seen = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError:
                raise SchemaError(lineno, "<json>", "is not valid JSON") from None
            if not isinstance(raw, dict):
                raise SchemaError(lineno, "<json>", "is not an object")
            for key in ("id", "img", "text"):
                if key == "id" and isinstance(raw.get(key), int) and not isinstance(raw[key], bool):
                    raw[key] = str(raw[key])
                if not isinstance(raw.get(key), str):
                    raise SchemaError(lineno, key)
            if raw["id"] in seen:
                raise SchemaError(lineno, "id", "is duplicated within the split")
            seen.add(raw["id"])
            try:
                labels = encode_labels(raw, schema)
            except UnknownClass as exc:
                raise SchemaError(lineno, exc.task, f"has unknown class {exc.value!r}") from None
            records.append(MemeRecord(raw["id"], raw["img"], raw["text"], labels))
    return records


def _jsonl_loader(schema, split, root):
    if split not in SPLITS:
        raise ValueError(f"unknown split {split!r}; expected one of {SPLITS}")
    return read_jsonl_split(Path(root) / f"{split}.jsonl", schema)


def jsonl_loader(schema: LabelSchema):
    """Loader reading ``<root>/<split>.jsonl`` under ``schema``."""
    return functools.partial(_jsonl_loader, schema)


def load_split(dataset: str, split: str, root) -> list[MemeRecord]:
    return resolve_dataset(dataset)(split, root)


for _name, _schema in BUILTIN_SCHEMAS.items():
    register_dataset(_name, jsonl_loader(_schema), _schema)
