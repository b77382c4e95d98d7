"""Checkpoint directories.

``manifest.json``  format version, model spec, config snapshot, parameter index
``params.bin``     parameters as little-endian float32, concatenated
``prng.json``      PRNG state at save time

``index[name] = [byte_offset, *shape]``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from ..errors import CorruptCheckpoint, MissingFile, VersionMismatch

FORMAT = "matk-checkpoint"
VERSION = 1
_F32 = np.dtype("<f4")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def _spec_dict(spec) -> dict:
    d = asdict(spec)
    d["modalities"] = list(d["modalities"])
    if d.get("verbalizer") is not None:
        d["verbalizer"] = {str(k): v for k, v in d["verbalizer"].items()}
    return d


@dataclass
class Checkpoint:
    model_spec: dict
    multilabel: bool
    config: dict | None
    params: dict  # name -> float32 ndarray
    prng: dict | None
    manifest: dict


def save_checkpoint(adapter, config_snapshot, prng_state, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    index = {}
    blobs = []
    offset = 0
    for name, tensor in adapter.state_dict().items():
        arr = np.ascontiguousarray(tensor.detach().cpu().numpy(), dtype=_F32)
        index[name] = [offset, *arr.shape]
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "model_spec": _spec_dict(adapter.spec),
        "multilabel": bool(adapter.multilabel),
        "config": config_snapshot,
        "parameters": index,
        "params_bytes": offset,
    }
    (path / "params.bin").write_bytes(b"".join(blobs))
    (path / "manifest.json").write_text(_dump(manifest), encoding="utf-8")
    (path / "prng.json").write_text(_dump(prng_state), encoding="utf-8")
    return path


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not (path / "manifest.json").is_file():
        raise MissingFile(f"no checkpoint manifest in {path}")
    try:
        manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
    except ValueError as exc:
        raise CorruptCheckpoint(f"{path}: unreadable manifest: {exc}") from None
    if manifest.get("format") != FORMAT:
        raise CorruptCheckpoint(f"{path}: not a matk checkpoint")
    if manifest.get("version") != VERSION:
        raise VersionMismatch(
            f"{path}: checkpoint version {manifest.get('version')!r}, expected {VERSION}")
    try:
        blob = (path / "params.bin").read_bytes()
    except OSError as exc:
        raise CorruptCheckpoint(f"{path}: cannot read params.bin: {exc}") from None
    if len(blob) != manifest.get("params_bytes"):
        raise CorruptCheckpoint(
            f"{path}: params.bin has {len(blob)} bytes, manifest says {manifest.get('params_bytes')}")
    params = {}
    for name, (off, *shape) in manifest["parameters"].items():
        n = int(np.prod(shape)) if shape else 1
        end = off + 4 * n
        if off < 0 or end > len(blob):
            raise CorruptCheckpoint(f"{path}: parameter {name!r} out of bounds")
        params[name] = np.frombuffer(blob[off:end], dtype=_F32).reshape(shape).copy()
    prng = None
    if (path / "prng.json").is_file():
        prng = json.loads((path / "prng.json").read_text(encoding="utf-8"))
    return Checkpoint(manifest["model_spec"], manifest["multilabel"], manifest.get("config"),
                      params, prng, manifest)


def spec_from_dict(d: dict):
    from ..config import ModelSpec

    d = dict(d)
    d["modalities"] = tuple(d.get("modalities", ("text", "image")))
    if d.get("verbalizer") is not None:
        d["verbalizer"] = {int(k): v for k, v in d["verbalizer"].items()}
    return ModelSpec(**d)


def restore_adapter(ckpt: Checkpoint, tokenizer=None):
    """Build the adapter described by ``ckpt`` and load its parameters."""
    from ..models import build_adapter

    adapter = build_adapter(spec_from_dict(ckpt.model_spec), tokenizer, ckpt.multilabel)
    state = adapter.state_dict()
    if set(state) != set(ckpt.params):
        raise CorruptCheckpoint("checkpoint parameters do not match the model architecture")
    adapter.load_state_dict({
        k: torch.as_tensor(v, dtype=state[k].dtype).reshape(state[k].shape)
        for k, v in ckpt.params.items()
    })
    return adapter
