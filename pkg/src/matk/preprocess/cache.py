"""Binary feature cache.

Layout (all integers little-endian)::

    b"MATKFC01"                      8 bytes
    header_len                       u32
    header                           UTF-8 JSON, header_len bytes
    payload                          float32 blocks

The header is ``{"version", "kind", "d", "dtype": "float32", "index"}`` with
``index[id] = [offset, *shape]``; offsets are in bytes from the start of the
payload.  ``regions`` entries store the ``[N, d]`` feature block followed by
the ``[N, 4]`` box block; ``global`` entries store a ``[d]`` vector.  Caption
caches are JSON lines ``{"id", "caption"}`` instead.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import BadMagic, CorruptIndex, DuplicateId, MissingFeature, MissingFile

MAGIC = b"MATKFC01"
VERSION = 1
_LE_F32 = np.dtype("<f4")


@dataclass(frozen=True, eq=False)
class FeatureCacheEntry:
    id: str
    kind: str  # regions | global | caption
    features: np.ndarray | None = None
    boxes: np.ndarray | None = None
    caption: str | None = None

    def __eq__(self, other):
        if not isinstance(other, FeatureCacheEntry):
            return NotImplemented
        same = lambda a, b: (a is None and b is None) or (
            a is not None and b is not None and a.dtype == b.dtype and a.shape == b.shape
            and a.tobytes() == b.tobytes()
        )
        return (self.id, self.kind, self.caption) == (other.id, other.kind, other.caption) and \
            same(self.features, other.features) and same(self.boxes, other.boxes)


def _check(entry: FeatureCacheEntry, kind: str, d: int | None):
    if entry.kind != kind:
        raise ValueError(f"cannot mix {entry.kind!r} entry into a {kind!r} cache")
    feats = np.asarray(entry.features)
    if kind == "regions":
        if feats.ndim != 2 or feats.shape[0] < 1:
            raise ValueError(f"{entry.id}: region features must be [N >= 1, d]")
        boxes = np.asarray(entry.boxes)
        if boxes.shape != (feats.shape[0], 4):
            raise ValueError(f"{entry.id}: boxes must be [N, 4]")
        if not np.all((boxes >= 0) & (boxes <= 1)):
            raise ValueError(f"{entry.id}: boxes must be normalised to [0, 1]")
        if not np.isfinite(boxes).all():
            raise ValueError(f"{entry.id}: non-finite boxes")
    elif feats.ndim != 1:
        raise ValueError(f"{entry.id}: global embedding must be a vector")
    if not np.isfinite(feats).all():
        raise ValueError(f"{entry.id}: non-finite features")
    if d is not None and feats.shape[-1] != d:
        raise ValueError(f"{entry.id}: feature dim {feats.shape[-1]} != {d}")
    return feats.shape[-1]


def write_cache(entries, path) -> None:
    """Write entries (all of one kind) to ``path``."""
    entries = list(entries)
    path = Path(path)
    ids = [e.id for e in entries]
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise DuplicateId(f"id {dup!r} appears more than once")
    kind = entries[0].kind if entries else "global"
    if kind == "caption":
        lines = []
        for e in entries:
            if e.kind != "caption":
                raise ValueError("cannot mix caption and feature entries")
            lines.append(json.dumps({"id": e.id, "caption": e.caption}, ensure_ascii=False))
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return
    d = None
    index = {}
    blocks = []
    offset = 0
    for e in entries:
        d = _check(e, kind, d)
        feats = np.ascontiguousarray(e.features, dtype=_LE_F32)
        index[e.id] = [offset, *feats.shape]
        blocks.append(feats.tobytes())
        offset += feats.nbytes
        if kind == "regions":
            boxes = np.ascontiguousarray(e.boxes, dtype=_LE_F32)
            blocks.append(boxes.tobytes())
            offset += boxes.nbytes
    header = json.dumps(
        {"version": VERSION, "kind": kind, "d": d or 0, "dtype": "float32", "index": index},
        sort_keys=True, separators=(",", ":"),
    ).encode("utf-8")
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for block in blocks:
            fh.write(block)


class FeatureCache:
    """Random-access reader over a binary cache file (memory-mapped)."""

    def __init__(self, path):
        self.path = Path(path)
        size = self.path.stat().st_size
        with self.path.open("rb") as fh:
            magic = fh.read(8)
            if magic != MAGIC:
                raise BadMagic(f"{self.path}: not a matk feature cache")
            raw_len = fh.read(4)
            if len(raw_len) != 4:
                raise CorruptIndex(f"{self.path}: truncated header length")
            (hlen,) = struct.unpack("<I", raw_len)
            raw = fh.read(hlen)
        if len(raw) != hlen:
            raise CorruptIndex(f"{self.path}: truncated header")
        try:
            header = json.loads(raw.decode("utf-8"))
            self.kind = header["kind"]
            self.d = int(header["d"])
            self.version = int(header["version"])
            self.index = {k: [int(x) for x in v] for k, v in header["index"].items()}
        except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
            raise CorruptIndex(f"{self.path}: unreadable header: {exc}") from None
        if header.get("dtype") != "float32":
            raise CorruptIndex(f"{self.path}: unsupported dtype {header.get('dtype')!r}")
        self._start = 12 + hlen
        payload = size - self._start
        for key, (off, *shape) in self.index.items():
            if off < 0 or off + self._nbytes(shape) > payload:
                raise CorruptIndex(f"{self.path}: entry {key!r} points past end of file")
        self._data = (np.memmap(self.path, dtype=np.uint8, mode="r", offset=self._start)
                      if payload > 0 else np.zeros(0, dtype=np.uint8))

    def _nbytes(self, shape):
        n = int(np.prod(shape)) * 4
        if self.kind == "regions":
            n += shape[0] * 16
        return n

    def __len__(self):
        return len(self.index)

    def __contains__(self, id):
        return id in self.index

    def ids(self):
        return list(self.index)

    def get(self, id) -> FeatureCacheEntry:
        try:
            off, *shape = self.index[id]
        except KeyError:
            raise MissingFeature(id) from None
        n = int(np.prod(shape))
        feats = np.frombuffer(self._data[off : off + 4 * n].tobytes(), dtype=_LE_F32).reshape(shape)
        feats = feats.astype(np.float32)
        if self.kind == "regions":
            b0 = off + 4 * n
            boxes = np.frombuffer(self._data[b0 : b0 + 16 * shape[0]].tobytes(), dtype=_LE_F32)
            return FeatureCacheEntry(id, "regions", feats, boxes.reshape(shape[0], 4).astype(np.float32))
        return FeatureCacheEntry(id, self.kind, feats)

    def entries(self):
        return [self.get(i) for i in self.index]


class CaptionCache:
    def __init__(self, path):
        self.path = Path(path)
        self.captions = {}
        with self.path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    self.captions[str(obj["id"])] = str(obj["caption"])
                except (ValueError, KeyError, TypeError):
                    raise CorruptIndex(f"{self.path}:{lineno}: bad caption record") from None
        self.kind = "caption"

    def __len__(self):
        return len(self.captions)

    def __contains__(self, id):
        return id in self.captions

    def __getitem__(self, id):
        return self.captions[id]

    def ids(self):
        return list(self.captions)

    def get(self, id) -> FeatureCacheEntry:
        try:
            return FeatureCacheEntry(id, "caption", caption=self.captions[id])
        except KeyError:
            raise MissingFeature(id) from None

    def entries(self):
        return [self.get(i) for i in self.captions]


def read_cache(path):
    """Open a feature cache (binary) or caption cache (JSON lines)."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"cache not found: {path}")
    with path.open("rb") as fh:
        head = fh.read(8)
    if head == MAGIC:
        return FeatureCache(path)
    if path.suffix == ".jsonl" or head[:1] in (b"{", b""):
        return CaptionCache(path)
    raise BadMagic(f"{path}: not a matk feature cache")
