"""Meme dataset registry, label schemas, collation and batching."""

from .collate import (
    Batch,
    MemeRecord,
    collate,
    concat_batches,
    epoch_permutation,
    iterate_batches,
    pad_sequences,
    split_batch,
)
from .module import DataModule
from .registry import (
    SPLITS,
    get_schema,
    jsonl_loader,
    load_split,
    read_jsonl_split,
    register_dataset,
    registered_datasets,
    resolve_dataset,
)
from .schema import BUILTIN_SCHEMAS, MULTI, SINGLE, LabelSchema, TaskSpec, encode_labels
from .synthetic import TRIGGER, generate_synthetic_dataset
from .tokenizer import HashTokenizer

__all__ = [
    "BUILTIN_SCHEMAS",
    "Batch",
    "DataModule",
    "HashTokenizer",
    "LabelSchema",
    "MULTI",
    "MemeRecord",
    "SINGLE",
    "SPLITS",
    "TRIGGER",
    "TaskSpec",
    "collate",
    "concat_batches",
    "encode_labels",
    "epoch_permutation",
    "generate_synthetic_dataset",
    "get_schema",
    "iterate_batches",
    "jsonl_loader",
    "load_split",
    "pad_sequences",
    "read_jsonl_split",
    "register_dataset",
    "registered_datasets",
    "resolve_dataset",
    "split_batch",
]
