"""Label schemas for the supported meme datasets and label encoding."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import UnknownClass

SINGLE = "single-label"
MULTI = "multi-label"


@dataclass(frozen=True)
class TaskSpec:
    """One prediction task.

    ``field`` names the raw annotation field holding a class index or class
    name (single-label) or a list of class names (multi-label).  Multi-label
    tasks may instead list one binary flag field per class in ``flags``.
    """

    kind: str
    class_names: tuple
    field: str | None = None
    flags: tuple | None = None

    def __post_init__(self):
        if self.kind not in (SINGLE, MULTI):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if not self.class_names or len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class_names must be non-empty and unique")
        if self.flags is not None and len(self.flags) != len(self.class_names):
            raise ValueError("one flag field per class required")

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def source_fields(self) -> tuple:
        return tuple(self.flags) if self.flags else (self.field,)


@dataclass(frozen=True)
class LabelSchema:
    tasks: dict = field(default_factory=dict)

    @property
    def label_fields(self) -> set:
        return {f for t in self.tasks.values() for f in t.source_fields}


def _index(task_name: str, spec: TaskSpec, value) -> int:
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, int):
        if 0 <= value < spec.num_classes:
            return value
        raise UnknownClass(task_name, value)
    if isinstance(value, str):
        try:
            return spec.class_names.index(value)
        except ValueError:
            raise UnknownClass(task_name, value) from None
    raise UnknownClass(task_name, value)


def encode_labels(raw: dict, schema: LabelSchema) -> dict:
    """Map raw annotation fields onto class indices / multi-hot vectors.

    Tasks whose source fields are all absent from ``raw`` are skipped, so an
    unlabeled test record encodes to ``{}``.
    """
    out = {}
    for name, spec in schema.tasks.items():
        if spec.flags:
            present = [f in raw for f in spec.flags]
            if not any(present):
                continue
            vec = []
            for flag in spec.flags:
                v = raw.get(flag, 0)
                if isinstance(v, bool):
                    v = int(v)
                if v not in (0, 1):
                    raise UnknownClass(name, v)
                vec.append(int(v))
            out[name] = vec
        elif spec.field in raw:
            value = raw[spec.field]
            if spec.kind == MULTI:
                if not isinstance(value, (list, tuple)):
                    value = [value]
                vec = [0] * spec.num_classes
                for v in value:
                    vec[_index(name, spec, v)] = 1
                out[name] = vec
            else:
                out[name] = _index(name, spec, value)
    return out


# Multi-hot column order follows the order the aspects are listed for MAMI:
# shaming, stereotype, objectification, violence.
BUILTIN_SCHEMAS = {
    "fhm": LabelSchema({
        "hateful": TaskSpec(SINGLE, ("not_hateful", "hateful"), field="label"),
    }),
    "fhm-fg": LabelSchema({
        "hateful": TaskSpec(SINGLE, ("not_hateful", "hateful"), field="label"),
        "attack": TaskSpec(
            MULTI,
            ("attack_empty", "contempt", "dehumanizing", "exclusion",
             "inciting_violence", "inferiority", "mocking", "slurs"),
            field="attack",
        ),
        "protected_category": TaskSpec(
            MULTI,
            ("pc_empty", "disability", "nationality", "race", "religion", "sex"),
            field="pc",
        ),
    }),
    "harmeme": LabelSchema({
        "intensity": TaskSpec(
            SINGLE, ("not harmful", "somewhat harmful", "very harmful"), field="intensity"
        ),
        "target": TaskSpec(
            SINGLE, ("individual", "organization", "community", "society"), field="target"
        ),
    }),
    "mami": LabelSchema({
        "misogyny": TaskSpec(SINGLE, ("not_misogynous", "misogynous"), field="misogynous"),
        "aspects": TaskSpec(
            MULTI,
            ("shaming", "stereotype", "objectification", "violence"),
            flags=("shaming", "stereotype", "objectification", "violence"),
        ),
    }),
    "memotion": LabelSchema({
        "sentiment": TaskSpec(
            SINGLE,
            ("very_negative", "negative", "neutral", "positive", "very_positive"),
            field="overall_sentiment",
        ),
        "humour": TaskSpec(
            SINGLE, ("not_funny", "funny", "very_funny", "hilarious"), field="humour"
        ),
        "sarcasm": TaskSpec(
            SINGLE, ("not_sarcastic", "general", "twisted_meaning", "very_twisted"),
            field="sarcasm",
        ),
        "offensive": TaskSpec(
            SINGLE, ("not_offensive", "slight", "very_offensive", "hateful_offensive"),
            field="offensive",
        ),
        "motivational": TaskSpec(
            SINGLE, ("not_motivational", "motivational"), field="motivational"
        ),
    }),
    "synthetic": LabelSchema({
        "hateful": TaskSpec(SINGLE, ("not_hateful", "hateful"), field="label"),
    }),
}
