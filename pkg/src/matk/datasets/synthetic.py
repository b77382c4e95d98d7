"""Small synthetic meme dataset whose label needs both modalities.

A record is positive exactly when its text contains the trigger word AND its
image has mean red channel above 0.5.  Negatives are split 60/30/10 between
"trigger only", "red only" and "neither", so text alone ranks at most 0.4 +
0.6/2 = 0.7 of positive/negative pairs correctly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .. import rng as _rng

TRIGGER = "kaboom"
IMAGE_SIZE = 16

_FILLER = (
    "look at this when you the they my cat dog monday coffee friends again "
    "people really why always never every today tomorrow work home meme funny "
    "weekend boss school music game phone pizza rain sun night morning"
).split()


def _split_sizes(n: int) -> dict:
    held = n // 5
    return {"train": n - 2 * held, "validate": held, "test": held}


def _cells(n: int, gen: np.random.Generator, extra_pos: bool) -> list[tuple[bool, bool]]:
    pos = n // 2 + (n % 2) * int(extra_pos)
    neg = n - pos
    trig_only = round(neg * 0.6)
    red_only = round(neg * 0.3)
    neither = neg - trig_only - red_only
    cells = ([(True, True)] * pos + [(True, False)] * trig_only
             + [(False, True)] * red_only + [(False, False)] * neither)
    return [cells[i] for i in gen.permutation(len(cells))]


def _text(trigger: bool, gen) -> str:
    words = [str(w) for w in gen.choice(_FILLER, size=int(gen.integers(3, 8)))]
    if trigger:
        words.insert(int(gen.integers(len(words) + 1)), TRIGGER)
    return " ".join(words)


def _image(red: bool, gen) -> np.ndarray:
    lo, hi = (0.6, 0.95) if red else (0.05, 0.4)
    base = np.array([gen.uniform(lo, hi), gen.uniform(0.05, 0.95), gen.uniform(0.05, 0.95)])
    noise = gen.uniform(-0.05, 0.05, size=(IMAGE_SIZE, IMAGE_SIZE, 3))
    return np.clip(np.rint((base + noise) * 255), 0, 255).astype(np.uint8)


def generate_synthetic_dataset(n: int, seed: int, out_root) -> None:
    """Write ``{train,validate,test}.jsonl`` and ``img/*.png`` under ``out_root``."""
    if n < 4:
        raise ValueError("n must be >= 4")
    out_root = Path(out_root)
    (out_root / "img").mkdir(parents=True, exist_ok=True)
    gen = _rng.derive("synthetic", n, seed=seed)
    counter = 0
    extra_pos = True
    for split, size in _split_sizes(n).items():
        lines = []
        cells = _cells(size, gen, extra_pos)
        # odd-sized splits alternate the spare record between classes
        extra_pos ^= bool(size % 2)
        for trigger, red in cells:
            rid = f"s{counter:05d}"
            counter += 1
            img_ref = f"img/{rid}.png"
            Image.fromarray(_image(red, gen), mode="RGB").save(out_root / img_ref, optimize=False)
            rec = {"id": rid, "img": img_ref, "text": _text(trigger, gen),
                   "label": int(trigger and red)}
            lines.append(json.dumps(rec, sort_keys=True))
        (out_root / f"{split}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
