"""Command line entry point: preprocess, train, test, analyze, reproduce.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .config import apply_overrides, config_hash, dump_config, load_config, validate
from .errors import MATKError, MissingFile

log = logging.getLogger("matk")

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}
PERTURB_ENV = "MATK_REPRODUCE_PERTURB"  # test hook: makes the second reproduce run diverge


class UsageError(Exception):
    pass


@dataclass
class CommandResult:
    exit_code: int = 0
    artifacts: list = field(default_factory=list)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# shared setup


@dataclass
class Run:
    config: object
    tree: dict
    base_dir: Path
    run_dir: Path


def _prepare(config_path, overrides, require_seed=False) -> Run:
    path = Path(config_path)
    try:
        tree = load_config(path)
    except MissingFile as exc:
        raise UsageError(str(exc)) from None
    tree = apply_overrides(tree, overrides)
    if require_seed and "seed_everything" not in tree:
        raise UsageError("reproduce needs a seed: set seed_everything in the config")
    cfg = validate(tree)
    for note in cfg.warnings:
        log.warning(note)
    base = path.resolve().parent
    ckpt_root = Path(cfg.trainer.checkpoint_dir)
    if not ckpt_root.is_absolute():
        ckpt_root = base / ckpt_root
    run_dir = ckpt_root / f"{config_hash(cfg.to_tree())}-s{cfg.seed}"
    return Run(cfg, tree, base, run_dir)


def _data_module(run: Run, tokenizer=None):
    from .datasets import DataModule, HashTokenizer

    tok = tokenizer or HashTokenizer(run.config.model.vocab_size)
    return DataModule(run.config.data, tok, base_dir=run.base_dir)


def _multilabel(cfg) -> bool:
    from .datasets import MULTI, get_schema

    return get_schema(cfg.data.name).tasks[cfg.model.task].kind == MULTI


def _train_into(run: Run, out_dir: Path, seed_offset: int = 0):
    from .models import build_adapter
    from .trainer import train

    cfg = run.config
    rng.seed_everything(cfg.seed + seed_offset)
    data = _data_module(run)
    adapter = build_adapter(cfg.model, data.tokenizer, _multilabel(cfg))
    best, report = train(adapter, data, cfg.trainer, out_dir=out_dir, config_snapshot=cfg.to_tree())
    (out_dir / "config.yaml").write_text(dump_config(cfg.to_tree()), encoding="utf-8")
    return best, report


# --------------------------------------------------------------------------
# commands


def cmd_train(config_path, overrides=(), out=None) -> CommandResult:
    run = _prepare(config_path, overrides)
    out_dir = Path(out) if out else run.run_dir
    best, report = _train_into(run, out_dir)
    summary = {"run_dir": str(out_dir), "checkpoint": str(best), **report.as_dict(),
               "epochs": len(report.history)}
    print(json.dumps(summary, sort_keys=True))
    return CommandResult(0, [str(best), str(out_dir / "metrics.jsonl"), str(out_dir / "config.yaml")])


def _load_adapter(checkpoint, tokenizer):
    from .trainer import load_checkpoint, restore_adapter

    return restore_adapter(load_checkpoint(checkpoint), tokenizer)


def cmd_test(config_path, checkpoint, split="test", overrides=(), out=None) -> CommandResult:
    from .trainer import evaluate

    run = _prepare(config_path, overrides)
    data = _data_module(run)
    adapter = _load_adapter(checkpoint, data.tokenizer)
    report = evaluate(adapter, data.batches(split), adapter.spec.task)
    out_path = Path(out) if out else Path(checkpoint).parent / f"{split}_metrics.json"
    payload = {"split": split, **report.as_dict()}
    out_path.write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(payload, sort_keys=True))
    return CommandResult(0, [str(out_path)])


def cmd_reproduce(config_path, overrides=()) -> CommandResult:
    run = _prepare(config_path, overrides, require_seed=True)
    dirs = [run.run_dir / "reproduce" / "a", run.run_dir / "reproduce" / "b"]
    perturb = bool(os.environ.get(PERTURB_ENV))
    for i, d in enumerate(dirs):
        _train_into(run, d, seed_offset=1 if (perturb and i == 1) else 0)
    a, b = ((d / "metrics.jsonl").read_bytes() for d in dirs)
    artifacts = [str(d / "metrics.jsonl") for d in dirs]
    if a == b:
        print(f"reproduced: {len(a.splitlines())} identical metric lines")
        return CommandResult(0, artifacts)
    la, lb = a.decode().splitlines(), b.decode().splitlines()
    n = next((i for i, (x, y) in enumerate(zip(la, lb)) if x != y), min(len(la), len(lb)))
    first_a = la[n] if n < len(la) else "<eof>"
    first_b = lb[n] if n < len(lb) else "<eof>"
    print(f"runs diverge at metrics line {n + 1}:\n  a: {first_a}\n  b: {first_b}", file=sys.stderr)
    return CommandResult(2, artifacts)


def _image_files(input_dir):
    d = Path(input_dir)
    if not d.is_dir():
        raise UsageError(f"input directory not found: {d}")
    return sorted(p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def cmd_preprocess(tool, input_dir, output, backend="stub", n_regions=4, threshold=0.5,
                   inpaint_backend="diffusion", feature_dim=64) -> CommandResult:
    from . import preprocess as pp

    files = _image_files(input_dir)
    out = Path(output)
    if tool == "clean":
        pp.get_backend("ocr", backend)
        pp.get_backend("inpaint", inpaint_backend)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for f in files:
            cleaned = pp.clean_image(f, backend, inpaint_backend, threshold)
            pp.save_image(cleaned, out / (f.stem + ".png"))
            written.append(str(out / (f.stem + ".png")))
        return CommandResult(0, written)
    out.parent.mkdir(parents=True, exist_ok=True)
    if tool == "regions":
        extractor = pp.get_backend("regions", backend, d=feature_dim)
        entries = []
        for f in files:
            feats, boxes = extractor.extract(pp.load_image(f), n_regions)
            entries.append(pp.FeatureCacheEntry(f.stem, "regions", np.asarray(feats, np.float32),
                                                np.clip(np.asarray(boxes, np.float32), 0, 1)))
    elif tool == "global":
        extractor = pp.get_backend("global", backend, d=feature_dim)
        entries = [pp.FeatureCacheEntry(f.stem, "global", np.asarray(extractor.embed(pp.load_image(f)), np.float32))
                   for f in files]
    elif tool == "caption":
        pp.get_backend("caption", backend)
        entries = [pp.FeatureCacheEntry(f.stem, "caption", caption=pp.generate_caption(f, backend))
                   for f in files]
    else:
        raise UsageError(f"unknown preprocess tool {tool!r}")
    pp.write_cache(entries, out)
    print(f"wrote {len(entries)} {tool} entries to {out}")
    return CommandResult(0, [str(out)])


def _find_records(data, ids):
    from .datasets import SPLITS

    found = {}
    for split in SPLITS:
        if not (data.root / f"{split}.jsonl").is_file():
            continue
        for r in data.records(split):
            if r.id in ids and r.id not in found:
                found[r.id] = r
    missing = [i for i in ids if i not in found]
    if missing:
        raise MATKError(f"ids not found in any split: {', '.join(missing)}")
    return [found[i] for i in ids]


def cmd_analyze(method, config_path, checkpoint, ids, out, html=None, samples=None, steps=None,
                overrides=(), target=None) -> CommandResult:
    from .analysis import (adapter_predict_fn, integrated_gradients, lime_explain,
                           meme_instance, render_report)
    from .config import AnalysisSpec

    run = _prepare(config_path, overrides)
    spec = run.config.analysis or AnalysisSpec()
    data = _data_module(run)
    adapter = _load_adapter(checkpoint, data.tokenizer)
    adapter.eval()
    records = _find_records(data, ids)
    target = target if target is not None else spec.target
    attributions, metas = [], []
    for rec in records:
        batch = data.collate([rec])
        cls = target if target is not None else int(adapter.predict_proba(batch)[0].argmax())
        if method == "lime":
            entry = data.features.get(rec.id) if data.features is not None else None
            caption = data.captions[rec.id] if data.captions is not None else None
            instance = meme_instance(rec, data.tokenizer, entry, caption)
            attr = lime_explain(
                adapter_predict_fn(adapter, data.tokenizer, data.spec.max_len), instance, cls,
                num_samples=samples or spec.num_samples, kernel_width=spec.kernel_width,
                ridge_lambda=spec.ridge_lambda, generator=rng.derive("lime", rec.id, seed=run.config.seed),
            )
        elif method == "ig":
            attr = integrated_gradients(adapter, batch, steps=steps or spec.steps, target=cls)
        else:
            raise UsageError(f"unknown analysis method {method!r}")
        attributions.append(attr)
        metas.append({"id": rec.id, "image": str(data.root / rec.image_ref)})
    render_report(attributions, metas, out, html)
    artifacts = [str(out)] + ([str(html)] if html else [])
    print(f"wrote {method} report for {len(records)} memes to {out}")
    return CommandResult(0, artifacts)


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="matk", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def with_config(sp):
        sp.add_argument("--config", required=True)
        sp.add_argument("--override", action="append", default=[], metavar="KEY.PATH=VALUE")

    pre = sub.add_parser("preprocess", help="clean images or extract features/captions")
    pre.add_argument("tool", choices=["clean", "regions", "global", "caption"])
    pre.add_argument("--input", required=True)
    pre.add_argument("--output", required=True)
    pre.add_argument("--backend", default="stub")
    pre.add_argument("--n-regions", type=int, default=4)
    pre.add_argument("--threshold", type=float, default=0.5)
    pre.add_argument("--inpaint-backend", default="diffusion")
    pre.add_argument("--feature-dim", type=int, default=64)

    tr = sub.add_parser("train", help="train a model from a config")
    with_config(tr)
    tr.add_argument("--out", help="output directory (default: per-run directory)")

    te = sub.add_parser("test", help="evaluate a checkpoint")
    with_config(te)
    te.add_argument("--checkpoint", required=True)
    te.add_argument("--split", default="test", choices=["train", "validate", "test"])
    te.add_argument("--out")

    an = sub.add_parser("analyze", help="explain predictions with LIME or IG")
    an.add_argument("method", choices=["lime", "ig"])
    with_config(an)
    an.add_argument("--checkpoint", required=True)
    an.add_argument("--ids", required=True)
    an.add_argument("--out", required=True)
    an.add_argument("--html")
    an.add_argument("--samples", type=int)
    an.add_argument("--steps", type=int)
    an.add_argument("--target", type=int)

    rp = sub.add_parser("reproduce", help="train twice and compare metrics byte for byte")
    with_config(rp)
    return p


def run_command(argv) -> CommandResult:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "preprocess":
        return cmd_preprocess(args.tool, args.input, args.output, args.backend, args.n_regions,
                              args.threshold, args.inpaint_backend, args.feature_dim)
    if args.command == "train":
        return cmd_train(args.config, args.override, args.out)
    if args.command == "test":
        return cmd_test(args.config, args.checkpoint, args.split, args.override, args.out)
    if args.command == "analyze":
        ids = [i for i in args.ids.split(",") if i]
        return cmd_analyze(args.method, args.config, args.checkpoint, ids, args.out, args.html,
                           args.samples, args.steps, args.override, args.target)
    return cmd_reproduce(args.config, args.override)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        result = run_command(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except MATKError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
