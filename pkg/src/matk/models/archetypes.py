"""The four adapter archetypes.

===================  =====================  ==========================
archetype            stands in for          backbone capability
===================  =====================  ==========================
``single_stream``    VisualBERT, FLAVA      encoder
``two_stream``       LXMERT                 encoder (two instances)
``text_generative``  BART, T5               ``sequence_logprob``
``prompt``           PromptHate             ``token_logits``
===================  =====================  ==========================
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

from ..errors import MissingVerbalizer, MissingVisualFeatures
from .backbones import masked_mean
from .base import Embedding, ModelAdapter

PROMPT_TEMPLATE = "it was <mask>"
SEPARATOR = " </s> "


def _cat_rows(b: int, s: int):
    return np.full((b, s), -1, dtype=np.int64)


class _TokenEmbedder(nn.Module):
    def __init__(self, vocab_size: int, h: int, positions: int):
        super().__init__()
        self.tok_emb = nn.Embedding(vocab_size, h)
        self.pos_emb = nn.Embedding(positions, h)

    def forward(self, ids, offset: int = 0):
        pos = torch.arange(offset, offset + ids.shape[1])
        return self.tok_emb(ids) + self.pos_emb(pos)[None]


class _VisualStream:
    """Mixin: project region features + boxes (or a global vector) to ``h``."""

    def _init_visual(self, d: int, h: int):
        self.vis_proj = nn.Linear(d, h)
        self.box_proj = nn.Linear(4, h)
        self.glob_proj = nn.Linear(d, h)

    def _visual_rows(self, batch, regions_only: bool = False):
        # features arrive on the [0, 1] scale; centre them before projecting
        if batch.region_features is not None:
            feats = 2.0 * self._tensor(batch.region_features) - 1.0
            rows = self.vis_proj(feats) + self.box_proj(self._tensor(batch.boxes))
            refs = [[("region", tuple(float(v) for v in box)) for box in boxes] for boxes in batch.boxes]
            return rows, refs
        if batch.global_embedding is not None and not regions_only:
            rows = self.glob_proj(2.0 * self._tensor(batch.global_embedding) - 1.0)[:, None, :]
            return rows, [[("region", (0.0, 0.0, 1.0, 1.0))] for _ in batch.ids]
        need = "region features" if regions_only else "visual features"
        raise MissingVisualFeatures(f"{self.spec.name} adapter needs {need} in the batch")


class SingleStreamAdapter(_VisualStream, ModelAdapter):
    """[CLS] + token embeddings + projected visual embeddings through one encoder."""

    def __init__(self, spec, tokenizer=None, multilabel=False):
        super().__init__(spec, tokenizer, multilabel)
        h = spec.hidden_size
        self.text = _TokenEmbedder(spec.vocab_size, h, spec.max_len + 1)
        self.cls = nn.Parameter(torch.zeros(h))
        self.use_visual = "image" in spec.modalities
        self.use_text = "text" in spec.modalities
        self._init_visual(spec.visual_dim, h)
        self.backbone = self._backbone()
        self.linear_backbone = isinstance(self.backbone, _linear_types())
        self.pooler = nn.Linear(h, h)
        self.head = nn.Linear(h, spec.num_classes)
        self.reset_parameters()

    def embed_inputs(self, batch) -> Embedding:
        b = len(batch)
        ids = torch.as_tensor(batch.token_ids, dtype=torch.long)
        tmask = torch.as_tensor(batch.attention_mask, dtype=torch.long)
        if not self.use_text:
            ids, tmask = ids[:, :0], tmask[:, :0]
        cls = (self.cls + self.text.pos_emb.weight[0])[None, None, :].expand(b, 1, -1)
        parts = [cls, self.text(ids, offset=1)]
        masks = [torch.ones(b, 1, dtype=torch.long), tmask]
        vis_refs = [[] for _ in range(b)]
        if self.use_visual:
            vis, vis_refs = self._visual_rows(batch)
            parts.append(vis)
            masks.append(torch.ones(b, vis.shape[1], dtype=torch.long))
        values = torch.cat(parts, dim=1)
        mask = torch.cat(masks, dim=1)
        rows = _cat_rows(b, values.shape[1])
        units = []
        L = ids.shape[1]
        for i in range(b):
            n = int(tmask[i].sum())
            toks = self._token_units(batch.texts[i], n) if self.use_text else []
            rows[i, 1 : 1 + n] = np.arange(n)
            for k in range(len(vis_refs[i])):
                rows[i, 1 + L + k] = n + k
            units.append(toks + vis_refs[i])
        keep = rows < 0
        return Embedding(values, mask, rows, units, {"text_rows": 1 + L}, keep)

    def score_from_embedding(self, emb: Embedding):
        _, pooled = self.backbone(emb.values, emb.mask)
        if self.linear_backbone:
            return self.head(pooled)
        return self.head(torch.tanh(self.pooler(pooled)))


class TwoStreamAdapter(_VisualStream, ModelAdapter):
    """Separate text and visual encoders fused by cross-attention."""

    def __init__(self, spec, tokenizer=None, multilabel=False):
        super().__init__(spec, tokenizer, multilabel)
        h = spec.hidden_size
        self.text = _TokenEmbedder(spec.vocab_size, h, spec.max_len + 1)
        self.cls = nn.Parameter(torch.zeros(h))
        self._init_visual(spec.visual_dim, h)
        self.text_encoder = self._backbone()
        self.visual_encoder = self._backbone()
        self.cross_q = nn.Linear(h, h)
        self.cross_k = nn.Linear(h, h)
        self.cross_v = nn.Linear(h, h)
        self.fuse = nn.Linear(3 * h, h)
        self.head = nn.Linear(h, spec.num_classes)
        self.reset_parameters()

    def embed_inputs(self, batch) -> Embedding:
        b = len(batch)
        vis, vis_refs = self._visual_rows(batch, regions_only=True)
        ids = torch.as_tensor(batch.token_ids, dtype=torch.long)
        tmask = torch.as_tensor(batch.attention_mask, dtype=torch.long)
        cls = (self.cls + self.text.pos_emb.weight[0])[None, None, :].expand(b, 1, -1)
        values = torch.cat([cls, self.text(ids, offset=1), vis], dim=1)
        mask = torch.cat([torch.ones(b, 1, dtype=torch.long), tmask,
                          torch.ones(b, vis.shape[1], dtype=torch.long)], dim=1)
        L = ids.shape[1]
        rows = _cat_rows(b, values.shape[1])
        units = []
        for i in range(b):
            n = int(tmask[i].sum())
            rows[i, 1 : 1 + n] = np.arange(n)
            rows[i, 1 + L :] = n + np.arange(vis.shape[1])
            units.append(self._token_units(batch.texts[i], n) + vis_refs[i])
        return Embedding(values, mask, rows, units, {"text_rows": 1 + L}, rows < 0)

    def score_from_embedding(self, emb: Embedding):
        t = emb.layout["text_rows"]
        text_h, text_pooled = self.text_encoder(emb.values[:, :t], emb.mask[:, :t])
        vmask = emb.mask[:, t:]
        vis_h, _ = self.visual_encoder(emb.values[:, t:], vmask)
        scores = torch.einsum("bh,bkh->bk", self.cross_q(text_pooled), self.cross_k(vis_h))
        scores = scores / math.sqrt(self.hidden_size)
        scores = scores.masked_fill(vmask == 0, float("-inf"))
        attended = torch.einsum("bk,bkh->bh", torch.softmax(scores, dim=-1), self.cross_v(vis_h))
        fused = torch.tanh(self.fuse(torch.cat([text_pooled, attended, masked_mean(vis_h, vmask)], dim=-1)))
        return self.head(fused)


class _VerbalizedAdapter(ModelAdapter):
    def _init_verbalizer(self, spec):
        verb = spec.verbalizer
        if not verb:
            raise MissingVerbalizer(f"{spec.name} adapter requires a verbalizer")
        verb = {int(k): v for k, v in verb.items()}
        missing = [c for c in range(spec.num_classes) if c not in verb]
        if missing:
            raise MissingVerbalizer(f"verbalizer has no label word for classes {missing}")
        self.verbalizer = verb
        self.verbalizer_ids = []
        for c in range(spec.num_classes):
            words = verb[c] if isinstance(verb[c], str) else " ".join(verb[c])
            ids = self.tokenizer.encode(words)
            if not ids:
                raise MissingVerbalizer(f"verbalizer word for class {c} is empty")
            self.verbalizer_ids.append(ids)

    def _sequences(self, batch):
        raise NotImplementedError

    def embed_inputs(self, batch) -> Embedding:
        seqs, unit_lists, row_maps, extras = self._sequences(batch)
        b = len(seqs)
        width = max(len(s) for s in seqs)
        ids = torch.zeros(b, width, dtype=torch.long)
        mask = torch.zeros(b, width, dtype=torch.long)
        rows = _cat_rows(b, width)
        for i, s in enumerate(seqs):
            ids[i, : len(s)] = torch.as_tensor(s)
            mask[i, : len(s)] = 1
            rows[i, : len(s)] = row_maps[i]
        values = self.text(ids)
        return Embedding(values, mask, rows, unit_lists, extras, rows < 0)


class TextGenerativeAdapter(_VerbalizedAdapter):
    """Scores each class by the length-normalised log-likelihood of its label words."""

    def __init__(self, spec, tokenizer=None, multilabel=False):
        super().__init__(spec, tokenizer, multilabel)
        self._init_verbalizer(spec)
        h = spec.hidden_size
        self.text = _TokenEmbedder(spec.vocab_size, h, spec.max_len)
        self.backbone = self._backbone()
        if not hasattr(self.backbone, "sequence_logprob"):
            raise ValueError(f"backbone {spec.backbone!r} cannot score target sequences")
        self.reset_parameters()

    @staticmethod
    def construct_input(text: str, caption: str | None) -> str:
        return text + SEPARATOR + (caption or "")

    def _sequences(self, batch):
        tok = self.tokenizer
        captions = batch.captions or [""] * len(batch)
        seqs, units, maps = [], [], []
        for text, cap in zip(batch.texts, captions):
            t_tokens = tok.tokenize(text)
            c_tokens = tok.tokenize(cap)
            toks = t_tokens + ["</s>"] + c_tokens
            kinds = ["token"] * len(t_tokens) + [None] + ["caption-token"] * len(c_tokens)
            toks, kinds = toks[: self.max_len], kinds[: self.max_len]
            seqs.append([tok.token_id(t) for t in toks])
            unit_list, row_map = [], []
            for t, k in zip(toks, kinds):
                if k is None:
                    row_map.append(-1)
                else:
                    row_map.append(len(unit_list))
                    unit_list.append((k, t))
            units.append(unit_list)
            maps.append(row_map)
        return seqs, units, maps, {}

    def score_from_embedding(self, emb: Embedding):
        hidden, _ = self.backbone(emb.values, emb.mask)
        cols = [self.backbone.sequence_logprob(hidden, emb.mask, ids) for ids in self.verbalizer_ids]
        return torch.stack(cols, dim=1)


class PromptAdapter(_VerbalizedAdapter):
    """caption + text + "it was <mask>"; logits are mask-position scores of label words."""

    def __init__(self, spec, tokenizer=None, multilabel=False):
        super().__init__(spec, tokenizer, multilabel)
        self._init_verbalizer(spec)
        h = spec.hidden_size
        self.text = _TokenEmbedder(spec.vocab_size, h, spec.max_len)
        self.backbone = self._backbone()
        if not hasattr(self.backbone, "token_logits"):
            raise ValueError(f"backbone {spec.backbone!r} has no token scoring head")
        self.reset_parameters()

    @staticmethod
    def construct_input(text: str, caption: str | None) -> str:
        parts = [p for p in (caption, text) if p]
        return " ".join(parts + [PROMPT_TEMPLATE])

    def _sequences(self, batch):
        tok = self.tokenizer
        template = tok.tokenize(PROMPT_TEMPLATE)
        budget = max(self.max_len - len(template), 0)
        captions = batch.captions or [""] * len(batch)
        seqs, units, maps, mask_pos = [], [], [], []
        for text, cap in zip(batch.texts, captions):
            body = [("caption-token", t) for t in tok.tokenize(cap)]
            body += [("token", t) for t in tok.tokenize(text)]
            body = body[:budget]
            toks = [t for _, t in body] + template
            seqs.append([tok.token_id(t) for t in toks])
            units.append(body)
            maps.append(list(range(len(body))) + [-1] * len(template))
            mask_pos.append(len(toks) - 1 - template[::-1].index("<mask>"))
        return seqs, units, maps, {"mask_pos": mask_pos}

    def score_from_embedding(self, emb: Embedding):
        hidden, _ = self.backbone(emb.values, emb.mask)
        pos = torch.as_tensor(emb.layout["mask_pos"], dtype=torch.long)
        at_mask = hidden[torch.arange(hidden.shape[0]), pos]
        vocab = self.backbone.token_logits(at_mask)
        cols = [vocab[:, ids].mean(dim=1) for ids in self.verbalizer_ids]
        return torch.stack(cols, dim=1)


def _linear_types():
    from .backbones import StubBagOfEmbeddings

    return (StubBagOfEmbeddings,)


ARCHETYPES = {
    "single_stream": SingleStreamAdapter,
    "two_stream": TwoStreamAdapter,
    "text_generative": TextGenerativeAdapter,
    "prompt": PromptAdapter,
}


def build_adapter(spec, tokenizer=None, multilabel: bool = False) -> ModelAdapter:
    from ..errors import UnresolvedName

    try:
        cls = ARCHETYPES[spec.name]
    except KeyError:
        raise UnresolvedName("model", spec.name) from None
    return cls(spec, tokenizer, multilabel)


def build_single_stream_adapter(spec, tokenizer=None, multilabel=False):
    return SingleStreamAdapter(spec, tokenizer, multilabel)


def build_two_stream_adapter(spec, tokenizer=None, multilabel=False):
    return TwoStreamAdapter(spec, tokenizer, multilabel)


def build_text_generative_adapter(spec, tokenizer=None, multilabel=False):
    return TextGenerativeAdapter(spec, tokenizer, multilabel)


def build_prompt_adapter(spec, tokenizer=None, multilabel=False):
    return PromptAdapter(spec, tokenizer, multilabel)
