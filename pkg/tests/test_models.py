import numpy as np
import pytest
import torch

from matk.config import ModelSpec
from matk.datasets import MemeRecord, collate
from matk.errors import DuplicateName, MissingVerbalizer, MissingVisualFeatures, UnresolvedName
from matk.models import (PROMPT_TEMPLATE, PromptAdapter, TextGenerativeAdapter, build_adapter,
                         register_backbone, registered_backbones, resolve_backbone)
from matk.models.backbones import StubSeq2Seq
from matk.preprocess import FeatureCacheEntry

VERB = {0: "good", 1: "bad"}
ARCHS = [
    ("single_stream", "stub-encoder"),
    ("single_stream", "stub-bow"),
    ("two_stream", "stub-encoder"),
    ("text_generative", "stub-seq2seq"),
    ("prompt", "stub-mlm"),
]


def spec(name, backbone, **kw):
    return ModelSpec(name=name, backbone=backbone, task="hateful", verbalizer=VERB, **kw)


@pytest.fixture
def batch(tokenizer, features, records):
    return collate(records, tokenizer, features=features, captions={"a": "an image", "b": "red sky"})


def fd_gradient(adapter, emb, target, h=1e-3):
    base = emb.values.detach().numpy()
    fd = np.zeros_like(base)
    for idx in np.ndindex(base.shape):
        for sign in (1, -1):
            v = base.copy()
            v[idx] += sign * h
            with torch.no_grad():
                fd[idx] += sign * float(adapter.score(emb.with_values(torch.as_tensor(v)), target).sum()) / (2 * h)
    return fd


def test_backbone_registry():
    assert {"stub-seq2seq", "stub-mlm", "stub-encoder"} <= set(registered_backbones())
    with pytest.raises(DuplicateName):
        register_backbone("stub-encoder", StubSeq2Seq)
    with pytest.raises(UnresolvedName):
        resolve_backbone("bert-large")


@pytest.mark.parametrize("name,backbone", ARCHS)
def test_logits_shape_and_probabilities(name, backbone, batch):
    m = build_adapter(spec(name, backbone))
    logits = m.predict_logits(batch)
    assert logits.shape == (2, 2)
    p = m.predict_proba(batch)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-6)


@pytest.mark.parametrize("name,backbone", ARCHS)
def test_embedding_path_is_faithful(name, backbone, batch):
    m = build_adapter(spec(name, backbone))
    direct = m.predict_logits(batch)
    via = m.score_from_embedding(m.embed_inputs(batch))
    assert torch.allclose(direct, via, atol=1e-5)


@pytest.mark.parametrize("name,backbone", ARCHS)
def test_deterministic_init_and_logits(name, backbone, batch):
    a = build_adapter(spec(name, backbone))
    b = build_adapter(spec(name, backbone))
    assert torch.equal(a.predict_logits(batch), b.predict_logits(batch))


@pytest.mark.parametrize("name,backbone", ARCHS)
def test_gradient_matches_finite_differences(name, backbone, tokenizer, features):
    recs = [MemeRecord("a", "", "kaboom now", {"hateful": 1})]
    b = collate(recs, tokenizer, features=features, captions={"a": "red"})
    m = build_adapter(spec(name, backbone, hidden_size=8)).double()
    emb = m.embed_inputs(b)
    g = m.gradient(emb, 1).numpy()
    fd = fd_gradient(m, emb, 1)
    rel = np.abs(g - fd) / np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-6)
    assert rel.max() <= 1e-3


@pytest.mark.parametrize("name,backbone", ARCHS)
def test_loss_decreases(name, backbone, batch):
    m = build_adapter(spec(name, backbone))
    opt = torch.optim.AdamW(m.parameters(), lr=1e-2)
    first = float(m.loss(batch).detach())
    for _ in range(50):
        opt.zero_grad()
        loss = m.loss(batch)
        loss.backward()
        opt.step()
    assert float(m.loss(batch).detach()) < first


def test_single_stream_shape_and_padding(tokenizer, features):
    recs = [MemeRecord("a", "", "one two three four five", {"hateful": 1}),
            MemeRecord("b", "", "one two", {"hateful": 0})]
    b = collate(recs, tokenizer, features=features)
    m = build_adapter(spec("single_stream", "stub-encoder"))
    emb = m.embed_inputs(b)
    assert emb.values.shape == (2, 1 + 5 + 4, 32)
    pad = (emb.mask == 0).nonzero()
    assert len(pad) > 0
    v = emb.values.detach().clone()
    for i, j in pad.tolist():
        v[i, j] = 0.0 if v[i, j].abs().sum() > 0 else 5.0
    assert torch.allclose(m.score_from_embedding(emb), m.score_from_embedding(emb.with_values(v)), atol=1e-6)


def test_single_stream_needs_visual(tokenizer, records):
    m = build_adapter(spec("single_stream", "stub-encoder"))
    with pytest.raises(MissingVisualFeatures):
        m.predict_logits(collate(records, tokenizer))


def test_single_stream_global(tokenizer, records):
    class Global:
        def get(self, id):
            return FeatureCacheEntry(id, "global", np.full(64, 0.3, np.float32))

    m = build_adapter(spec("single_stream", "stub-encoder"))
    b = collate(records, tokenizer, features=Global())
    assert m.embed_inputs(b).values.shape[1] == 1 + b.token_ids.shape[1] + 1


def test_two_stream_region_permutation_invariant(batch):
    m = build_adapter(spec("two_stream", "stub-encoder"))
    perm = [2, 0, 3, 1]
    shuffled = batch.replace(region_features=batch.region_features[:, perm], boxes=batch.boxes[:, perm])
    assert torch.allclose(m.predict_logits(batch), m.predict_logits(shuffled), atol=1e-6)


def test_two_stream_rejects_global(tokenizer, records):
    class Global:
        def get(self, id):
            return FeatureCacheEntry(id, "global", np.zeros(64, np.float32))

    m = build_adapter(spec("two_stream", "stub-encoder"))
    with pytest.raises(MissingVisualFeatures):
        m.predict_logits(collate(records, tokenizer, features=Global()))


class PrefersGood(StubSeq2Seq):
    good = None

    def sequence_logprob(self, hidden, mask, targets):
        base = super().sequence_logprob(hidden, mask, targets) * 0.0
        return base + (0.0 if list(targets) == self.good else -5.0)


def test_generative_prefers_good_stub(tokenizer, batch):
    PrefersGood.good = tokenizer.encode("good")
    register_backbone("test-prefers-good", PrefersGood)
    m = build_adapter(spec("text_generative", "test-prefers-good"))
    assert m.predict_logits(batch).argmax(dim=1).tolist() == [0, 0]


@pytest.mark.parametrize("cls", [TextGenerativeAdapter, PromptAdapter])
def test_missing_verbalizer(cls):
    backbone = "stub-seq2seq" if cls is TextGenerativeAdapter else "stub-mlm"
    name = "text_generative" if cls is TextGenerativeAdapter else "prompt"
    with pytest.raises(MissingVerbalizer):
        cls(ModelSpec(name=name, backbone=backbone, task="hateful"))
    with pytest.raises(MissingVerbalizer):
        cls(ModelSpec(name=name, backbone=backbone, task="hateful", verbalizer={0: "good"}))


def test_generative_input_construction():
    assert TextGenerativeAdapter.construct_input("hello", "a cat") == "hello </s> a cat"
    assert TextGenerativeAdapter.construct_input("hello", None) == "hello </s> "


def test_prompt_template_once(tokenizer):
    s = PromptAdapter.construct_input("what it was", "it was <mask>")
    assert s.endswith(PROMPT_TEMPLATE)
    long_text = " ".join(["word"] * 300)
    m = build_adapter(spec("prompt", "stub-mlm"))
    b = collate([MemeRecord("a", "", long_text, {})], tokenizer, max_len=512)
    emb = m.embed_inputs(b)
    ids = emb.values.shape[1]
    assert ids == m.max_len
    assert emb.layout["mask_pos"] == [ids - 1]


def test_prompt_deterministic(batch):
    m = build_adapter(spec("prompt", "stub-mlm"))
    assert torch.equal(m.predict_logits(batch), m.predict_logits(batch))


def test_text_only_ablation(batch):
    m = build_adapter(spec("single_stream", "stub-encoder", modalities=("text",)))
    emb = m.embed_inputs(batch)
    assert emb.values.shape[1] == 1 + batch.token_ids.shape[1]
    assert m.predict_logits(batch.replace(region_features=None, boxes=None)).shape == (2, 2)


def test_multilabel_loss(tokenizer, features):
    recs = [MemeRecord("a", "", "x y", {"aspects": np.array([1, 0, 1, 0])}),
            MemeRecord("b", "", "z", {"aspects": np.array([0, 0, 0, 1])})]
    b = collate(recs, tokenizer, features=features)
    m = build_adapter(ModelSpec(name="single_stream", backbone="stub-encoder", num_classes=4,
                                task="aspects"), multilabel=True)
    assert float(m.loss(b).detach()) > 0
    p = m.predict_proba(b)
    assert p.shape == (2, 4) and ((p > 0) & (p < 1)).all()
