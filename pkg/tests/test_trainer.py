import itertools
import json

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from matk import rng
from matk.config import DataSpec, ModelSpec, TrainerConfig
from matk.datasets import DataModule, MemeRecord, collate
from matk.errors import (CorruptCheckpoint, EmptyInput, LengthMismatch, NoLabels, SingleClass,
                         VersionMismatch)
from matk.models import build_adapter
from matk.trainer import (accuracy, auroc, evaluate, load_checkpoint, restore_adapter,
                          save_checkpoint, train)


def brute_auroc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


def test_accuracy_examples():
    assert accuracy([1, 0, 1, 1], [1, 0, 0, 1]) == 0.75
    assert accuracy([2, 1, 0], [2, 1, 0]) == 1.0
    with pytest.raises(EmptyInput):
        accuracy([], [])
    with pytest.raises(LengthMismatch):
        accuracy([1], [1, 0])


def test_auroc_examples():
    assert auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    assert auroc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auroc([0.3] * 6, [0, 1, 0, 1, 1, 0]) == 0.5
    with pytest.raises(SingleClass):
        auroc([0.1, 0.2], [1, 1])


labelled = st.integers(2, 50).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 8).map(lambda k: k / 8), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
)).filter(lambda t: 0 < sum(t[1]) < len(t[1]))


@settings(max_examples=200, deadline=None)
@given(labelled)
def test_auroc_matches_pairwise_oracle(case):
    scores, labels = case
    assert abs(auroc(scores, labels) - brute_auroc(scores, labels)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(labelled)
def test_auroc_monotone_invariance(case):
    scores, labels = case
    s = np.asarray(scores)
    base = auroc(s, labels)
    assert auroc(2 * s + 1, labels) == base
    assert auroc(np.exp(s), labels) == base


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=30), st.randoms())
def test_accuracy_permutation_invariant(pairs, r):
    shuffled = list(pairs)
    r.shuffle(shuffled)
    a = accuracy([p for p, _ in pairs], [y for _, y in pairs])
    assert a == accuracy([p for p, _ in shuffled], [y for _, y in shuffled])


SPEC = ModelSpec(name="single_stream", backbone="stub-encoder", task="hateful")


@pytest.fixture
def data(synthetic_root, tmp_path, monkeypatch):
    monkeypatch.setenv("MATK_CACHE_DIR", str(tmp_path / "cache"))
    return DataModule(DataSpec(name="synthetic", root=str(synthetic_root), batch_size=16))


def test_evaluate_perfect_and_unlabeled(tokenizer, features):
    class Oracle(torch.nn.Module):
        spec = SPEC
        multilabel = False

        def predict_logits(self, batch):
            y = torch.as_tensor(batch.labels["hateful"], dtype=torch.float32)
            return torch.stack([-y, y], dim=1) * 10

    recs = [MemeRecord(str(i), "", "t", {"hateful": i % 2}) for i in range(6)]
    rep = evaluate(Oracle(), [collate(recs, tokenizer)], "hateful")
    assert rep.accuracy == 1.0 and rep.auroc == 1.0
    with pytest.raises(NoLabels):
        evaluate(Oracle(), [collate([MemeRecord("x", "", "t", {})], tokenizer)], "hateful")


def test_train_history_and_determinism(data, tmp_path):
    cfg = TrainerConfig(max_epochs=2, lr=3e-3)
    runs = []
    for name in ("a", "b"):
        rng.seed_everything(7)
        m = build_adapter(SPEC)
        best, rep = train(m, data, cfg, out_dir=tmp_path / name)
        runs.append((best, rep))
    (best_a, rep_a), (best_b, rep_b) = runs
    assert len(rep_a.history) == 2
    assert rep_a.history == rep_b.history
    assert (tmp_path / "a" / "metrics.jsonl").read_bytes() == (tmp_path / "b" / "metrics.jsonl").read_bytes()
    for f in ("params.bin", "manifest.json", "prng.json"):
        assert (best_a / f).read_bytes() == (best_b / f).read_bytes()
    lines = (tmp_path / "a" / "metrics.jsonl").read_text().splitlines()
    assert [json.loads(l)["epoch"] for l in lines] == [0, 1]


def test_best_epoch_is_earliest_on_ties(data, tmp_path):
    rng.seed_everything(1)
    m = build_adapter(SPEC)
    best, rep = train(m, data, TrainerConfig(max_epochs=3, lr=1e-12, monitor="accuracy"), out_dir=tmp_path)
    accs = [h["val"]["accuracy"] for h in rep.history]
    assert rep.accuracy == max(accs)
    saved = restore_adapter(load_checkpoint(best))
    rng.seed_everything(1)
    first = build_adapter(SPEC)
    # lr is tiny, so the earliest-epoch parameters are within float noise of the initial ones
    for (n, p), (_, q) in zip(saved.named_parameters(), first.named_parameters()):
        assert torch.allclose(p, q, atol=1e-6), n


def test_zero_lr_leaves_parameters(data, tmp_path):
    m = build_adapter(SPEC)
    before = {k: v.clone() for k, v in m.state_dict().items()}
    train(m, data, TrainerConfig(max_epochs=1, lr=0.0), out_dir=tmp_path)
    assert all(torch.equal(before[k], v) for k, v in m.state_dict().items())


def test_non_finite_loss(data, tmp_path):
    from matk.errors import NonFiniteLoss

    m = build_adapter(SPEC)
    with torch.no_grad():
        m.head.weight.fill_(float("nan"))
    with pytest.raises(NonFiniteLoss):
        train(m, data, TrainerConfig(max_epochs=1), out_dir=tmp_path)


def test_checkpoint_roundtrip(tmp_path, tokenizer, features, records):
    b = collate(records, tokenizer, features=features)
    m = build_adapter(ModelSpec(name="prompt", backbone="stub-mlm", task="hateful",
                                verbalizer={0: "good", 1: "bad"}))
    save_checkpoint(m, {"seed_everything": 3}, rng.get_state(), tmp_path / "c1")
    ck = load_checkpoint(tmp_path / "c1")
    assert ck.config == {"seed_everything": 3}
    restored = restore_adapter(ck, tokenizer)
    assert torch.equal(restored.predict_logits(b), m.predict_logits(b))
    save_checkpoint(restored, ck.config, ck.prng, tmp_path / "c2")
    for f in ("params.bin", "manifest.json", "prng.json"):
        assert (tmp_path / "c1" / f).read_bytes() == (tmp_path / "c2" / f).read_bytes()


def test_checkpoint_errors(tmp_path):
    m = build_adapter(SPEC)
    p = save_checkpoint(m, None, rng.get_state(), tmp_path / "c")
    manifest = json.loads((p / "manifest.json").read_text())
    manifest["version"] = 99
    (tmp_path / "v").mkdir()
    (tmp_path / "v" / "manifest.json").write_text(json.dumps(manifest))
    (tmp_path / "v" / "params.bin").write_bytes((p / "params.bin").read_bytes())
    with pytest.raises(VersionMismatch):
        load_checkpoint(tmp_path / "v")
    (p / "params.bin").write_bytes((p / "params.bin").read_bytes()[:-4])
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(p)
