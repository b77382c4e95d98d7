"""Backbone registry and the small differentiable stub backbones.

Every backbone maps an embedding sequence ``E [B, S, h]`` plus a 0/1 mask to
hidden states and a pooled vector.  Backbones used by the prompt archetype
also expose ``token_logits``; those used by the generative archetype expose
``sequence_logprob``.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from ..errors import DuplicateName, UnresolvedName

_BACKBONES: dict = {}

# A large epsilon keeps the norms smooth near zero rows (the default
# attribution baseline), so path integrals over them converge.
NORM_EPS = 1.0


def register_backbone(name: str, factory) -> None:
    """``factory(hidden_size, vocab_size) -> nn.Module``."""
    if name in _BACKBONES:
        raise DuplicateName("backbone", name)
    _BACKBONES[name] = factory


def resolve_backbone(name: str):
    try:
        return _BACKBONES[name]
    except KeyError:
        raise UnresolvedName("backbone", name) from None


def registered_backbones() -> list[str]:
    return sorted(_BACKBONES)


def masked_mean(x, mask):
    m = mask.to(x.dtype).unsqueeze(-1)
    return (x * m).sum(dim=1) / m.sum(dim=1).clamp_min(1.0)


class AttentionBlock(nn.Module):
    """Pre-norm single-head self-attention and tanh feed-forward, both residual."""

    def __init__(self, h: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(h, eps=NORM_EPS)
        self.norm2 = nn.LayerNorm(h, eps=NORM_EPS)
        self.q = nn.Linear(h, h)
        self.k = nn.Linear(h, h)
        self.v = nn.Linear(h, h)
        self.o = nn.Linear(h, h)
        self.ff1 = nn.Linear(h, 2 * h)
        self.ff2 = nn.Linear(2 * h, h)
        self.scale = 1.0 / math.sqrt(h)

    def forward(self, x, mask):
        y = self.norm1(x)
        scores = torch.einsum("bqh,bkh->bqk", self.q(y), self.k(y)) * self.scale
        scores = scores.masked_fill(mask[:, None, :] == 0, float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        x = x + self.o(torch.einsum("bqk,bkh->bqh", attn, self.v(y)))
        return x + self.ff2(torch.tanh(self.ff1(self.norm2(x))))


class StubEncoder(nn.Module):
    """Two attention blocks; pooled output averages the CLS row and the masked mean."""

    def __init__(self, hidden_size: int = 32, vocab_size: int = 4096, n_layers: int = 2):
        super().__init__()
        self.hidden_size = hidden_size
        self.blocks = nn.ModuleList(AttentionBlock(hidden_size) for _ in range(n_layers))
        self.final_norm = nn.LayerNorm(hidden_size, eps=NORM_EPS)

    def forward(self, x, mask):
        for block in self.blocks:
            x = block(x, mask)
        x = self.final_norm(x)
        return x, 0.5 * (x[:, 0] + masked_mean(x, mask))


class StubBagOfEmbeddings(nn.Module):
    """Identity encoder with masked-mean pooling: scores stay linear in ``E``."""

    def __init__(self, hidden_size: int = 32, vocab_size: int = 4096):
        super().__init__()
        self.hidden_size = hidden_size

    def forward(self, x, mask):
        return x, masked_mean(x, mask)


class StubMaskedLM(StubEncoder):
    def __init__(self, hidden_size: int = 32, vocab_size: int = 4096):
        super().__init__(hidden_size, vocab_size)
        self.lm_head = nn.Linear(hidden_size, vocab_size)

    def token_logits(self, hidden):
        return self.lm_head(hidden)


class StubSeq2Seq(StubEncoder):
    """Encoder plus a one-step-context decoder.

    ``log p(y_t | x, y_<t)`` is a softmax over the vocabulary of
    ``W tanh(A pool(x) + emb(y_{t-1}))``, with ``y_{-1} = <cls>``.
    """

    start_id = 1

    def __init__(self, hidden_size: int = 32, vocab_size: int = 4096):
        super().__init__(hidden_size, vocab_size)
        self.dec_emb = nn.Embedding(vocab_size, hidden_size)
        self.ctx = nn.Linear(hidden_size, hidden_size)
        self.out = nn.Linear(hidden_size, vocab_size)

    def sequence_logprob(self, hidden, mask, targets):
        """Mean per-token log-likelihood of ``targets`` (1-D id list) for each row."""
        ctx = self.ctx(masked_mean(hidden, mask))
        prev = [self.start_id] + list(targets[:-1])
        prev_t = torch.as_tensor(prev, dtype=torch.long, device=hidden.device)
        tgt_t = torch.as_tensor(list(targets), dtype=torch.long, device=hidden.device)
        state = torch.tanh(ctx[:, None, :] + self.dec_emb(prev_t)[None])
        logp = torch.log_softmax(self.out(state), dim=-1)
        picked = logp[:, torch.arange(len(targets)), tgt_t]
        return picked.mean(dim=1)


register_backbone("stub-encoder", StubEncoder)
register_backbone("stub-bow", StubBagOfEmbeddings)
register_backbone("stub-mlm", StubMaskedLM)
register_backbone("stub-seq2seq", StubSeq2Seq)
