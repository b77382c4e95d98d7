"""Deterministic hashing word tokenizer.

Words are lower-cased ``\\w+`` runs or single punctuation marks; each maps to
``4 + crc32(word) % (vocab_size - 4)``.  Ids 0-3 are reserved for
``<pad>``, ``<cls>``, ``</s>`` and ``<mask>``.
"""

import re
import zlib

PAD_ID, CLS_ID, SEP_ID, MASK_ID = 0, 1, 2, 3
SPECIALS = {"<pad>": PAD_ID, "<cls>": CLS_ID, "</s>": SEP_ID, "<mask>": MASK_ID}

_TOKEN_RE = re.compile(r"<pad>|<cls>|</s>|<mask>|\w+|[^\w\s]", re.UNICODE)


class HashTokenizer:
    pad_id = PAD_ID
    cls_id = CLS_ID
    sep_id = SEP_ID
    mask_id = MASK_ID

    def __init__(self, vocab_size: int = 4096):
        if vocab_size <= len(SPECIALS):
            raise ValueError("vocab_size too small")
        self.vocab_size = vocab_size

    def tokenize(self, text: str) -> list[str]:
        return [t if t in SPECIALS else t.lower() for t in _TOKEN_RE.findall(text)]

    def token_id(self, token: str) -> int:
        if token in SPECIALS:
            return SPECIALS[token]
        h = zlib.crc32(token.lower().encode("utf-8"))
        return len(SPECIALS) + h % (self.vocab_size - len(SPECIALS))

    def encode(self, text: str, max_len: int | None = None) -> list[int]:
        ids = [self.token_id(t) for t in self.tokenize(text)]
        return ids if max_len is None else ids[:max_len]

    def __call__(self, text, max_len=None):
        return self.encode(text, max_len)
