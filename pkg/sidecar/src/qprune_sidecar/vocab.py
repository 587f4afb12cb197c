"""Word-level vocabulary: the sidecar models own their tokenization."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Iterable

PAD, UNK, BOS = "<pad>", "<unk>", "<bos>"
# prompt pieces for the supervised scorer; kept in every vocabulary so a
# model artifact can always render its template
TEMPLATE_TOKENS = ("document:", "relevant:", "true", "false")


class WordVocab:
    """Lowercased whitespace tokens mapped to contiguous ids."""

    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.index = {t: i for i, t in enumerate(tokens)}
        self.pad_id = self.index[PAD]
        self.unk_id = self.index[UNK]
        self.bos_id = self.index[BOS]

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def build(cls, texts: Iterable[str], max_size: int = 8192) -> "WordVocab":
        counts: Counter[str] = Counter()
        for text in texts:
            counts.update(text.lower().split())
        specials = [PAD, UNK, BOS, *TEMPLATE_TOKENS]
        budget = max(0, max_size - len(specials))
        # frequency order with alphabetical tie-break keeps builds reproducible
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        words = [w for w, _ in ranked if w not in specials][:budget]
        return cls(specials + words)

    def encode(self, text: str) -> list[int]:
        return [self.index.get(tok, self.unk_id) for tok in text.lower().split()]

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.tokens), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "WordVocab":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))
