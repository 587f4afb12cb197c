"""Corpus ingestion, tokenization, and collection statistics."""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from qprune.errors import CorpusFormatError, DuplicateDocnoError, EmptyCorpusError
from qprune.stemming import stem

# Unicode alphanumeric runs: word characters minus the underscore.
_TOKEN_RE = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class Passage:
    """One corpus unit: an opaque identifier plus raw text (may be empty)."""

    docno: str
    text: str


@dataclass(frozen=True)
class TokenizedPassage:
    docno: str
    terms: tuple[str, ...]


@dataclass(frozen=True)
class CollectionStats:
    """Corpus-wide term statistics; immutable once built."""

    num_passages: int
    total_terms: int
    term_freq: dict[str, int]
    doc_freq: dict[str, int]
    doc_len: dict[str, int]


def tokenize(text: str) -> list[str]:
    """Lowercase, split on any non-alphanumeric run, Porter-stem each token.

    Tokens that are not pure ASCII letters (numerals, mixed alphanumerics,
    non-Latin scripts) are kept verbatim: the stemmer only defines behaviour
    for a-z. No stopword removal.
    """
    out = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if tok.isascii() and tok.isalpha():
            tok = stem(tok)
        out.append(tok)
    return out


def tokenize_passage(passage: Passage) -> TokenizedPassage:
    return TokenizedPassage(passage.docno, tuple(tokenize(passage.text)))


def load_corpus(path, fmt: str | None = None) -> Iterator[Passage]:
    """Stream passages from a jsonl or tsv corpus file.

    jsonl: one object per line with string keys "docno" and "text".
    tsv:   docno<TAB>text, no header, no embedded tabs/newlines.
    Format is inferred from the suffix when not given.
    """
    path = Path(path)
    if fmt is None:
        fmt = {".jsonl": "jsonl", ".json": "jsonl", ".tsv": "tsv"}.get(path.suffix)
        if fmt is None:
            raise ValueError(f"cannot infer corpus format from {path.name!r}")
    if fmt not in ("jsonl", "tsv"):
        raise ValueError(f"unknown corpus format {fmt!r}")

    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if fmt == "jsonl":
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusFormatError(path, line_no, f"invalid JSON: {exc.msg}") from exc
                if not isinstance(record, dict) or "docno" not in record or "text" not in record:
                    raise CorpusFormatError(path, line_no, 'record must carry "docno" and "text"')
                docno, text = record["docno"], record["text"]
                if not isinstance(docno, str) or not isinstance(text, str):
                    raise CorpusFormatError(path, line_no, "docno and text must be strings")
            else:
                parts = line.split("\t")
                if len(parts) != 2:
                    raise CorpusFormatError(path, line_no, f"expected 2 tab-separated fields, got {len(parts)}")
                docno, text = parts
            if not docno:
                raise CorpusFormatError(path, line_no, "empty docno")
            if docno in seen:
                raise DuplicateDocnoError(f"duplicate docno {docno!r} at {path}:{line_no}")
            seen.add(docno)
            yield Passage(docno, text)


def write_corpus(passages: Iterable[Passage], path, fmt: str = "jsonl") -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for p in passages:
            if fmt == "jsonl":
                fh.write(json.dumps({"docno": p.docno, "text": p.text}, ensure_ascii=False) + "\n")
            elif fmt == "tsv":
                if "\t" in p.text or "\n" in p.text:
                    raise ValueError(f"passage {p.docno!r} contains tab/newline; not representable as tsv")
                fh.write(f"{p.docno}\t{p.text}\n")
            else:
                raise ValueError(f"unknown corpus format {fmt!r}")


def collect_stats(corpus: Iterable[TokenizedPassage]) -> CollectionStats:
    """Single-pass accumulation of collection statistics.

    Deterministic given corpus order and permutation-invariant in content:
    any ordering of the same passages yields equal counts.
    """
    term_freq: Counter[str] = Counter()
    doc_freq: Counter[str] = Counter()
    doc_len: dict[str, int] = {}
    total = 0
    for p in corpus:
        if p.docno in doc_len:
            raise DuplicateDocnoError(f"duplicate docno {p.docno!r} in corpus stream")
        counts = Counter(p.terms)
        term_freq.update(counts)
        doc_freq.update(counts.keys())
        doc_len[p.docno] = len(p.terms)
        total += len(p.terms)
    if not doc_len:
        raise EmptyCorpusError("cannot collect statistics over an empty corpus")
    return CollectionStats(
        num_passages=len(doc_len),
        total_terms=total,
        term_freq=dict(term_freq),
        doc_freq=dict(doc_freq),
        doc_len=doc_len,
    )
