"""In-memory inverted index with BM25 document-at-a-time search."""

from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from qprune.corpus import TokenizedPassage, tokenize
from qprune.errors import CorpusFormatError, EmptyCorpusError
from collections import Counter


@dataclass
class InvertedIndex:
    """Postings keyed by term; internal doc ids follow build order.

    Postings are (internal id, term frequency) pairs sorted by id with no
    duplicates; document frequency is the postings length. Immutable after
    construction and safe for concurrent readers.
    """

    lexicon: dict[str, list[tuple[int, int]]]
    doc_lengths: list[int]
    docnos: list[str]
    avgdl: float

    @property
    def num_docs(self) -> int:
        return len(self.docnos)

    def doc_freq(self, term: str) -> int:
        return len(self.lexicon.get(term, ()))


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0.0:
            raise ValueError(f"k1 must be positive, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")


@dataclass
class RankedList:
    """Top-k output for one query: (docno, score) pairs, score descending."""

    qid: str
    items: list[tuple[str, float]]


@dataclass(frozen=True)
class IndexStats:
    num_docs: int
    num_postings: int
    total_terms: int
    estimated_bytes: int


@dataclass(frozen=True)
class LatencyStats:
    mean_ms: float
    median_ms: float
    repetitions: int


def build_index(passages: Iterable[TokenizedPassage]) -> InvertedIndex:
    lexicon: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: list[int] = []
    docnos: list[str] = []
    for doc_id, p in enumerate(passages):
        docnos.append(p.docno)
        doc_lengths.append(len(p.terms))
        for term, tf in Counter(p.terms).items():
            lexicon.setdefault(term, []).append((doc_id, tf))
    if not docnos:
        raise EmptyCorpusError("cannot build an index over zero passages")
    avgdl = sum(doc_lengths) / len(docnos)
    return InvertedIndex(lexicon=lexicon, doc_lengths=doc_lengths, docnos=docnos, avgdl=avgdl)


def _idf(index: InvertedIndex, df: int) -> float:
    # ln(1 + (N - df + 0.5)/(df + 0.5)): strictly positive for any indexed term
    return math.log1p((index.num_docs - df + 0.5) / (df + 0.5))


def bm25_search(
    index: InvertedIndex,
    query: str,
    k: int,
    params: Bm25Params = Bm25Params(),
    qid: str = "",
) -> RankedList:
    """Exhaustive BM25 scoring of every document matching >= 1 query term.

    Repeated query terms multiply that term's contribution by its query
    term frequency. Ties are broken by ascending docno; at most k results.
    """
    accumulators: dict[int, float] = {}
    for term, qtf in Counter(tokenize(query)).items():
        postings = index.lexicon.get(term)
        if not postings:
            continue
        idf = _idf(index, len(postings))
        k1, b = params.k1, params.b
        for doc_id, tf in postings:
            norm = k1 * (1.0 - b + b * index.doc_lengths[doc_id] / index.avgdl)
            accumulators[doc_id] = accumulators.get(doc_id, 0.0) + qtf * idf * tf * (k1 + 1.0) / (tf + norm)
    ranked = sorted(
        ((index.docnos[doc_id], score) for doc_id, score in accumulators.items()),
        key=lambda item: (-item[1], item[0]),
    )
    return RankedList(qid=qid, items=ranked[:k])


# Documented size model: 8 bytes per posting, 16 bytes per lexicon entry,
# 4 bytes per stored document length.
_POSTING_BYTES = 8
_LEXICON_ENTRY_BYTES = 16
_DOC_LENGTH_BYTES = 4


def index_stats(index: InvertedIndex) -> IndexStats:
    num_postings = sum(len(postings) for postings in index.lexicon.values())
    return IndexStats(
        num_docs=index.num_docs,
        num_postings=num_postings,
        total_terms=sum(index.doc_lengths),
        estimated_bytes=(
            _POSTING_BYTES * num_postings
            + _LEXICON_ENTRY_BYTES * len(index.lexicon)
            + _DOC_LENGTH_BYTES * index.num_docs
        ),
    )


def timed_search(
    index: InvertedIndex,
    queries: Sequence[tuple[str, str]],
    k: int,
    params: Bm25Params = Bm25Params(),
    repetitions: int = 1,
) -> tuple[LatencyStats, list[RankedList]]:
    """Wall-clock BM25 latency over (qid, text) queries.

    One warm-up pass is run and discarded; latencies are collected per query
    over the remaining repetitions. Results are those of the warm-up pass
    and are identical to plain bm25_search.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    results = [bm25_search(index, text, k, params, qid=qid) for qid, text in queries]
    latencies_ms: list[float] = []
    for _ in range(repetitions):
        for qid, text in queries:
            start = time.perf_counter()
            bm25_search(index, text, k, params, qid=qid)
            latencies_ms.append((time.perf_counter() - start) * 1e3)
    stats = LatencyStats(
        mean_ms=statistics.fmean(latencies_ms),
        median_ms=statistics.median(latencies_ms),
        repetitions=repetitions,
    )
    return stats, results


def save_index(index: InvertedIndex, path) -> None:
    payload = {
        "docnos": index.docnos,
        "doc_lengths": index.doc_lengths,
        "avgdl": index.avgdl,
        "lexicon": {term: [list(p) for p in postings] for term, postings in index.lexicon.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_index(path) -> InvertedIndex:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return InvertedIndex(
        lexicon={term: [tuple(p) for p in postings] for term, postings in payload["lexicon"].items()},
        doc_lengths=list(payload["doc_lengths"]),
        docnos=list(payload["docnos"]),
        avgdl=payload["avgdl"],
    )


def write_run(results: Iterable[RankedList], path, tag: str = "qprune") -> None:
    """Standard 6-column run format: qid Q0 docno rank score tag."""
    with open(path, "w", encoding="utf-8") as fh:
        for ranked in results:
            for rank, (docno, score) in enumerate(ranked.items, 1):
                fh.write(f"{ranked.qid} Q0 {docno} {rank} {score!r} {tag}\n")


def read_run(path) -> dict[str, RankedList]:
    path = Path(path)
    by_qid: dict[str, list[tuple[int, str, float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.split()
            if len(parts) != 6:
                raise CorpusFormatError(path, line_no, f"expected 6 run columns, got {len(parts)}")
            qid, _, docno, rank, score, _ = parts
            try:
                by_qid.setdefault(qid, []).append((int(rank), docno, float(score)))
            except ValueError as exc:
                raise CorpusFormatError(path, line_no, f"bad rank/score: {exc}") from exc
    runs: dict[str, RankedList] = {}
    for qid, rows in by_qid.items():
        rows.sort()
        runs[qid] = RankedList(qid=qid, items=[(docno, score) for _, docno, score in rows])
    return runs


def load_queries(path) -> list[tuple[str, str]]:
    """Read qid<TAB>query_text pairs."""
    path = Path(path)
    queries: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise CorpusFormatError(path, line_no, f"expected qid<TAB>query, got {len(parts)} fields")
            qid, text = parts
            if qid in seen:
                raise CorpusFormatError(path, line_no, f"duplicate qid {qid!r}")
            seen.add(qid)
            queries.append((qid, text))
    return queries
