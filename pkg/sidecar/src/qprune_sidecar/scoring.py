"""Perplexity and vector-magnitude scorers plus latency measurement."""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import torch

from qprune_sidecar.models import (
    MAX_POSITIONS,
    TINY_CAUSAL,
    build_tiny_causal,
    load_artifact,
    resolve_device,
)
from qprune_sidecar.vocab import WordVocab

# emitted for passages the scorer cannot judge (empty after tokenization);
# sorts below every real score
FLOOR_SCORE = -sys.float_info.max


@dataclass
class ScorerSpec:
    scorer: str  # ppl | magnitude | supervised
    model: str = TINY_CAUSAL
    batch_size: int = 16
    device: str = "cpu"
    negate: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.scorer not in ("ppl", "magnitude", "supervised"):
            raise ValueError(f"unknown scorer {self.scorer!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.scorer == "ppl":
            self.negate = True  # perplexity is inverse likelihood; always flip


def read_corpus(path) -> list[tuple[str, str]]:
    """jsonl corpus -> (docno, text) pairs, file order preserved."""
    passages = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            record = json.loads(line)
            docno, text = record["docno"], record["text"]
            if docno in seen:
                raise ValueError(f"duplicate docno {docno!r} at line {line_no}")
            seen.add(docno)
            passages.append((docno, text))
    return passages


def write_scores(scores: dict[str, float], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for docno, value in scores.items():
            fh.write(f"{docno}\t{value!r}\n")


def write_latency_record(record: dict, path) -> None:
    Path(path).write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")


def _materialize(spec: ScorerSpec, texts: Sequence[str]):
    """Model plus vocabulary, either built fresh or loaded from an artifact."""
    if spec.model == TINY_CAUSAL:
        vocab = WordVocab.build(texts)
        model = build_tiny_causal(len(vocab), spec.seed)
    else:
        model, vocab = load_artifact(spec.model)
    model.to(resolve_device(spec.device))
    return model, vocab


def token_log_probs(model, ids: list[int]) -> list[float]:
    """Log-likelihood of each token given its prefix (ids excludes BOS)."""
    device = next(model.parameters()).device
    bos = model.config.bos_token_id
    inputs = torch.tensor([[bos] + ids], dtype=torch.long, device=device)
    with torch.no_grad():
        logits = model(inputs).logits
    log_probs = torch.log_softmax(logits.float(), dim=-1)
    return [float(log_probs[0, i, ids[i]]) for i in range(len(ids))]


def perplexity(model, ids: list[int]) -> float:
    per_token = token_log_probs(model, ids)
    return math.exp(-sum(per_token) / len(per_token))


def ppl_score(passages: Sequence[tuple[str, str]], spec: ScorerSpec):
    """Negated perplexity per passage under the model's own tokenizer.

    Returns (scores, run record). Passages longer than the model context are
    truncated and flagged; passages with no tokens get the floor score.
    """
    model, vocab = _materialize(spec, [text for _, text in passages])
    scores: dict[str, float] = {}
    truncated, empty = [], []
    start = time.perf_counter()
    for docno, text in passages:
        ids = vocab.encode(text)
        if not ids:
            empty.append(docno)
            scores[docno] = FLOOR_SCORE
            continue
        if len(ids) > MAX_POSITIONS - 1:
            ids = ids[: MAX_POSITIONS - 1]
            truncated.append(docno)
        scores[docno] = -perplexity(model, ids)
    elapsed_ms = (time.perf_counter() - start) * 1e3
    record = _run_record(spec, len(passages), elapsed_ms, truncated=truncated, empty=empty)
    return scores, record


def embed(model, vocab: WordVocab, texts: Sequence[str], batch_size: int) -> torch.Tensor:
    """Mean-pooled hidden states; empty texts embed as the BOS token alone."""
    device = next(model.parameters()).device
    encoder = model.transformer if hasattr(model, "transformer") else model
    vectors = []
    for lo in range(0, len(texts), batch_size):
        chunk = texts[lo : lo + batch_size]
        encoded = [(vocab.encode(t) or [vocab.bos_id])[: MAX_POSITIONS] for t in chunk]
        width = max(len(ids) for ids in encoded)
        batch = torch.full((len(encoded), width), vocab.pad_id, dtype=torch.long, device=device)
        mask = torch.zeros((len(encoded), width), dtype=torch.long, device=device)
        for row, ids in enumerate(encoded):
            batch[row, : len(ids)] = torch.tensor(ids, dtype=torch.long, device=device)
            mask[row, : len(ids)] = 1
        with torch.no_grad():
            hidden = encoder(input_ids=batch, attention_mask=mask).last_hidden_state
        weights = mask.unsqueeze(-1).float()
        vectors.append((hidden * weights).sum(dim=1) / weights.sum(dim=1))
    return torch.cat(vectors, dim=0)


def magnitude_score(passages: Sequence[tuple[str, str]], spec: ScorerSpec, scale: float = 1.0):
    """Euclidean norm of the passage embedding (optionally scaled; the scale
    hook exists so norm homogeneity is testable)."""
    model, vocab = _materialize(spec, [text for _, text in passages])
    start = time.perf_counter()
    vectors = embed(model, vocab, [text for _, text in passages], spec.batch_size) * scale
    norms = torch.linalg.vector_norm(vectors, dim=1)
    elapsed_ms = (time.perf_counter() - start) * 1e3
    scores = {docno: float(norms[i]) for i, (docno, _) in enumerate(passages)}
    record = _run_record(spec, len(passages), elapsed_ms)
    return scores, record


def _run_record(spec: ScorerSpec, n: int, elapsed_ms: float, **extra) -> dict:
    record = {
        "scorer": spec.scorer,
        "model": spec.model,
        "ms_per_passage": elapsed_ms / max(n, 1),
        "passages_per_second": n / (elapsed_ms / 1e3) if elapsed_ms > 0 else float(n),
        "deterministic": True,
        "seed": spec.seed,
    }
    record.update({k: v for k, v in extra.items() if v})
    return record


def measure_latency(passages: Sequence[tuple[str, str]], spec: ScorerSpec, samples: int = 5) -> dict:
    """Best-of-N throughput over a passage sample, in the break-even input
    format: {scorer, model, ms_per_passage, passages_per_second}."""
    if len(passages) < 100:
        raise ValueError(f"latency sample needs >= 100 passages, got {len(passages)}")
    from qprune_sidecar.supervised import supervised_score

    runner = {"ppl": ppl_score, "magnitude": magnitude_score, "supervised": supervised_score}[spec.scorer]
    best_pps = 0.0
    for _ in range(samples):
        _, record = runner(passages, spec)
        best_pps = max(best_pps, record["passages_per_second"])
    return {
        "scorer": spec.scorer,
        "model": spec.model,
        "ms_per_passage": 1e3 / best_pps,
        "passages_per_second": best_pps,
    }
