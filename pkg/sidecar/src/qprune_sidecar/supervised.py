"""Supervised quality scorer: a tiny causal LM fine-tuned (from scratch at
desk scale) to emit true/false after a "document: [x] relevant:" prompt."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import torch

from qprune_sidecar.models import MAX_POSITIONS, build_tiny_causal, resolve_device, save_artifact
from qprune_sidecar.vocab import WordVocab


@dataclass
class SupervisedTrainConfig:
    steps: int = 300
    batch_size: int = 8
    learning_rate: float = 5e-4
    seed: int = 0
    device: str = "cpu"

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1:
            raise ValueError("steps must be >= 0 and batch_size >= 1")


def read_triples(path) -> list[tuple[str, str, str]]:
    triples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{line_no}: expected 3 tab-separated fields")
            triples.append(tuple(parts))
    return triples


def _prompt_ids(vocab: WordVocab, text: str) -> list[int]:
    doc_tok = vocab.index["document:"]
    rel_tok = vocab.index["relevant:"]
    body = vocab.encode(text)[: MAX_POSITIONS - 4]
    return [vocab.bos_id, doc_tok, *body, rel_tok]


def _target_logits(model, vocab: WordVocab, batch_ids: list[list[int]]) -> torch.Tensor:
    """Logits over the true/false tokens at each prompt's final position."""
    device = next(model.parameters()).device
    width = max(len(ids) for ids in batch_ids)
    inputs = torch.full((len(batch_ids), width), vocab.pad_id, dtype=torch.long, device=device)
    mask = torch.zeros((len(batch_ids), width), dtype=torch.long, device=device)
    last = []
    for row, ids in enumerate(batch_ids):
        inputs[row, : len(ids)] = torch.tensor(ids, dtype=torch.long, device=device)
        mask[row, : len(ids)] = 1
        last.append(len(ids) - 1)
    logits = model(input_ids=inputs, attention_mask=mask).logits
    rows = torch.arange(len(batch_ids), device=device)
    final = logits[rows, torch.tensor(last, device=device)]
    true_id, false_id = vocab.index["true"], vocab.index["false"]
    return final[:, [true_id, false_id]]


def supervised_train(triples: Sequence[tuple[str, str, str]], config: SupervisedTrainConfig, out_dir):
    """Pointwise cross-entropy over (passage -> true/false) examples.

    The query component of each triple is ignored. Returns the artifact
    directory; the saved artifact is loadable by every scorer.
    """
    texts = [text for _, pos, neg in triples for text in (pos, neg)]
    vocab = WordVocab.build(texts)
    model = build_tiny_causal(len(vocab), config.seed)
    device = resolve_device(config.device)
    model.to(device)

    examples = []
    for _, pos, neg in triples:
        examples.append((_prompt_ids(vocab, pos), 0))  # index 0 = "true"
        examples.append((_prompt_ids(vocab, neg), 1))  # index 1 = "false"

    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    generator = torch.Generator().manual_seed(config.seed)
    loss_fn = torch.nn.CrossEntropyLoss()
    model.train()
    step = 0
    while step < config.steps:
        order = torch.randperm(len(examples), generator=generator).tolist()
        for lo in range(0, len(order), config.batch_size):
            if step >= config.steps:
                break
            batch = [examples[i] for i in order[lo : lo + config.batch_size]]
            logits = _target_logits(model, vocab, [ids for ids, _ in batch])
            targets = torch.tensor([y for _, y in batch], device=device)
            loss = loss_fn(logits, targets)
            if not math.isfinite(loss.detach().item()):
                raise RuntimeError(f"training diverged: non-finite loss at step {step}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            step += 1
    model.eval()
    save_artifact(model, vocab, out_dir)
    record = {
        "scorer": "supervised",
        "steps": config.steps,
        "batch_size": config.batch_size,
        "learning_rate": config.learning_rate,
        "seed": config.seed,
        "num_triples": len(triples),
    }
    Path(out_dir, "train_record.json").write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    return Path(out_dir)


def supervised_score(passages: Sequence[tuple[str, str]], spec):
    """Probability of the "true" token (vs "false") after each prompt."""
    from qprune_sidecar.models import TINY_CAUSAL, load_artifact

    if spec.model == TINY_CAUSAL:
        vocab = WordVocab.build([text for _, text in passages])
        model = build_tiny_causal(len(vocab), spec.seed)
    else:
        model, vocab = load_artifact(spec.model)
    model.to(resolve_device(spec.device))

    scores: dict[str, float] = {}
    start = time.perf_counter()
    batch: list[tuple[str, list[int]]] = []

    def flush():
        if not batch:
            return
        with torch.no_grad():
            pair_logits = _target_logits(model, vocab, [ids for _, ids in batch])
            probs = torch.softmax(pair_logits.float(), dim=-1)[:, 0]
        for i, (docno, _) in enumerate(batch):
            scores[docno] = float(probs[i])
        batch.clear()

    for docno, text in passages:
        batch.append((docno, _prompt_ids(vocab, text)))
        if len(batch) >= spec.batch_size:
            flush()
    flush()
    elapsed_ms = (time.perf_counter() - start) * 1e3
    from qprune_sidecar.scoring import _run_record

    return scores, _run_record(spec, len(passages), elapsed_ms)
