"""Static pruning: keep passages whose quality score clears a threshold."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

from qprune.corpus import Passage
from qprune.errors import MissingScoreError
from qprune.quality import QualityScoreSet


@dataclass(frozen=True)
class PruneSpec:
    """Either a target fraction of passages to prune or an explicit threshold."""

    fraction: float | None = None
    threshold: float | None = None

    def __post_init__(self):
        if (self.fraction is None) == (self.threshold is None):
            raise ValueError("set exactly one of fraction/threshold")
        if self.fraction is not None and not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must lie in [0, 1], got {self.fraction}")


@dataclass
class PruneManifest:
    estimator: str
    threshold_used: float
    kept: list[str]
    pruned: list[str]
    fraction_requested: float | None
    fraction_achieved: float


def select_threshold(scores: QualityScoreSet, fraction: float) -> tuple[float, list[str], list[str]]:
    """Exact-count threshold selection: prune the floor(fraction * n) lowest.

    Passages are ordered by (score ascending, docno ascending); the docno
    tie-break makes the rule total, so exact prune counts are hit even when
    scores tie. Returns (threshold, pruned docnos, kept docnos), both lists
    in that same order. The threshold is the score of the last pruned
    passage, or -inf when nothing is pruned.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    if not scores.scores:
        raise ValueError("cannot select a threshold over an empty score set")
    ranked = sorted(scores.scores.items(), key=lambda kv: (kv[1], kv[0]))
    n_pruned = math.floor(fraction * len(ranked))
    pruned = [docno for docno, _ in ranked[:n_pruned]]
    kept = [docno for docno, _ in ranked[n_pruned:]]
    threshold = ranked[n_pruned - 1][1] if n_pruned > 0 else -math.inf
    return threshold, pruned, kept


def prune(
    corpus: Iterable[Passage], scores: QualityScoreSet, spec: PruneSpec
) -> tuple[Iterator[Passage], PruneManifest]:
    """Filter a passage stream by quality.

    Threshold mode keeps exactly {p : score(p) >= t}; fraction mode applies
    the exact-count rule of select_threshold. The manifest is derived from
    the score set alone, so it is identical for any ordering of the same
    corpus; the returned stream preserves corpus order over kept passages.
    """
    if spec.fraction is not None:
        threshold, pruned, kept = select_threshold(scores, spec.fraction)
    else:
        threshold = spec.threshold
        ranked = sorted(scores.scores.items(), key=lambda kv: (kv[1], kv[0]))
        pruned = [d for d, s in ranked if s < threshold]
        kept = [d for d, s in ranked if s >= threshold]
    total = len(scores.scores)
    manifest = PruneManifest(
        estimator=scores.estimator,
        threshold_used=threshold,
        kept=kept,
        pruned=pruned,
        fraction_requested=spec.fraction,
        fraction_achieved=len(pruned) / total,
    )
    kept_set = set(kept)

    def stream() -> Iterator[Passage]:
        for passage in corpus:
            if passage.docno not in scores.scores:
                raise MissingScoreError(f"no score for docno {passage.docno!r}")
            if passage.docno in kept_set:
                yield passage

    return stream(), manifest


def save_manifest(manifest: PruneManifest, path) -> None:
    """Write the manifest as strict JSON; a -inf threshold is stored as null."""
    payload = {
        "estimator": manifest.estimator,
        "threshold_used": None if math.isinf(manifest.threshold_used) else manifest.threshold_used,
        "fraction_requested": manifest.fraction_requested,
        "fraction_achieved": manifest.fraction_achieved,
        "kept": manifest.kept,
        "pruned": manifest.pruned,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, allow_nan=False)
        fh.write("\n")


def load_manifest(path) -> PruneManifest:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    threshold = payload["threshold_used"]
    return PruneManifest(
        estimator=payload["estimator"],
        threshold_used=-math.inf if threshold is None else threshold,
        kept=list(payload["kept"]),
        pruned=list(payload["pruned"]),
        fraction_requested=payload["fraction_requested"],
        fraction_achieved=payload["fraction_achieved"],
    )
