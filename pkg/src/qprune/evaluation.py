"""Intrinsic (ROC/AUC) and extrinsic (RR@10, nDCG@10) evaluation, TOST
equivalence testing, break-even analysis, and index-size linearity."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from scipy.special import stdtr

from qprune.errors import (
    CorpusFormatError,
    DegenerateLabelsError,
    InsufficientDataError,
    PairingError,
)
from qprune.index import RankedList

Qrels = dict[str, dict[str, int]]


def load_qrels(path) -> Qrels:
    """Read standard 4-column qrels: qid 0 docno grade, whitespace-separated."""
    path = Path(path)
    qrels: Qrels = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise CorpusFormatError(path, line_no, f"expected 4 qrels columns, got {len(parts)}")
            qid, _, docno, grade = parts
            try:
                grade = int(grade)
            except ValueError as exc:
                raise CorpusFormatError(path, line_no, f"non-integer grade {grade!r}") from exc
            if grade < 0:
                raise CorpusFormatError(path, line_no, f"negative grade {grade}")
            qrels.setdefault(qid, {})[docno] = grade
    if not qrels:
        raise CorpusFormatError(path, 0, "qrels file holds no judgments")
    return qrels


# ---------------------------------------------------------------------------
# Intrinsic evaluation: ROC / AUC over quality scores


def _ordered_pairs(scores: Mapping[str, float], labels: Mapping[str, bool]):
    pairs = []
    n_pos = 0
    for docno, label in labels.items():
        if docno not in scores:
            raise KeyError(f"labeled docno {docno!r} has no score")
        pairs.append((scores[docno], bool(label)))
        n_pos += bool(label)
    if n_pos == 0 or n_pos == len(pairs):
        raise DegenerateLabelsError("need at least one positive and one negative label")
    return pairs, n_pos


def auc(scores: Mapping[str, float], labels: Mapping[str, bool]) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Equals P(score(pos) > score(neg)) + 0.5 * P(tie), using average ranks
    within tie groups.
    """
    pairs, n_pos = _ordered_pairs(scores, labels)
    n_neg = len(pairs) - n_pos
    pairs.sort(key=lambda sl: sl[0])
    rank_sum_pos = 0.0
    i = 0
    n = len(pairs)
    while i < n:
        j = i
        while j < n and pairs[j][0] == pairs[i][0]:
            j += 1
        avg_rank = (i + 1 + j) / 2.0  # ranks are 1-based: mean of i+1 .. j
        rank_sum_pos += avg_rank * sum(1 for idx in range(i, j) if pairs[idx][1])
        i = j
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_curve(scores: Mapping[str, float], labels: Mapping[str, bool]) -> list[tuple[float, float]]:
    """(FPR, TPR) points, one per distinct threshold descending, from (0,0) to (1,1).

    The trapezoidal area under the returned points equals auc().
    """
    pairs, n_pos = _ordered_pairs(scores, labels)
    n_neg = len(pairs) - n_pos
    pairs.sort(key=lambda sl: -sl[0])
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = len(pairs)
    while i < n:
        j = i
        while j < n and pairs[j][0] == pairs[i][0]:
            j += 1
        tp += sum(1 for idx in range(i, j) if pairs[idx][1])
        fp += (j - i) - sum(1 for idx in range(i, j) if pairs[idx][1])
        points.append((fp / n_neg, tp / n_pos))
        i = j
    return points


def trapezoid_area(points: Sequence[tuple[float, float]]) -> float:
    area = 0.0
    for (x1, y1), (x2, y2) in zip(points, points[1:]):
        area += (x2 - x1) * (y1 + y2) / 2.0
    return area


def intrinsic_labels(
    qrels: Qrels, exclude: set[str], corpus_docnos: Iterable[str]
) -> dict[str, bool]:
    """Quality labels from relevance: positive iff relevant to any query.

    Excluded docnos are removed from the label set entirely (neither class);
    every other corpus docno is labeled, non-relevant ones negative.
    """
    relevant = {
        docno
        for judged in qrels.values()
        for docno, grade in judged.items()
        if grade >= 1
    }
    return {d: d in relevant for d in corpus_docnos if d not in exclude}


# ---------------------------------------------------------------------------
# Extrinsic evaluation: top-k precision-oriented metrics


@dataclass
class MetricResult:
    """Per-query values plus their arithmetic mean.

    flagged lists qids that were evaluated but had no (positive) judgments;
    they contribute 0 to the mean.
    """

    metric: str
    per_query: dict[str, float]
    mean: float
    flagged: list[str]


def _query_universe(runs: Mapping[str, RankedList], qrels: Qrels) -> list[str]:
    return sorted(set(runs) | set(qrels))


def rr_at_k(runs: Mapping[str, RankedList], qrels: Qrels, k: int = 10) -> MetricResult:
    """Reciprocal rank of the first docno with grade >= 1 in the top k, else 0."""
    per_query: dict[str, float] = {}
    flagged: list[str] = []
    for qid in _query_universe(runs, qrels):
        judged = qrels.get(qid, {})
        if not any(g >= 1 for g in judged.values()):
            flagged.append(qid)
            per_query[qid] = 0.0
            continue
        value = 0.0
        run = runs.get(qid)
        if run is not None:
            for rank, (docno, _) in enumerate(run.items[:k], 1):
                if judged.get(docno, 0) >= 1:
                    value = 1.0 / rank
                    break
        per_query[qid] = value
    mean = math.fsum(per_query.values()) / len(per_query) if per_query else 0.0
    return MetricResult(metric=f"rr@{k}", per_query=per_query, mean=mean, flagged=flagged)


def ndcg_at_k(runs: Mapping[str, RankedList], qrels: Qrels, k: int = 10) -> MetricResult:
    """nDCG with exponential gain (2^grade - 1) and log2(rank + 1) discount."""
    per_query: dict[str, float] = {}
    flagged: list[str] = []
    for qid in _query_universe(runs, qrels):
        judged = qrels.get(qid, {})
        ideal_gains = sorted((g for g in judged.values() if g >= 1), reverse=True)[:k]
        if not ideal_gains:
            flagged.append(qid)
            per_query[qid] = 0.0
            continue
        idcg = sum((2 ** g - 1) / math.log2(i + 1) for i, g in enumerate(ideal_gains, 1))
        dcg = 0.0
        run = runs.get(qid)
        if run is not None:
            for rank, (docno, _) in enumerate(run.items[:k], 1):
                grade = judged.get(docno, 0)
                if grade > 0:
                    dcg += (2 ** grade - 1) / math.log2(rank + 1)
        per_query[qid] = dcg / idcg
    mean = math.fsum(per_query.values()) / len(per_query) if per_query else 0.0
    return MetricResult(metric=f"ndcg@{k}", per_query=per_query, mean=mean, flagged=flagged)


# ---------------------------------------------------------------------------
# TOST equivalence (lower-bound side only, per an arbitrarily large upper bound)


@dataclass
class TostResult:
    margin_delta: float
    t_statistic: float
    p_value: float
    equivalent: bool
    n_queries: int
    mean_unpruned: float
    mean_pruned: float
    alpha: float


def tost_equivalence(
    unpruned: Mapping[str, float],
    pruned: Mapping[str, float],
    relative_margin: float = 0.05,
    alpha: float = 0.05,
) -> TostResult:
    """Paired one-sided test that the pruned system is not worse than the
    unpruned one by more than relative_margin of the unpruned mean.

    With delta = relative_margin * mean(unpruned) and d_i = pruned_i -
    unpruned_i + delta, H0: mean(d) <= 0 is tested with a one-sample t
    statistic; equivalence is declared when p < alpha. Zero-variance
    conventions: all d_i equal and positive gives p = 0, all equal and <= 0
    gives p = 1.
    """
    if set(unpruned) != set(pruned):
        raise PairingError("unpruned and pruned vectors cover different query ids")
    qids = sorted(unpruned)
    n = len(qids)
    if n < 2:
        raise InsufficientDataError(f"need >= 2 paired queries, got {n}")
    mean_unpruned = math.fsum(unpruned[q] for q in qids) / n
    mean_pruned = math.fsum(pruned[q] for q in qids) / n
    delta = relative_margin * mean_unpruned
    d = [pruned[q] - unpruned[q] + delta for q in qids]
    mean_d = math.fsum(d) / n
    var = math.fsum((x - mean_d) ** 2 for x in d) / (n - 1)
    if var == 0.0:
        t_stat = math.inf if mean_d > 0 else (-math.inf if mean_d < 0 else 0.0)
        p_value = 0.0 if mean_d > 0 else 1.0
    else:
        t_stat = mean_d / math.sqrt(var / n)
        # survival function of Student's t with n-1 df, via the regularized
        # incomplete beta function (scipy.special.stdtr)
        p_value = float(stdtr(n - 1, -t_stat))
    return TostResult(
        margin_delta=delta,
        t_statistic=t_stat,
        p_value=p_value,
        equivalent=p_value < alpha,
        n_queries=n,
        mean_unpruned=mean_unpruned,
        mean_pruned=mean_pruned,
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# Efficiency analyses


def break_even(quality_latency_ms_per_passage: float, encoding_latency_ms_per_passage: float) -> float:
    """Fraction of a corpus whose pruning pays for quality estimation."""
    if quality_latency_ms_per_passage <= 0.0 or encoding_latency_ms_per_passage <= 0.0:
        raise ValueError("latencies must be positive")
    return quality_latency_ms_per_passage / encoding_latency_ms_per_passage


def format_break_even(ratio: float) -> str:
    """Percentage string with the reporting cap: ratios above 1 print as >100%."""
    if ratio > 1.0:
        return ">100%"
    return f"{round(ratio * 100)}%"


def size_linearity(
    stats_per_fraction: Iterable[tuple[float, int]], max_fraction: float = 0.7
) -> float:
    """Max relative deviation of postings counts from the proportional line.

    deviation(f) = |postings(f) - (1-f) * postings(0)| / ((1-f) * postings(0)),
    maximized over fractions <= max_fraction. The fraction-0 entry must be
    present.
    """
    by_fraction = dict(stats_per_fraction)
    if 0.0 not in by_fraction:
        raise ValueError("stats must include the fraction-0 (unpruned) entry")
    base = by_fraction[0.0]
    worst = 0.0
    for fraction, postings in by_fraction.items():
        if fraction > max_fraction:
            continue
        expected = (1.0 - fraction) * base
        worst = max(worst, abs(postings - expected) / expected)
    return worst


# ---------------------------------------------------------------------------
# Report output


def write_report(rows: Sequence[dict], csv_path, json_path) -> None:
    """CSV with header estimator,fraction,metric,mean,p_value,equivalent plus
    a JSON mirror carrying the same rows (and any extra per-row fields)."""
    columns = ["estimator", "fraction", "metric", "mean", "p_value", "equivalent"]
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(col, "") for col in columns])
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(list(rows), fh, indent=2)
        fh.write("\n")
