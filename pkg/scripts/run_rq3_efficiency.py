#!/usr/bin/env python3
"""Desk-scale efficiency experiment: estimator throughput, break-even points
against a hypothetical encoder, index-size linearity, and retrieval latency
on pruned indexes.

Usage: python scripts/run_rq3_efficiency.py [--out results/rq3]
"""

import argparse
import json
import time
from pathlib import Path

from qprune.corpus import collect_stats, tokenize_passage
from qprune.evaluation import break_even, format_break_even, size_linearity
from qprune.index import Bm25Params, build_index, index_stats, timed_search
from qprune.pruning import select_threshold
from qprune.quality import LinearTrainConfig, TrainingTriple, UnigramLM, score_corpus, train_linear
from qprune.synth import SynthConfig, generate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/rq3")
    parser.add_argument("--encoding-latency", type=float, default=0.94,
                        help="encoder cost in ms/passage the pruner must pay for")
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    data = generate(SynthConfig(seed=1))
    tokenized = [tokenize_passage(p) for p in data.passages]
    lm = UnigramLM.from_stats(collect_stats(tokenized))
    model = train_linear(
        (TrainingTriple(q, p, n) for q, p, n in data.triples), LinearTrainConfig()
    )

    throughput = {}
    for name, kwargs in [
        ("itn", {}), ("cdd", {"lm": lm}), ("unigram-ppl", {"lm": lm}),
        ("random", {"seed": 42}), ("linear", {"model": model}),
    ]:
        best = 0.0
        for _ in range(5):  # best-of-5 sampling
            start = time.perf_counter()
            scores = score_corpus(tokenized, name, **kwargs)
            best = max(best, len(tokenized) / (time.perf_counter() - start))
        ms = 1e3 / best
        throughput[name] = {
            "passages_per_second": best,
            "ms_per_passage": ms,
            "break_even_fraction": break_even(ms, args.encoding_latency),
            "break_even": format_break_even(break_even(ms, args.encoding_latency)),
        }
        print(f"{name:12s} {best:9.0f} p/s  {ms:.4f} ms/p  break-even {throughput[name]['break_even']}")

    linear_scores = score_corpus(tokenized, "linear", model=model)
    pairs = []
    latencies = {}
    for i in range(15):
        fraction = round(0.05 * i, 2)
        _, _, kept = select_threshold(linear_scores, fraction)
        kept = set(kept)
        index = build_index(t for t in tokenized if t.docno in kept)
        pairs.append((fraction, index_stats(index).num_postings))
        if fraction in (0.0, 0.25, 0.5, 0.7):
            stats, _ = timed_search(index, data.queries[:100], 10, Bm25Params(), repetitions=2)
            latencies[str(fraction)] = stats.median_ms
    deviation = size_linearity(pairs)
    print(f"max size deviation from linear: {deviation:.4f}")
    print("median search latency by fraction:", {k: round(v, 3) for k, v in latencies.items()})

    (out_dir / "efficiency.json").write_text(json.dumps({
        "throughput": throughput,
        "postings_by_fraction": pairs,
        "size_linearity_max_deviation": deviation,
        "median_search_latency_ms": latencies,
    }, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out_dir}/efficiency.json")


if __name__ == "__main__":
    main()
