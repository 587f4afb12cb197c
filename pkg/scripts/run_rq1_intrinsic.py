#!/usr/bin/env python3
"""Desk-scale intrinsic experiment: how well does each estimator separate
planted low-quality passages from the rest?

Generates the default synthetic corpus, scores it with every estimator, and
reports per-estimator AUC against ground-truth quality labels, plus an ROC
chart.

Usage: python scripts/run_rq1_intrinsic.py [--out results/rq1] [--seed 0]
"""

import argparse
import json
import time
from pathlib import Path

from qprune.cli import _plot_roc
from qprune.corpus import collect_stats, tokenize_passage
from qprune.evaluation import auc, roc_curve
from qprune.quality import LinearTrainConfig, TrainingTriple, UnigramLM, score_corpus, train_linear
from qprune.synth import SynthConfig, generate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/rq1")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    data = generate(SynthConfig(seed=args.seed))
    tokenized = [tokenize_passage(p) for p in data.passages]
    lm = UnigramLM.from_stats(collect_stats(tokenized))
    model = train_linear(
        (TrainingTriple(q, p, n) for q, p, n in data.triples), LinearTrainConfig()
    )

    labels = data.quality_labels
    curves = {}
    rows = {}
    for name, kwargs in [
        ("linear", {"model": model}),
        ("itn", {}),
        ("cdd", {"lm": lm}),
        ("unigram-ppl", {"lm": lm}),
        ("random", {"seed": 42}),
    ]:
        start = time.perf_counter()
        scores = score_corpus(tokenized, name, **kwargs)
        elapsed_ms = (time.perf_counter() - start) * 1e3 / len(tokenized)
        value = auc(scores.scores, labels)
        curves[name] = (roc_curve(scores.scores, labels), value)
        rows[name] = {"auc": value, "ms_per_passage": elapsed_ms}
        print(f"{name:12s} AUC={value:.4f}  ({elapsed_ms:.4f} ms/passage)")

    (out_dir / "auc.json").write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    _plot_roc(curves, out_dir / "roc.svg")
    print(f"wrote {out_dir}/auc.json and {out_dir}/roc.svg")


if __name__ == "__main__":
    main()
