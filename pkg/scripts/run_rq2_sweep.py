#!/usr/bin/env python3
"""Desk-scale pruning sweep: BM25 effectiveness vs fraction pruned, with TOST
equivalence against the unpruned corpus, for several estimators.

Drives the `qprune sweep` subcommand end to end on a fresh synthetic corpus.

Usage: python scripts/run_rq2_sweep.py [--out results/rq2] [--seed 0]
"""

import argparse
import sys
import tempfile
from pathlib import Path

from qprune.cli import main as qprune


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/rq2")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--passages", type=int, default=10_000)
    parser.add_argument("--queries", type=int, default=500)
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        data = Path(tmp) / "data"
        model = Path(tmp) / "model.npz"
        steps = [
            ["synth", "--out", str(data), "--passages", str(args.passages),
             "--num-queries", str(args.queries), "--seed", str(args.seed)],
            ["train-quality", "--triples", str(data / "triples.tsv"), "--out", str(model)],
            ["sweep",
             "--corpus", str(data / "corpus.jsonl"),
             "--qrels", str(data / "qrels.txt"),
             "--queries", str(data / "queries.tsv"),
             "--estimators", f"linear:{model},itn,cdd,unigram-ppl,random",
             "--labels", str(data / "quality_labels.tsv"),
             "--metric", "rr@10",
             "--out", str(out_dir)],
            ["report", "--report", str(out_dir / "report.json")],
        ]
        for step in steps:
            code = qprune(step)
            if code != 0:
                print(f"step failed: {' '.join(step)}", file=sys.stderr)
                return code
    print(f"results in {out_dir} (report.csv, report.json, tradeoff.svg, roc_*.svg)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
