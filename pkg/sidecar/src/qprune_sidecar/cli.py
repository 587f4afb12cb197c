"""Command-line front end: score a corpus, train the supervised scorer, or
measure scorer latency. All outputs use the pruning toolkit's file formats."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from qprune_sidecar.scoring import (
    ScorerSpec,
    magnitude_score,
    measure_latency,
    ppl_score,
    read_corpus,
    write_latency_record,
    write_scores,
)
from qprune_sidecar.supervised import (
    SupervisedTrainConfig,
    read_triples,
    supervised_score,
    supervised_train,
)


def _spec(args, scorer: str) -> ScorerSpec:
    return ScorerSpec(
        scorer=scorer,
        model=args.model,
        batch_size=args.batch_size,
        device=args.device,
        seed=args.seed,
    )


def _emit(scores, record, args) -> int:
    write_scores(scores, args.out)
    write_latency_record(record, str(args.out) + ".latency.json")
    print(f"wrote {len(scores)} scores -> {args.out} "
          f"({record['ms_per_passage']:.3f} ms/passage)")
    return 0


def cmd_ppl(args) -> int:
    passages = read_corpus(args.corpus)
    scores, record = ppl_score(passages, _spec(args, "ppl"))
    return _emit(scores, record, args)


def cmd_magnitude(args) -> int:
    passages = read_corpus(args.corpus)
    scores, record = magnitude_score(passages, _spec(args, "magnitude"))
    return _emit(scores, record, args)


def cmd_supervised_train(args) -> int:
    config = SupervisedTrainConfig(
        steps=args.steps,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        device=args.device,
    )
    out = supervised_train(read_triples(args.triples), config, args.out)
    print(f"trained supervised scorer -> {out}")
    return 0


def cmd_supervised(args) -> int:
    passages = read_corpus(args.corpus)
    scores, record = supervised_score(passages, _spec(args, "supervised"))
    return _emit(scores, record, args)


def cmd_latency(args) -> int:
    passages = read_corpus(args.corpus)
    if args.sample:
        passages = passages[: args.sample]
    record = measure_latency(passages, _spec(args, args.scorer), samples=args.samples)
    Path(args.out).write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    print(f"{args.scorer}: best {record['passages_per_second']:.0f} p/s "
          f"({record['ms_per_passage']:.4f} ms/passage) -> {args.out}")
    return 0


def _common(sub, needs_corpus=True):
    if needs_corpus:
        sub.add_argument("--corpus", required=True, help="corpus jsonl")
    sub.add_argument("--model", default="tiny-causal",
                     help="'tiny-causal' or a saved artifact directory")
    sub.add_argument("--batch-size", type=int, default=16)
    sub.add_argument("--device", default="cpu")
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qprune-sidecar", description=__doc__)
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("ppl", help="negated causal-LM perplexity per passage")
    _common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ppl)

    p = subs.add_parser("magnitude", help="passage embedding norm per passage")
    _common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_magnitude)

    p = subs.add_parser("supervised-train", help="train the tiny supervised scorer on triples")
    p.add_argument("--triples", required=True)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=5e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--device", default="cpu")
    p.add_argument("--out", required=True, help="artifact directory")
    p.set_defaults(func=cmd_supervised_train)

    p = subs.add_parser("supervised", help="true-token probability per passage")
    _common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_supervised)

    p = subs.add_parser("latency", help="best-of-N scorer throughput on a sample")
    p.add_argument("--scorer", required=True, choices=("ppl", "magnitude", "supervised"))
    _common(p)
    p.add_argument("--sample", type=int, default=None, help="cap the sample size")
    p.add_argument("--samples", type=int, default=5, help="measurement repetitions")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_latency)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
