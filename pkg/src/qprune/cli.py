"""Command-line orchestration of the scoring / pruning / retrieval pipeline."""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

from qprune import __version__
from qprune.corpus import load_corpus, tokenize_passage, collect_stats, write_corpus
from qprune.errors import QpruneError
from qprune.evaluation import (
    auc,
    break_even,
    format_break_even,
    intrinsic_labels,
    load_qrels,
    ndcg_at_k,
    roc_curve,
    rr_at_k,
    tost_equivalence,
    write_report,
)
from qprune.index import (
    Bm25Params,
    bm25_search,
    build_index,
    index_stats,
    load_index,
    load_queries,
    read_run,
    save_index,
    timed_search,
    write_run,
)
from qprune.pruning import PruneSpec, load_manifest, prune, save_manifest, select_threshold
from qprune.quality import (
    CddConfig,
    LinearQualityModel,
    LinearTrainConfig,
    QualityScoreSet,
    UnigramLM,
    load_external_scores,
    load_triples,
    score_corpus,
    train_linear,
    write_scores,
)
from qprune.synth import SynthConfig, generate, load_quality_labels, write_synth

_DEFAULT_FRACTIONS = [round(0.05 * i, 2) for i in range(15)]  # 0 .. 0.7


def _write_provenance(out_path, command: str, config: dict, inputs: dict) -> None:
    record = {
        "command": command,
        "config": {
            k: (str(v) if isinstance(v, Path) else v)
            for k, v in config.items()
            if k not in ("func", "subcommand") and not callable(v)
        },
        "inputs": {k: str(v) for k, v in inputs.items() if v is not None},
        "versions": {"qprune": __version__, "python": platform.python_version()},
    }
    path = Path(str(out_path) + ".prov.json")
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_tokenized(corpus_path, fmt=None):
    return [tokenize_passage(p) for p in load_corpus(corpus_path, fmt)]


def _resolve_scores(estimator: str, tokenized, args) -> QualityScoreSet:
    """Estimator spec -> scores; spec is a name, linear:<model>, or external:<file>."""
    if estimator.startswith("external:"):
        return load_external_scores(estimator.split(":", 1)[1])
    if estimator.startswith("linear:"):
        model = LinearQualityModel.load(estimator.split(":", 1)[1])
        scores = score_corpus(tokenized, "linear", model=model)
        return QualityScoreSet(estimator="linear", scores=scores.scores)
    if estimator in ("cdd", "unigram-ppl"):
        lm = UnigramLM.from_stats(collect_stats(tokenized))
        cfg = CddConfig(smoothing=args.smoothing) if estimator == "cdd" else None
        return score_corpus(tokenized, estimator, lm=lm, cdd_config=cfg)
    if estimator in ("itn", "random"):
        return score_corpus(tokenized, estimator, seed=args.seed)
    raise ValueError(f"unknown estimator {estimator!r}")


def _metric_fn(name: str):
    if name.startswith("rr@"):
        return lambda runs, qrels: rr_at_k(runs, qrels, int(name.split("@")[1]))
    if name.startswith("ndcg@"):
        return lambda runs, qrels: ndcg_at_k(runs, qrels, int(name.split("@")[1]))
    raise ValueError(f"unknown metric {name!r} (use rr@K or ndcg@K)")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args) -> int:
    config = SynthConfig(
        num_passages=args.passages,
        vocab_size=args.vocab,
        low_quality_fraction=args.low_quality_fraction,
        num_queries=args.num_queries,
        passage_len_range=(args.len_min, args.len_max),
        seed=args.seed,
    )
    data = generate(config)
    paths = write_synth(data, args.out)
    _write_provenance(Path(args.out) / "synth", "synth", vars(args), {})
    print(f"wrote {len(data.passages)} passages, {len(data.queries)} queries to {args.out}")
    return 0


def cmd_score(args) -> int:
    tokenized = _load_tokenized(args.corpus, args.format)
    start = time.perf_counter()
    scores = _resolve_scores(args.estimator, tokenized, args)
    elapsed = time.perf_counter() - start
    write_scores(scores, args.out)
    per_passage_ms = elapsed * 1e3 / max(len(tokenized), 1)
    latency = {
        "estimator": args.estimator,
        "ms_per_passage": per_passage_ms,
        "passages_per_second": (len(tokenized) / elapsed) if elapsed > 0 else float(len(tokenized)),
    }
    Path(str(args.out) + ".latency.json").write_text(json.dumps(latency) + "\n", encoding="utf-8")
    _write_provenance(args.out, "score", vars(args),
                      {"corpus": args.corpus})
    print(f"scored {len(tokenized)} passages in {elapsed:.3f}s "
          f"({latency['passages_per_second']:.0f} passages/s, {per_passage_ms:.4f} ms/passage)")
    return 0


def cmd_train_quality(args) -> int:
    config = LinearTrainConfig(
        feature_dim=args.feature_dim,
        digest_seed=args.digest_seed,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        l2=args.l2,
        rng_seed=args.seed,
    )
    model = train_linear(load_triples(args.triples), config)
    model.save(args.out)
    _write_provenance(args.out, "train-quality", vars(args),
                      {"triples": args.triples})
    print(f"trained linear model (dim={config.feature_dim}) -> {args.out}")
    return 0


def cmd_prune(args) -> int:
    scores = load_external_scores(args.scores)
    spec = PruneSpec(fraction=args.fraction, threshold=args.threshold)
    passages = load_corpus(args.corpus, args.format)
    stream, manifest = prune(passages, scores, spec)
    if args.corpus_out:
        write_corpus(stream, args.corpus_out, fmt="jsonl")
    else:
        for _ in stream:  # drain to enforce the missing-score check
            pass
    save_manifest(manifest, args.out)
    _write_provenance(args.out, "prune", vars(args),
                      {"corpus": args.corpus, "scores": args.scores})
    print(f"pruned {len(manifest.pruned)}/{len(manifest.pruned) + len(manifest.kept)} passages "
          f"(achieved fraction {manifest.fraction_achieved:.4f})")
    return 0


def cmd_index(args) -> int:
    tokenized = _load_tokenized(args.corpus, args.format)
    if args.manifest:
        kept = set(load_manifest(args.manifest).kept)
        tokenized = [t for t in tokenized if t.docno in kept]
    index = build_index(tokenized)
    save_index(index, args.out)
    stats = index_stats(index)
    Path(str(args.out) + ".stats.json").write_text(
        json.dumps({
            "num_docs": stats.num_docs,
            "num_postings": stats.num_postings,
            "total_terms": stats.total_terms,
            "estimated_bytes": stats.estimated_bytes,
        }) + "\n",
        encoding="utf-8",
    )
    _write_provenance(args.out, "index", vars(args),
                      {"corpus": args.corpus, "manifest": args.manifest})
    print(f"indexed {stats.num_docs} docs, {stats.num_postings} postings, "
          f"~{stats.estimated_bytes} bytes")
    return 0


def cmd_search(args) -> int:
    index = load_index(args.index)
    queries = load_queries(args.queries)
    params = Bm25Params(k1=args.k1, b=args.b)
    if args.repetitions > 0:
        stats, results = timed_search(index, queries, args.topk, params, args.repetitions)
        print(f"latency over {args.repetitions} repetitions: "
              f"mean {stats.mean_ms:.3f} ms, median {stats.median_ms:.3f} ms")
    else:
        results = [bm25_search(index, text, args.topk, params, qid=qid) for qid, text in queries]
    write_run(results, args.out, tag=args.tag)
    _write_provenance(args.out, "search", vars(args),
                      {"index": args.index, "queries": args.queries})
    print(f"wrote run for {len(queries)} queries -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    runs = read_run(args.run)
    qrels = load_qrels(args.qrels)
    result = _metric_fn(args.metric)(runs, qrels)
    payload = {
        "metric": result.metric,
        "mean": result.mean,
        "per_query": result.per_query,
        "flagged": result.flagged,
    }
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    _write_provenance(args.out, "eval", vars(args),
                      {"run": args.run, "qrels": args.qrels})
    print(f"{result.metric} mean = {result.mean:.4f} over {len(result.per_query)} queries")
    return 0


def cmd_tost(args) -> int:
    qrels = load_qrels(args.qrels)
    metric = _metric_fn(args.metric)
    baseline = metric(read_run(args.baseline), qrels)
    candidate = metric(read_run(args.run), qrels)
    result = tost_equivalence(baseline.per_query, candidate.per_query,
                              relative_margin=args.margin, alpha=args.alpha)
    payload = {
        "metric": args.metric,
        "margin_delta": result.margin_delta,
        "t_statistic": None if not _finite(result.t_statistic) else result.t_statistic,
        "p_value": result.p_value,
        "equivalent": result.equivalent,
        "n_queries": result.n_queries,
        "mean_unpruned": result.mean_unpruned,
        "mean_pruned": result.mean_pruned,
        "alpha": result.alpha,
    }
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    _write_provenance(args.out, "tost", vars(args),
                      {"run": args.run, "baseline": args.baseline, "qrels": args.qrels})
    verdict = "equivalent" if result.equivalent else "not equivalent"
    print(f"{verdict}: p={result.p_value:.6g} (alpha={result.alpha}, delta={result.margin_delta:.6g})")
    return 0


def _finite(x: float) -> bool:
    import math

    return math.isfinite(x)


def _labels_for(args, docnos) -> dict[str, bool]:
    if args.labels:
        return load_quality_labels(args.labels)
    qrels = load_qrels(args.qrels)
    exclude = set()
    if args.exclude:
        exclude = {line.strip() for line in Path(args.exclude).read_text(encoding="utf-8").splitlines() if line.strip()}
    return intrinsic_labels(qrels, exclude, docnos)


def cmd_roc(args) -> int:
    scores = load_external_scores(args.scores)
    labels = _labels_for(args, scores.scores.keys())
    points = roc_curve(scores.scores, labels)
    value = auc(scores.scores, labels)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("fpr,tpr\n")
        for fpr, tpr in points:
            fh.write(f"{fpr!r},{tpr!r}\n")
    Path(str(args.out) + ".auc.json").write_text(
        json.dumps({"estimator": scores.estimator, "auc": value}) + "\n", encoding="utf-8")
    if args.plot:
        _plot_roc({scores.estimator: (points, value)}, args.plot)
    _write_provenance(args.out, "roc", vars(args),
                      {"scores": args.scores, "qrels": args.qrels, "labels": args.labels})
    print(f"AUC = {value:.4f} over {len(labels)} labeled passages")
    return 0


def cmd_breakeven(args) -> int:
    ratio = break_even(args.quality_latency, args.encoding_latency)
    formatted = format_break_even(ratio)
    if args.out:
        Path(args.out).write_text(
            json.dumps({
                "quality_latency_ms": args.quality_latency,
                "encoding_latency_ms": args.encoding_latency,
                "break_even_fraction": ratio,
                "break_even_percent": formatted,
            }) + "\n",
            encoding="utf-8",
        )
        _write_provenance(args.out, "breakeven", vars(args), {})
    print(f"break-even: {formatted} (fraction {ratio:.4f})")
    return 0


def cmd_sweep(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tokenized = _load_tokenized(args.corpus, args.format)
    by_docno = {t.docno: t for t in tokenized}
    qrels = load_qrels(args.qrels)
    queries = load_queries(args.queries)
    params = Bm25Params(k1=args.k1, b=args.b)
    metric = _metric_fn(args.metric)
    fractions = args.fractions or _DEFAULT_FRACTIONS
    estimators = [e.strip() for e in args.estimators.split(",") if e.strip()]

    def run_cell(kept_docnos):
        index = build_index(t for t in tokenized if t.docno in kept_docnos)
        runs = {qid: bm25_search(index, text, args.topk, params, qid=qid) for qid, text in queries}
        return metric(runs, qrels)

    rows = []
    roc_data = {}
    labels = None
    try:
        labels = _labels_for(args, by_docno.keys())
    except QpruneError as exc:
        print(f"warning: intrinsic labels unavailable ({exc}); skipping ROC charts", file=sys.stderr)
    for estimator in estimators:
        try:
            scores = _resolve_scores(estimator, tokenized, args)
        except (QpruneError, OSError, ValueError) as exc:
            print(f"warning: estimator {estimator!r} failed: {exc}", file=sys.stderr)
            rows.append({"estimator": estimator, "fraction": None, "metric": args.metric,
                         "mean": None, "p_value": None, "equivalent": None, "error": str(exc)})
            continue
        if labels is not None:
            try:
                roc_data[estimator] = (roc_curve(scores.scores, labels), auc(scores.scores, labels))
            except QpruneError as exc:
                print(f"warning: ROC for {estimator!r} failed: {exc}", file=sys.stderr)
        baseline = None
        for fraction in fractions:
            try:
                _, _, kept = select_threshold(scores, fraction)
                result = run_cell(set(kept))
                if baseline is None:
                    baseline = result
                tost = tost_equivalence(baseline.per_query, result.per_query,
                                        relative_margin=args.margin, alpha=args.alpha)
                rows.append({
                    "estimator": estimator,
                    "fraction": fraction,
                    "metric": args.metric,
                    "mean": result.mean,
                    "p_value": tost.p_value,
                    "equivalent": tost.equivalent,
                })
            except (QpruneError, ValueError) as exc:
                print(f"warning: cell ({estimator}, {fraction}) failed: {exc}", file=sys.stderr)
                rows.append({"estimator": estimator, "fraction": fraction, "metric": args.metric,
                             "mean": None, "p_value": None, "equivalent": None, "error": str(exc)})
    write_report(rows, out_dir / "report.csv", out_dir / "report.json")
    _plot_tradeoff(rows, args.metric, out_dir / "tradeoff.svg")
    for estimator, (points, value) in roc_data.items():
        safe = estimator.replace(":", "_").replace("/", "_")
        _plot_roc({estimator: (points, value)}, out_dir / f"roc_{safe}.svg")
    _write_provenance(out_dir / "report", "sweep", vars(args),
                      {"corpus": args.corpus, "qrels": args.qrels, "queries": args.queries})
    print(f"sweep complete: {len(rows)} cells -> {out_dir}")
    return 0


def cmd_report(args) -> int:
    rows = json.loads(Path(args.report).read_text(encoding="utf-8"))
    header = f"{'estimator':<18} {'fraction':>8} {'metric':<10} {'mean':>8} {'p_value':>10} {'equiv':>6}"
    print(header)
    print("-" * len(header))
    for row in rows:
        mean = "-" if row.get("mean") is None else f"{row['mean']:.4f}"
        p = "-" if row.get("p_value") is None else f"{row['p_value']:.4g}"
        eq = {True: "yes", False: "no", None: "-"}[row.get("equivalent")]
        frac = "-" if row.get("fraction") is None else f"{row['fraction']:.2f}"
        print(f"{row['estimator']:<18} {frac:>8} {row['metric']:<10} {mean:>8} {p:>10} {eq:>6}")
    return 0


# ---------------------------------------------------------------------------
# Plot emission (static vector charts)


def _mpl():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "qprune"
    import matplotlib.pyplot as plt

    return plt


def _plot_tradeoff(rows, metric_name: str, path) -> None:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    by_estimator: dict[str, list] = {}
    for row in rows:
        if row.get("mean") is None or row.get("fraction") is None:
            continue
        by_estimator.setdefault(row["estimator"], []).append(row)
    for estimator, cells in by_estimator.items():
        cells.sort(key=lambda r: r["fraction"])
        xs = [c["fraction"] for c in cells]
        ys = [c["mean"] for c in cells]
        (line,) = ax.plot(xs, ys, marker=".", label=estimator)
        eq_x = [c["fraction"] for c in cells if c["equivalent"]]
        eq_y = [c["mean"] for c in cells if c["equivalent"]]
        ax.scatter(eq_x, eq_y, s=70, facecolors="none", edgecolors=line.get_color(), zorder=3)
    ax.set_xlabel("fraction of corpus pruned")
    ax.set_ylabel(f"mean {metric_name}")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _plot_roc(curves: dict, path) -> None:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(5, 5))
    for estimator, (points, value) in curves.items():
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.plot(xs, ys, label=f"{estimator} (AUC {value:.3f})")
    ax.plot([0, 1], [0, 1], linestyle="--", color="grey", linewidth=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


# ---------------------------------------------------------------------------
# Parser


def _add_common_bm25(sub):
    sub.add_argument("--k1", type=float, default=1.2)
    sub.add_argument("--b", type=float, default=0.75)
    sub.add_argument("--topk", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qprune", description=__doc__)
    parser.add_argument("--version", action="version", version=f"qprune {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("synth", help="generate a synthetic corpus with planted quality structure")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--passages", type=int, default=10_000)
    p.add_argument("--vocab", type=int, default=6_000)
    p.add_argument("--low-quality-fraction", type=float, default=0.2)
    p.add_argument("--num-queries", type=int, default=500)
    p.add_argument("--len-min", type=int, default=30)
    p.add_argument("--len-max", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("score", help="compute quality scores for a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default=None)
    p.add_argument("--estimator", required=True,
                   help="itn|cdd|unigram-ppl|random|linear:<model>|external:<scores>")
    p.add_argument("--lambda", dest="smoothing", type=float, default=0.99,
                   help="CDD smoothing parameter")
    p.add_argument("--seed", type=int, default=0, help="seed for the random estimator")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = subs.add_parser("train-quality", help="train the supervised linear quality model")
    p.add_argument("--triples", required=True)
    p.add_argument("--feature-dim", type=int, default=2 ** 18)
    p.add_argument("--digest-seed", type=int, default=0)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0, help="epoch reshuffle seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_quality)

    p = subs.add_parser("prune", help="prune a corpus by quality scores")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default=None)
    p.add_argument("--scores", required=True)
    p.add_argument("--fraction", type=float, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--corpus-out", default=None, help="write the kept passages here (jsonl)")
    p.add_argument("--out", required=True, help="manifest path (json)")
    p.set_defaults(func=cmd_prune)

    p = subs.add_parser("index", help="build a BM25 inverted index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default=None)
    p.add_argument("--manifest", default=None, help="prune manifest; only kept docnos are indexed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = subs.add_parser("search", help="run BM25 queries against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    _add_common_bm25(p)
    p.add_argument("--repetitions", type=int, default=0, help="time the search with N repetitions")
    p.add_argument("--tag", default="qprune")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_search)

    p = subs.add_parser("eval", help="evaluate a run file against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--metric", default="rr@10")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("tost", help="TOST equivalence of a run against a baseline run")
    p.add_argument("--run", required=True, help="candidate (pruned) run")
    p.add_argument("--baseline", required=True, help="unpruned run")
    p.add_argument("--qrels", required=True)
    p.add_argument("--metric", default="rr@10")
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tost)

    p = subs.add_parser("roc", help="ROC curve and AUC for a score file")
    p.add_argument("--scores", required=True)
    p.add_argument("--qrels", default=None, help="derive labels from relevance judgments")
    p.add_argument("--labels", default=None, help="ground-truth quality labels tsv")
    p.add_argument("--exclude", default=None, help="file of docnos to exclude from labeling")
    p.add_argument("--plot", default=None, help="write an SVG chart here")
    p.add_argument("--out", required=True, help="CSV of (fpr, tpr) points")
    p.set_defaults(func=cmd_roc)

    p = subs.add_parser("breakeven", help="break-even prune fraction from latencies")
    p.add_argument("--quality-latency", type=float, required=True, help="ms per passage")
    p.add_argument("--encoding-latency", type=float, required=True, help="ms per passage")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_breakeven)

    p = subs.add_parser("sweep", help="estimator x fraction trade-off sweep with plots")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default=None)
    p.add_argument("--qrels", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--estimators", required=True, help="comma-separated estimator specs")
    p.add_argument("--fractions", type=lambda s: [float(x) for x in s.split(",")], default=None)
    p.add_argument("--metric", default="rr@10")
    p.add_argument("--lambda", dest="smoothing", type=float, default=0.99)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--labels", default=None, help="ground-truth labels for ROC charts")
    p.add_argument("--exclude", default=None)
    _add_common_bm25(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("report", help="pretty-print a sweep report")
    p.add_argument("--report", required=True, help="report.json from sweep")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QpruneError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
