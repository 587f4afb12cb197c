"""Passage quality estimation, static corpus pruning, BM25 retrieval, and
effectiveness/efficiency trade-off measurement."""

__version__ = "0.1.0"

from qprune.corpus import (
    CollectionStats,
    Passage,
    TokenizedPassage,
    collect_stats,
    load_corpus,
    tokenize,
    tokenize_passage,
    write_corpus,
)
from qprune.evaluation import (
    MetricResult,
    TostResult,
    auc,
    break_even,
    format_break_even,
    intrinsic_labels,
    load_qrels,
    ndcg_at_k,
    roc_curve,
    rr_at_k,
    size_linearity,
    tost_equivalence,
)
from qprune.index import (
    Bm25Params,
    InvertedIndex,
    RankedList,
    bm25_search,
    build_index,
    index_stats,
    timed_search,
)
from qprune.pruning import PruneManifest, PruneSpec, prune, select_threshold
from qprune.quality import (
    MIN_SCORE,
    CddConfig,
    LinearQualityModel,
    LinearTrainConfig,
    QualityScoreSet,
    TrainingTriple,
    UnigramLM,
    cdd,
    itn,
    load_external_scores,
    random_quality,
    score_corpus,
    score_linear,
    train_linear,
    unigram_perplexity,
    write_scores,
)
from qprune.synth import SynthConfig, SynthData, generate, write_synth
