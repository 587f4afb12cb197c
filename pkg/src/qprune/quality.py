"""Query-independent passage quality estimators.

All scores are oriented higher-is-better. Estimators that measure a
distance or an inverse likelihood (CDD, perplexity) are negated by the
corpus-scoring layer before they become quality scores.
"""

from __future__ import annotations

import hashlib
import math
import sys
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from qprune.corpus import CollectionStats, TokenizedPassage, tokenize
from qprune.errors import (
    DivergenceError,
    DuplicateDocnoError,
    CorpusFormatError,
    MissingTermError,
    UndefinedScoreError,
)

# Minimum representable score: assigned to passages no estimator can judge
# (empty ones), so they sort first under any pruning threshold.
MIN_SCORE = -sys.float_info.max

ESTIMATORS = ("itn", "cdd", "unigram-ppl", "random", "linear")


@dataclass
class QualityScoreSet:
    """Named estimator plus one finite score per passage."""

    estimator: str
    scores: dict[str, float]

    def __post_init__(self):
        for docno, value in self.scores.items():
            if not math.isfinite(value):
                raise ValueError(f"non-finite score {value!r} for docno {docno!r}")


@dataclass(frozen=True)
class CddConfig:
    # Jelinek-Mercer smoothing weight on the passage model; 1.0 would make
    # absent-term contributions divide by zero.
    smoothing: float = 0.99

    def __post_init__(self):
        if not 0.0 <= self.smoothing < 1.0:
            raise ValueError(f"smoothing must lie in [0, 1), got {self.smoothing}")


@dataclass(frozen=True)
class UnigramLM:
    """Maximum-likelihood unigram model of the collection."""

    prob: dict[str, float]
    vocabulary: frozenset[str]

    def __post_init__(self):
        total = math.fsum(self.prob.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")
        if any(p <= 0.0 for p in self.prob.values()):
            raise ValueError("all vocabulary probabilities must be positive")

    @classmethod
    def from_stats(cls, stats: CollectionStats) -> "UnigramLM":
        prob = {t: c / stats.total_terms for t, c in stats.term_freq.items()}
        return cls(prob=prob, vocabulary=frozenset(prob))


def itn(p: TokenizedPassage) -> float:
    """Information-to-noise ratio: distinct terms over total terms, in (0, 1]."""
    if not p.terms:
        raise UndefinedScoreError(f"ITN undefined for empty passage {p.docno!r}")
    return len(set(p.terms)) / len(p.terms)


def cdd(p: TokenizedPassage, lm: UnigramLM, cfg: CddConfig = CddConfig()) -> float:
    """KL divergence from the collection model to the smoothed passage model.

    Computed over the full lexicon, with the absent-term remainder folded
    into closed form: for every lexicon term missing from the passage the
    log ratio is log(1/(1-smoothing)), so those terms contribute that
    constant times their total collection probability mass.

    Returns the divergence (>= 0); the quality score is its negation.
    """
    if not p.terms:
        raise UndefinedScoreError(f"CDD undefined for empty passage {p.docno!r}")
    lam = cfg.smoothing
    length = len(p.terms)
    divergence = 0.0
    mass_in_passage = 0.0
    # sorted iteration fixes the summation order, making the result exactly
    # invariant to term order within the passage
    for term, count in sorted(Counter(p.terms).items()):
        p_corpus = lm.prob.get(term)
        if p_corpus is None:
            # out-of-lexicon term: no Pr(t|P) mass, contributes nothing
            continue
        p_passage = count / length
        divergence += p_corpus * math.log(p_corpus / (lam * p_passage + (1.0 - lam) * p_corpus))
        mass_in_passage += p_corpus
    if lam > 0.0:
        divergence += math.log(1.0 / (1.0 - lam)) * max(0.0, 1.0 - mass_in_passage)
    # Gibbs' inequality guarantees >= 0; clamp float residue near zero.
    return max(divergence, 0.0)


def unigram_perplexity(p: TokenizedPassage, lm: UnigramLM) -> float:
    """exp of the mean negative log-probability of the passage terms (>= 1).

    The quality score is the negation. Every term must be in the model
    vocabulary, which holds whenever the model was built from the same
    corpus with the same tokenizer.
    """
    if not p.terms:
        raise UndefinedScoreError(f"perplexity undefined for empty passage {p.docno!r}")
    log_sum = 0.0
    for term in p.terms:
        prob = lm.prob.get(term)
        if prob is None:
            raise MissingTermError(
                f"term {term!r} of passage {p.docno!r} is not in the language model vocabulary"
            )
        log_sum += math.log(prob)
    return math.exp(-log_sum / len(p.terms))


def random_quality(docno: str, seed: int) -> float:
    """Deterministic uniform score in [0, 1) from a digest of (seed, docno).

    Independent of corpus order and stable across platforms and runs, so a
    passage keeps the same random quality across all experiments.
    """
    digest = hashlib.sha256(f"{seed}\x1f{docno}".encode("utf-8")).digest()
    return (int.from_bytes(digest[:8], "big") >> 11) * 2.0 ** -53


# ---------------------------------------------------------------------------
# Supervised linear model over hashed term-frequency features


@dataclass(frozen=True)
class TrainingTriple:
    """Query plus a relevant and a non-relevant passage; the query is unused."""

    query: str
    pos_text: str
    neg_text: str

    def __post_init__(self):
        if not self.pos_text or not self.neg_text:
            raise ValueError("pos_text and neg_text must be non-empty")


@dataclass(frozen=True)
class LinearTrainConfig:
    feature_dim: int = 2 ** 18
    digest_seed: int = 0
    learning_rate: float = 0.1
    epochs: int = 1
    l2: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.feature_dim <= 0:
            raise ValueError("feature_dim must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class LinearQualityModel:
    weights: np.ndarray
    bias: float
    feature_dim: int
    digest_seed: int

    def save(self, path) -> None:
        np.savez(
            path,
            weights=self.weights,
            bias=np.float64(self.bias),
            feature_dim=np.int64(self.feature_dim),
            digest_seed=np.int64(self.digest_seed),
        )

    @classmethod
    def load(cls, path) -> "LinearQualityModel":
        data = np.load(path)
        return cls(
            weights=data["weights"],
            bias=float(data["bias"]),
            feature_dim=int(data["feature_dim"]),
            digest_seed=int(data["digest_seed"]),
        )


@lru_cache(maxsize=1 << 20)
def _bucket(term: str, feature_dim: int, digest_seed: int) -> int:
    digest = hashlib.blake2b(f"{digest_seed}\x1f{term}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % feature_dim


def featurize(terms: Iterable[str], feature_dim: int, digest_seed: int) -> dict[int, int]:
    """Term-frequency counts bucketed into a fixed feature space."""
    feats: dict[int, int] = {}
    for term, count in Counter(terms).items():
        idx = _bucket(term, feature_dim, digest_seed)
        feats[idx] = feats.get(idx, 0) + count
    return feats


def _sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _logistic_loss(z: float, y: float) -> float:
    # softplus(-z) for y=1, softplus(z) for y=0, computed overflow-free
    x = -z if y == 1.0 else z
    return max(x, 0.0) + math.log1p(math.exp(-abs(x)))


def train_linear(triples: Iterable[TrainingTriple], cfg: LinearTrainConfig = LinearTrainConfig()) -> LinearQualityModel:
    """SGD on logistic loss with target 1 for pos_text and 0 for neg_text.

    Weights start at zero; the first epoch visits triples in input order
    and later epochs reshuffle with the configured seed, so the result is
    deterministic given (rng_seed, input order).
    """
    triple_list = list(triples)
    if not triple_list:
        raise ValueError("training requires at least one triple")
    examples: list[tuple[dict[int, int], float]] = []
    for t in triple_list:
        examples.append((featurize(tokenize(t.pos_text), cfg.feature_dim, cfg.digest_seed), 1.0))
        examples.append((featurize(tokenize(t.neg_text), cfg.feature_dim, cfg.digest_seed), 0.0))

    weights = np.zeros(cfg.feature_dim, dtype=np.float64)
    bias = 0.0
    rng = np.random.default_rng(cfg.rng_seed)
    step = 0
    for epoch in range(cfg.epochs):
        order = np.arange(len(examples))
        if epoch > 0:
            rng.shuffle(order)
        for i in order:
            feats, y = examples[i]
            z = bias + sum(weights[idx] * c for idx, c in feats.items())
            if not math.isfinite(z) or not math.isfinite(_logistic_loss(z, y)):
                raise DivergenceError(step)
            grad = _sigmoid(z) - y
            if cfg.l2 > 0.0:
                weights *= 1.0 - cfg.learning_rate * cfg.l2
            for idx, c in feats.items():
                weights[idx] -= cfg.learning_rate * grad * c
            bias -= cfg.learning_rate * grad
            step += 1
    return LinearQualityModel(
        weights=weights, bias=bias, feature_dim=cfg.feature_dim, digest_seed=cfg.digest_seed
    )


def score_linear(model: LinearQualityModel, p: TokenizedPassage) -> float:
    """Sigmoid of the hashed-feature dot product; empty passages get sigmoid(bias)."""
    z = model.bias
    for idx, count in featurize(p.terms, model.feature_dim, model.digest_seed).items():
        z += model.weights[idx] * count
    return _sigmoid(z)


def mean_training_loss(model: LinearQualityModel, triples: Iterable[TrainingTriple]) -> float:
    """Mean logistic loss of a model over a training stream."""
    losses = []
    for t in triples:
        for text, y in ((t.pos_text, 1.0), (t.neg_text, 0.0)):
            feats = featurize(tokenize(text), model.feature_dim, model.digest_seed)
            z = model.bias + sum(model.weights[idx] * c for idx, c in feats.items())
            losses.append(_logistic_loss(z, y))
    if not losses:
        raise ValueError("no triples supplied")
    return math.fsum(losses) / len(losses)


# ---------------------------------------------------------------------------
# Corpus-level scoring and score-file I/O


def score_corpus(
    corpus: Sequence[TokenizedPassage],
    estimator: str,
    *,
    lm: UnigramLM | None = None,
    cdd_config: CddConfig | None = None,
    model: LinearQualityModel | None = None,
    seed: int = 0,
) -> QualityScoreSet:
    """Score every passage with one estimator, higher-is-better.

    Estimators that cannot judge an empty passage contribute MIN_SCORE for
    it, which prunes such passages first.
    """
    if estimator in ("cdd", "unigram-ppl") and lm is None:
        raise ValueError(f"estimator {estimator!r} needs a collection language model")
    if estimator == "linear" and model is None:
        raise ValueError("estimator 'linear' needs a trained model")
    cfg = cdd_config or CddConfig()

    scores: dict[str, float] = {}
    for p in corpus:
        if p.docno in scores:
            raise DuplicateDocnoError(f"duplicate docno {p.docno!r} in corpus stream")
        try:
            if estimator == "itn":
                value = itn(p)
            elif estimator == "cdd":
                value = -cdd(p, lm, cfg)
            elif estimator == "unigram-ppl":
                value = -unigram_perplexity(p, lm)
            elif estimator == "random":
                value = random_quality(p.docno, seed)
            elif estimator == "linear":
                value = score_linear(model, p)
            else:
                raise ValueError(f"unknown estimator {estimator!r}")
        except UndefinedScoreError:
            value = MIN_SCORE
        scores[p.docno] = value
    return QualityScoreSet(estimator=estimator, scores=scores)


def write_scores(score_set: QualityScoreSet, path) -> None:
    """Persist scores as docno<TAB>score lines; floats round-trip exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for docno, value in score_set.scores.items():
            fh.write(f"{docno}\t{value!r}\n")


def load_external_scores(path) -> QualityScoreSet:
    """Read a higher-is-better score file written by any producer."""
    path = Path(path)
    scores: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise CorpusFormatError(path, line_no, f"expected docno<TAB>score, got {len(parts)} fields")
            docno, raw = parts
            try:
                value = float(raw)
            except ValueError as exc:
                raise CorpusFormatError(path, line_no, f"non-numeric score {raw!r}") from exc
            if not math.isfinite(value):
                raise CorpusFormatError(path, line_no, f"non-finite score {raw!r}")
            if docno in scores:
                raise DuplicateDocnoError(f"duplicate docno {docno!r} at {path}:{line_no}")
            scores[docno] = value
    return QualityScoreSet(estimator=path.stem, scores=scores)


def load_triples(path) -> Iterator[TrainingTriple]:
    """Stream query<TAB>pos_text<TAB>neg_text training triples."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise CorpusFormatError(path, line_no, f"expected 3 tab-separated fields, got {len(parts)}")
            try:
                yield TrainingTriple(*parts)
            except ValueError as exc:
                raise CorpusFormatError(path, line_no, str(exc)) from exc
