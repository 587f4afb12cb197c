"""Quality estimators: ITN, CDD, unigram perplexity, random baseline, the
supervised linear model, and score-file round-trips."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qprune.corpus import CollectionStats, TokenizedPassage, collect_stats, tokenize
from qprune.errors import (
    CorpusFormatError,
    DivergenceError,
    DuplicateDocnoError,
    MissingTermError,
    UndefinedScoreError,
)
from qprune.evaluation import auc
from qprune.quality import (
    MIN_SCORE,
    CddConfig,
    LinearQualityModel,
    LinearTrainConfig,
    QualityScoreSet,
    TrainingTriple,
    UnigramLM,
    cdd,
    featurize,
    itn,
    load_external_scores,
    load_triples,
    mean_training_loss,
    random_quality,
    score_corpus,
    score_linear,
    train_linear,
    unigram_perplexity,
    write_scores,
)


def _lm(*term_lists):
    passages = [TokenizedPassage(f"d{i}", tuple(t)) for i, t in enumerate(term_lists)]
    return UnigramLM.from_stats(collect_stats(passages))


class TestItn:
    def test_repeated_terms(self):
        assert itn(TokenizedPassage("p", ("a", "a", "b"))) == pytest.approx(2 / 3)

    def test_all_unique(self):
        assert itn(TokenizedPassage("p", ("a", "b", "c"))) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(UndefinedScoreError):
            itn(TokenizedPassage("p", ()))

    def test_matches_set_count_oracle(self):
        rng = random.Random(5)
        terms = tuple(rng.choices("abcdefgh", k=50))
        assert itn(TokenizedPassage("p", terms)) == len(set(terms)) / len(terms)

    @given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=30), st.randoms(use_true_random=False))
    def test_order_invariant_and_in_range(self, terms, rnd):
        value = itn(TokenizedPassage("p", tuple(terms)))
        assert 0.0 < value <= 1.0
        shuffled = list(terms)
        rnd.shuffle(shuffled)
        assert itn(TokenizedPassage("p", tuple(shuffled))) == value
        assert (value == 1.0) == (len(set(terms)) == len(terms))


def _naive_cdd(p, lm, lam):
    """Full-lexicon sum, straight from the definition."""
    counts = {}
    for t in p.terms:
        counts[t] = counts.get(t, 0) + 1
    total = 0.0
    for t, p_corpus in lm.prob.items():
        p_doc = counts.get(t, 0) / len(p.terms)
        total += p_corpus * math.log(p_corpus / (lam * p_doc + (1 - lam) * p_corpus))
    return total


class TestCdd:
    def test_passage_matching_collection_distribution(self):
        # one passage corpus: the passage IS the collection
        lm = _lm(["a", "a", "b"])
        assert cdd(TokenizedPassage("d0", ("a", "a", "b")), lm, CddConfig(0.7)) == 0.0

    def test_hand_fixture_two_passages(self):
        # corpus ["a","a"], ["b","b"]; score ["a","a"] at lambda = 0.5
        lm = _lm(["a", "a"], ["b", "b"])
        value = cdd(TokenizedPassage("d0", ("a", "a")), lm, CddConfig(0.5))
        assert value == pytest.approx(0.5 * math.log(4 / 3), abs=1e-13)

    def test_lambda_zero_collapses_to_collection_model(self):
        lm = _lm(["a", "b", "c"], ["a", "a"])
        assert cdd(TokenizedPassage("d0", ("c", "c", "a")), lm, CddConfig(0.0)) == 0.0

    def test_lambda_one_rejected_at_construction(self):
        with pytest.raises(ValueError):
            CddConfig(1.0)
        with pytest.raises(ValueError):
            CddConfig(-0.1)

    def test_empty_rejected(self):
        lm = _lm(["a"])
        with pytest.raises(UndefinedScoreError):
            cdd(TokenizedPassage("p", ()), lm, CddConfig())

    def test_closed_form_equals_naive_lexicon_sum(self):
        rng = random.Random(11)
        for trial in range(30):
            vocab = [f"w{i}" for i in range(rng.randint(3, 50))]
            passages = [
                TokenizedPassage(f"d{i}", tuple(rng.choices(vocab, k=rng.randint(1, 40))))
                for i in range(rng.randint(2, 12))
            ]
            lm = UnigramLM.from_stats(collect_stats(passages))
            lam = rng.choice([0.0, 0.3, 0.9, 0.99])
            for p in passages[:3]:
                assert cdd(p, lm, CddConfig(lam)) == pytest.approx(
                    max(_naive_cdd(p, lm, lam), 0.0), abs=1e-9
                )

    @given(
        st.lists(st.sampled_from("abc"), min_size=1, max_size=12),
        st.floats(min_value=0.0, max_value=0.99),
        st.randoms(use_true_random=False),
    )
    def test_non_negative_and_order_invariant(self, terms, lam, rnd):
        lm = _lm(["a", "b", "c", "a"], ["b", "c"])
        value = cdd(TokenizedPassage("p", tuple(terms)), lm, CddConfig(lam))
        assert value >= 0.0
        shuffled = list(terms)
        rnd.shuffle(shuffled)
        assert cdd(TokenizedPassage("p", tuple(shuffled)), lm, CddConfig(lam)) == value


class TestUnigramPerplexity:
    def test_single_term(self):
        lm = _lm(["a", "b", "c", "d"])  # Pr(a) = 0.25
        assert unigram_perplexity(TokenizedPassage("p", ("a",)), lm) == pytest.approx(4.0)

    def test_uniform_vocabulary_gives_vocab_size(self):
        lm = _lm(["a", "b", "c", "d", "e"])
        for terms in (("a",), ("a", "b"), ("c", "c", "d", "e", "a", "b")):
            assert unigram_perplexity(TokenizedPassage("p", terms), lm) == pytest.approx(5.0)

    def test_matches_direct_oracle(self):
        rng = random.Random(23)
        passages = [
            TokenizedPassage(f"d{i}", tuple(rng.choices("abcdefg", k=rng.randint(1, 25))))
            for i in range(10)
        ]
        lm = UnigramLM.from_stats(collect_stats(passages))
        for p in passages:
            oracle = math.exp(-sum(math.log(lm.prob[t]) for t in p.terms) / len(p.terms))
            assert unigram_perplexity(p, lm) == pytest.approx(oracle, rel=1e-9)

    def test_missing_term_rejected(self):
        lm = _lm(["a"])
        with pytest.raises(MissingTermError, match="zzz"):
            unigram_perplexity(TokenizedPassage("p", ("zzz",)), lm)

    def test_at_least_one_with_equality_iff_certain(self):
        lm = _lm(["a", "a", "a"])
        assert unigram_perplexity(TokenizedPassage("p", ("a", "a")), lm) == 1.0
        lm2 = _lm(["a", "b"])
        assert unigram_perplexity(TokenizedPassage("p", ("a",)), lm2) > 1.0

    def test_empty_rejected(self):
        with pytest.raises(UndefinedScoreError):
            unigram_perplexity(TokenizedPassage("p", ()), _lm(["a"]))


class TestRandomQuality:
    def test_deterministic(self):
        assert random_quality("d1", 1) == random_quality("d1", 1)

    def test_seed_sensitivity(self):
        assert random_quality("d1", 1) != random_quality("d1", 2)

    def test_docno_sensitivity(self):
        assert random_quality("d1", 1) != random_quality("d2", 1)

    def test_uniformity_over_many_docnos(self):
        values = sorted(random_quality(f"doc{i}", 7) for i in range(10_000))
        assert all(0.0 <= v < 1.0 for v in values)
        mean = sum(values) / len(values)
        assert abs(mean - 0.5) < 0.02
        # Kolmogorov-Smirnov distance from uniform
        n = len(values)
        ks = max(max((i + 1) / n - v, v - i / n) for i, v in enumerate(values))
        assert ks < 0.02


class TestLinearModel:
    def test_zero_model_scores_half(self):
        model = LinearQualityModel(np.zeros(16), 0.0, 16, 0)
        assert score_linear(model, TokenizedPassage("p", ("a", "b"))) == 0.5
        assert score_linear(model, TokenizedPassage("p", ())) == 0.5

    def test_hand_computed_sigmoid_fixture(self):
        # 4-feature model; bucket indices computed once, dot product by hand
        dim, seed = 4, 9
        weights = np.array([0.5, -0.25, 2.0, 0.0])
        model = LinearQualityModel(weights, 0.1, dim, seed)
        terms = ("x", "y", "x", "z")
        counts = featurize(terms, dim, seed)
        z = 0.1 + sum(weights[i] * c for i, c in counts.items())
        expected = 1.0 / (1.0 + math.exp(-z))
        assert score_linear(model, TokenizedPassage("p", terms)) == pytest.approx(expected, abs=1e-12)

    def test_monotone_in_positive_feature(self):
        dim, seed = 8, 0
        weights = np.zeros(dim)
        weights[featurize(("good",), dim, seed).popitem()[0]] = 1.5
        model = LinearQualityModel(weights, 0.0, dim, seed)
        scores = [
            score_linear(model, TokenizedPassage("p", ("good",) * k + ("pad",)))
            for k in range(1, 6)
        ]
        assert all(b >= a for a, b in zip(scores, scores[1:]))

    def test_single_triple_separates_after_many_epochs(self):
        triple = TrainingTriple("q", "informative unique words", "junk junk junk junk")
        cfg = LinearTrainConfig(feature_dim=1024, epochs=100)
        model = train_linear([triple], cfg)
        pos = score_linear(model, TokenizedPassage("p", tuple(tokenize(triple.pos_text))))
        neg = score_linear(model, TokenizedPassage("n", tuple(tokenize(triple.neg_text))))
        assert pos > neg

    def test_zero_epochs_gives_zero_model(self):
        model = train_linear([TrainingTriple("q", "a", "b")], LinearTrainConfig(epochs=0))
        assert score_linear(model, TokenizedPassage("p", ("anything",))) == 0.5

    def test_deterministic_given_seed_and_order(self):
        triples = [TrainingTriple("q", f"pos term{i}", f"neg filler{i}") for i in range(10)]
        cfg = LinearTrainConfig(feature_dim=512, epochs=3, rng_seed=4)
        a = train_linear(triples, cfg)
        b = train_linear(triples, cfg)
        assert np.array_equal(a.weights, b.weights) and a.bias == b.bias

    def test_planted_marker_reaches_high_auc(self):
        # positives carry a marker term absent from negatives; held-out AUC
        rng = random.Random(2)
        vocab = [f"w{i}" for i in range(50)]
        def passage(marker):
            terms = rng.choices(vocab, k=20) + (["marker"] * 2 if marker else [])
            rng.shuffle(terms)
            return " ".join(terms)
        triples = [TrainingTriple("q", passage(True), passage(False)) for _ in range(100)]
        model = train_linear(triples, LinearTrainConfig(feature_dim=4096, epochs=2))
        held_out = {}
        labels = {}
        for i in range(200):
            is_pos = i % 2 == 0
            docno = f"h{i}"
            held_out[docno] = score_linear(
                model, TokenizedPassage(docno, tuple(tokenize(passage(is_pos))))
            )
            labels[docno] = is_pos
        assert auc(held_out, labels) >= 0.95

    def test_training_loss_not_worse_than_zero_model(self):
        rng = random.Random(8)
        triples = [
            TrainingTriple("q", " ".join(rng.choices("abcdef", k=8)) + " good",
                           " ".join(rng.choices("uvwxyz", k=8)))
            for _ in range(50)
        ]
        model = train_linear(triples, LinearTrainConfig(feature_dim=2048))
        zero = LinearQualityModel(np.zeros(2048), 0.0, 2048, 0)
        assert mean_training_loss(model, triples) <= mean_training_loss(zero, triples) + 1e-12

    def test_divergence_detected(self):
        with pytest.raises(DivergenceError):
            train_linear(
                [TrainingTriple("q", "a a a a", "b b b b")],
                LinearTrainConfig(feature_dim=64, learning_rate=1e308, epochs=2),
            )

    def test_save_load_roundtrip(self, tmp_path):
        model = train_linear([TrainingTriple("q", "a b c", "d e f")], LinearTrainConfig(feature_dim=256))
        path = tmp_path / "model.npz"
        model.save(path)
        loaded = LinearQualityModel.load(path)
        assert np.array_equal(loaded.weights, model.weights)
        assert (loaded.bias, loaded.feature_dim, loaded.digest_seed) == (
            model.bias, model.feature_dim, model.digest_seed,
        )


class TestScoreFiles:
    def test_parse(self, tmp_path):
        path = tmp_path / "s.tsv"
        path.write_text("d1\t0.5\nd2\t-1.25\nd3\t1e-3\n", encoding="utf-8")
        scores = load_external_scores(path)
        assert scores.scores == {"d1": 0.5, "d2": -1.25, "d3": 1e-3}

    def test_nan_rejected(self, tmp_path):
        path = tmp_path / "s.tsv"
        path.write_text("d1\tNaN\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError) as err:
            load_external_scores(path)
        assert err.value.line_no == 1

    def test_non_numeric_rejected(self, tmp_path):
        path = tmp_path / "s.tsv"
        path.write_text("d1\thigh\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError):
            load_external_scores(path)

    def test_duplicate_rejected(self, tmp_path):
        path = tmp_path / "s.tsv"
        path.write_text("d1\t1.0\nd1\t2.0\n", encoding="utf-8")
        with pytest.raises(DuplicateDocnoError):
            load_external_scores(path)

    def test_roundtrip_exact(self, tmp_path):
        original = QualityScoreSet("test", {"d1": 0.1 + 0.2, "d2": -1e-17, "d3": MIN_SCORE})
        path = tmp_path / "s.tsv"
        write_scores(original, path)
        assert load_external_scores(path).scores == original.scores

    def test_non_finite_scores_rejected_at_construction(self):
        with pytest.raises(ValueError):
            QualityScoreSet("bad", {"d1": float("inf")})


class TestScoreCorpus:
    def test_empty_passage_gets_min_score(self):
        passages = [TokenizedPassage("d1", ("a", "b")), TokenizedPassage("d2", ())]
        scores = score_corpus(passages, "itn")
        assert scores.scores["d2"] == MIN_SCORE
        assert 0 < scores.scores["d1"] <= 1

    def test_random_scores_empty_passages_normally(self):
        scores = score_corpus([TokenizedPassage("d2", ())], "random", seed=3)
        assert scores.scores["d2"] == random_quality("d2", 3)

    def test_cdd_and_ppl_are_negated(self):
        passages = [TokenizedPassage("d1", ("a", "a", "b")), TokenizedPassage("d2", ("b", "c"))]
        lm = UnigramLM.from_stats(collect_stats(passages))
        cdd_scores = score_corpus(passages, "cdd", lm=lm)
        assert all(v <= 0 for v in cdd_scores.scores.values())
        ppl_scores = score_corpus(passages, "unigram-ppl", lm=lm)
        assert all(v <= -1 for v in ppl_scores.scores.values())

    def test_unknown_estimator(self):
        with pytest.raises(ValueError):
            score_corpus([TokenizedPassage("d", ("a",))], "mystery")

    def test_requires_lm_where_needed(self):
        with pytest.raises(ValueError):
            score_corpus([TokenizedPassage("d", ("a",))], "cdd")


def test_load_triples(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("what is x\tpos text\tneg text\nq2\tp2\tn2\n", encoding="utf-8")
    triples = list(load_triples(path))
    assert triples[0] == TrainingTriple("what is x", "pos text", "neg text")
    assert len(triples) == 2


def test_load_triples_rejects_bad_arity(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("only\ttwo\n", encoding="utf-8")
    with pytest.raises(CorpusFormatError):
        list(load_triples(path))


def test_load_triples_rejects_empty_texts(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("q\t\tneg\n", encoding="utf-8")
    with pytest.raises(CorpusFormatError):
        list(load_triples(path))
