"""Exact-count threshold selection and corpus pruning."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qprune.corpus import Passage
from qprune.errors import MissingScoreError
from qprune.pruning import PruneManifest, PruneSpec, load_manifest, prune, save_manifest, select_threshold
from qprune.quality import QualityScoreSet


def _scores(mapping):
    return QualityScoreSet("test", dict(mapping))


class TestSelectThreshold:
    def test_fraction_zero_keeps_everything(self):
        threshold, pruned, kept = select_threshold(_scores({"a": 0.1, "b": 0.2}), 0.0)
        assert pruned == [] and set(kept) == {"a", "b"}
        assert threshold == -math.inf

    def test_floor_of_fraction_times_n(self):
        threshold, pruned, kept = select_threshold(_scores({"a": 0.1, "b": 0.2, "c": 0.3}), 1 / 3)
        assert pruned == ["a"] and kept == ["b", "c"]
        assert threshold == 0.1

    def test_tie_broken_by_docno_ascending(self):
        threshold, pruned, kept = select_threshold(_scores({"a": 0.5, "b": 0.5, "c": 0.9}), 1 / 3)
        assert pruned == ["a"] and kept == ["b", "c"]
        assert threshold == 0.5

    def test_fraction_one_prunes_everything(self):
        _, pruned, kept = select_threshold(_scores({"a": 1.0, "b": 2.0}), 1.0)
        assert kept == [] and pruned == ["a", "b"]

    def test_rejects_bad_fraction_and_empty_scores(self):
        with pytest.raises(ValueError):
            select_threshold(_scores({"a": 1.0}), 1.5)
        with pytest.raises(ValueError):
            select_threshold(_scores({}), 0.5)


class TestPrune:
    def _corpus(self, docnos):
        return [Passage(d, f"text {d}") for d in docnos]

    def test_threshold_minus_inf_is_identity(self):
        docnos = ["d3", "d1", "d2"]
        scores = _scores({d: i * 0.1 for i, d in enumerate(docnos)})
        stream, manifest = prune(self._corpus(docnos), scores, PruneSpec(threshold=-math.inf))
        assert [p.docno for p in stream] == docnos  # corpus order preserved
        assert manifest.pruned == [] and set(manifest.kept) == set(docnos)
        assert manifest.fraction_achieved == 0.0

    def test_fraction_quarter_of_eight(self):
        docnos = [f"d{i}" for i in range(8)]
        scores = _scores({d: float(i) for i, d in enumerate(docnos)})
        stream, manifest = prune(self._corpus(docnos), scores, PruneSpec(fraction=0.25))
        assert manifest.pruned == ["d0", "d1"]
        assert [p.docno for p in stream] == docnos[2:]
        assert manifest.fraction_achieved == 0.25

    def test_threshold_mode_keeps_score_at_least_t(self):
        scores = _scores({"a": 1.0, "b": 2.0, "c": 3.0})
        stream, manifest = prune(self._corpus(["a", "b", "c"]), scores, PruneSpec(threshold=2.0))
        assert set(manifest.kept) == {"b", "c"}  # score >= t, boundary kept
        assert [p.docno for p in stream] == ["b", "c"]

    def test_nested_kept_sets(self):
        rng = random.Random(1)
        scores = _scores({f"d{i}": rng.random() for i in range(100)})
        _, _, kept_25 = select_threshold(scores, 0.25)
        _, _, kept_50 = select_threshold(scores, 0.50)
        assert set(kept_50) <= set(kept_25)

    def test_missing_score_named(self):
        scores = _scores({"a": 1.0})
        stream, _ = prune(self._corpus(["a", "ghost"]), scores, PruneSpec(fraction=0.0))
        with pytest.raises(MissingScoreError, match="ghost"):
            list(stream)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            PruneSpec()
        with pytest.raises(ValueError):
            PruneSpec(fraction=0.5, threshold=1.0)
        with pytest.raises(ValueError):
            PruneSpec(fraction=-0.1)

    def test_manifest_independent_of_corpus_order(self):
        rng = random.Random(7)
        docnos = [f"d{i}" for i in range(50)]
        scores = _scores({d: rng.choice([0.1, 0.5, 0.9]) for d in docnos})
        shuffled = list(docnos)
        rng.shuffle(shuffled)
        _, m1 = prune(self._corpus(docnos), scores, PruneSpec(fraction=0.4))
        _, m2 = prune(self._corpus(shuffled), scores, PruneSpec(fraction=0.4))
        assert m1.kept == m2.kept and m1.pruned == m2.pruned
        assert m1.threshold_used == m2.threshold_used


@settings(max_examples=200)
@given(
    scores=st.lists(
        st.floats(min_value=-100, max_value=100, allow_nan=False) | st.just(0.5),
        min_size=1,
        max_size=40,
    ),
    fraction=st.floats(min_value=0.0, max_value=1.0),
)
def test_exact_count_property(scores, fraction):
    score_set = _scores({f"d{i:03d}": s for i, s in enumerate(scores)})
    _, pruned, kept = select_threshold(score_set, fraction)
    assert len(pruned) == math.floor(fraction * len(scores))
    assert len(pruned) + len(kept) == len(scores)
    assert set(pruned).isdisjoint(kept)


@settings(max_examples=200)
@given(
    scores=st.lists(st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=1, max_size=30),
    f1=st.floats(min_value=0.0, max_value=1.0),
    f2=st.floats(min_value=0.0, max_value=1.0),
)
def test_monotone_nesting_property(scores, f1, f2):
    if f1 > f2:
        f1, f2 = f2, f1
    score_set = _scores({f"d{i:03d}": s for i, s in enumerate(scores)})
    _, _, kept_low = select_threshold(score_set, f1)
    _, _, kept_high = select_threshold(score_set, f2)
    assert set(kept_high) <= set(kept_low)


def test_manifest_roundtrip(tmp_path):
    manifest = PruneManifest(
        estimator="itn",
        threshold_used=-math.inf,
        kept=["a", "b"],
        pruned=[],
        fraction_requested=0.0,
        fraction_achieved=0.0,
    )
    path = tmp_path / "manifest.json"
    save_manifest(manifest, path)
    loaded = load_manifest(path)
    assert loaded == manifest
    manifest.threshold_used = 0.25
    manifest.pruned = ["c"]
    save_manifest(manifest, path)
    assert load_manifest(path).threshold_used == 0.25
