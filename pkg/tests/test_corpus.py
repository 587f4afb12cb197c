"""Corpus ingestion, tokenization, and statistics accumulation."""

import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qprune.corpus import (
    Passage,
    TokenizedPassage,
    collect_stats,
    load_corpus,
    tokenize,
    tokenize_passage,
    write_corpus,
)
from qprune.errors import CorpusFormatError, DuplicateDocnoError, EmptyCorpusError


class TestTokenize:
    def test_empty(self):
        assert tokenize("") == []

    def test_case_folding(self):
        assert tokenize("A a") == ["a", "a"]

    def test_stemming(self):
        assert tokenize("Running runs") == ["run", "run"]

    def test_split_on_non_alphanumeric_runs(self):
        assert tokenize("state-of-the-art search!!engines") == [
            "state", "of", "the", "art", "search", "engin",
        ]

    def test_numerals_and_mixed_tokens_kept_verbatim(self):
        assert tokenize("42 t0001 3rd") == ["42", "t0001", "3rd"]

    def test_unicode_words_survive_unstemmed(self):
        assert tokenize("Café au lait") == ["café", "au", "lait"]

    def test_no_empty_terms(self):
        assert all(tokenize("...a--b__c  ")) and tokenize("!!!") == []


class TestLoadCorpus:
    def test_jsonl_field_mapping(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"docno":"d1","text":"hello"}\n', encoding="utf-8")
        assert list(load_corpus(path)) == [Passage("d1", "hello")]

    def test_empty_file_is_empty_stream(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("", encoding="utf-8")
        assert list(load_corpus(path)) == []

    def test_duplicate_docno_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"docno":"d1","text":"x"}\n{"docno":"d1","text":"y"}\n', encoding="utf-8")
        with pytest.raises(DuplicateDocnoError, match="d1"):
            list(load_corpus(path))

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"docno":"d1","text":"x"}\nnot json\n', encoding="utf-8")
        with pytest.raises(CorpusFormatError) as err:
            list(load_corpus(path))
        assert err.value.line_no == 2

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"docno":"d1"}\n', encoding="utf-8")
        with pytest.raises(CorpusFormatError):
            list(load_corpus(path))

    def test_tsv(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("d1\thello world\nd2\t\n", encoding="utf-8")
        assert list(load_corpus(path)) == [Passage("d1", "hello world"), Passage("d2", "")]

    def test_tsv_wrong_arity(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("d1\ta\tb\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError) as err:
            list(load_corpus(path))
        assert err.value.line_no == 1

    def test_unknown_suffix_needs_explicit_format(self, tmp_path):
        path = tmp_path / "c.dat"
        path.write_text("d1\thello\n", encoding="utf-8")
        with pytest.raises(ValueError):
            list(load_corpus(path))
        assert list(load_corpus(path, "tsv")) == [Passage("d1", "hello")]

    def test_roundtrip(self, tmp_path):
        passages = [Passage("d1", "héllo wörld"), Passage("d2", ""), Passage("d3", "x y")]
        for fmt in ("jsonl", "tsv"):
            path = tmp_path / f"c.{fmt}"
            write_corpus(passages, path, fmt=fmt)
            assert list(load_corpus(path)) == passages


def _brute_force_stats(passages):
    """Independent recount: flat loops over raw term lists."""
    term_freq, doc_freq, doc_len = {}, {}, {}
    total = 0
    for p in passages:
        for t in p.terms:
            term_freq[t] = term_freq.get(t, 0) + 1
            total += 1
        for t in sorted(set(p.terms)):
            doc_freq[t] = doc_freq.get(t, 0) + 1
        doc_len[p.docno] = len(p.terms)
    return len(doc_len), total, term_freq, doc_freq, doc_len


class TestCollectStats:
    def test_single_passage(self):
        stats = collect_stats([TokenizedPassage("d1", ("a", "a", "b"))])
        assert stats.total_terms == 3
        assert stats.term_freq == {"a": 2, "b": 1}
        assert stats.doc_freq == {"a": 1, "b": 1}
        assert stats.doc_len == {"d1": 3}

    def test_doc_freq_counts_passages(self):
        stats = collect_stats([TokenizedPassage("d1", ("a",)), TokenizedPassage("d2", ("a",))])
        assert stats.doc_freq == {"a": 2}
        assert stats.term_freq == {"a": 2}

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpusError):
            collect_stats([])

    def test_duplicate_docno_rejected(self):
        with pytest.raises(DuplicateDocnoError):
            collect_stats([TokenizedPassage("d1", ("a",)), TokenizedPassage("d1", ("b",))])

    def test_matches_brute_force_recount(self):
        rng = random.Random(17)
        vocab = [f"w{i}" for i in range(40)]
        passages = [
            TokenizedPassage(f"d{i}", tuple(rng.choices(vocab, k=rng.randint(1, 30))))
            for i in range(100)
        ]
        stats = collect_stats(passages)
        n, total, tf, df, dl = _brute_force_stats(passages)
        assert (stats.num_passages, stats.total_terms) == (n, total)
        assert stats.term_freq == tf and stats.doc_freq == df and stats.doc_len == dl

    def test_invariants_hold(self):
        rng = random.Random(3)
        passages = [
            TokenizedPassage(f"d{i}", tuple(rng.choices("abcde", k=rng.randint(1, 9))))
            for i in range(50)
        ]
        stats = collect_stats(passages)
        assert stats.total_terms == sum(stats.term_freq.values()) == sum(stats.doc_len.values())
        assert all(1 <= stats.doc_freq[t] <= stats.num_passages for t in stats.term_freq)

    @given(
        st.lists(
            st.lists(st.sampled_from("abcdef"), min_size=0, max_size=8),
            min_size=1,
            max_size=12,
        ),
        st.randoms(use_true_random=False),
    )
    def test_permutation_invariant(self, term_lists, rnd):
        passages = [TokenizedPassage(f"d{i}", tuple(terms)) for i, terms in enumerate(term_lists)]
        shuffled = list(passages)
        rnd.shuffle(shuffled)
        a, b = collect_stats(passages), collect_stats(shuffled)
        assert (a.term_freq, a.doc_freq, a.doc_len, a.total_terms) == (
            b.term_freq, b.doc_freq, b.doc_len, b.total_terms,
        )


def test_tokenize_passage_maps_fields():
    tp = tokenize_passage(Passage("d9", "Hello hello"))
    assert tp.docno == "d9" and tp.terms == ("hello", "hello")
