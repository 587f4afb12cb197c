"""Word-level vocabulary construction and round-trips."""

from qprune_sidecar.vocab import BOS, PAD, TEMPLATE_TOKENS, UNK, WordVocab


def test_build_covers_corpus_words():
    vocab = WordVocab.build(["alpha beta beta", "Gamma ALPHA"])
    for word in ("alpha", "beta", "gamma"):
        assert word in vocab.index


def test_specials_and_template_always_present():
    vocab = WordVocab.build(["x"])
    for token in (PAD, UNK, BOS, *TEMPLATE_TOKENS):
        assert token in vocab.index
    assert vocab.pad_id == 0 and vocab.unk_id == 1 and vocab.bos_id == 2


def test_encode_lowercases_and_maps_oov_to_unk():
    vocab = WordVocab.build(["known words here"])
    ids = vocab.encode("KNOWN mystery")
    assert ids[0] == vocab.index["known"]
    assert ids[1] == vocab.unk_id


def test_max_size_keeps_most_frequent():
    texts = ["common " * 50 + "rare" + f" filler{i}" for i in range(40)]
    vocab = WordVocab.build(texts, max_size=len(TEMPLATE_TOKENS) + 3 + 2)
    assert "common" in vocab.index
    assert len(vocab) == len(TEMPLATE_TOKENS) + 3 + 2


def test_deterministic_given_same_texts():
    texts = ["b a c", "a c c"]
    assert WordVocab.build(texts).tokens == WordVocab.build(texts).tokens


def test_save_load_roundtrip(tmp_path):
    vocab = WordVocab.build(["some words to keep"])
    path = tmp_path / "vocab.json"
    vocab.save(path)
    loaded = WordVocab.load(path)
    assert loaded.tokens == vocab.tokens and loaded.index == vocab.index
