import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textgcn.corpus import (
    Corpus,
    CorpusError,
    PreprocessOptions,
    build_corpus,
    corpus_from_texts,
    load_stopwords,
    split_validation,
    tokenize,
)


def write_corpus(tmp_path, texts, meta):
    docs = tmp_path / "documents.txt"
    md = tmp_path / "metadata.tsv"
    docs.write_text("".join(t + "\n" for t in texts), encoding="utf-8")
    md.write_text("".join("\t".join(m) + "\n" for m in meta), encoding="utf-8")
    return docs, md


NO_FILTER = PreprocessOptions(filter_enabled=False)


class TestTokenize:
    def test_contraction_and_punctuation(self):
        assert tokenize("I don't like it.") == ["i", "do", "n't", "like", "it"]

    def test_empty(self):
        assert tokenize("") == []

    def test_case_and_whitespace(self):
        assert tokenize("Hello   WORLD") == ["hello", "world"]

    @pytest.mark.parametrize(
        "raw, expected",
        [
            ("it's here", ["it", "'s", "here"]),
            ("we've we're we'd we'll", ["we", "'ve", "we", "'re", "we", "'d", "we", "'ll"]),
            ("a,b!c?(d)", ["a", ",", "b", "!", "c", "?", "(", "d", ")"]),
            ("price: $5.3 mln; up 4%", ["price", "5", "3", "mln", "up", "4"]),
            ("tab\tand\nnewline", ["tab", "and", "newline"]),
            ("café naıve", ["caf", "na", "ve"]),
        ],
    )
    def test_cleaning_rules(self, raw, expected):
        assert tokenize(raw) == expected

    def test_nfc_normalization(self):
        composed = "résumé"
        assert tokenize(composed) == tokenize("résumé")

    @settings(max_examples=300)
    @given(st.text())
    def test_idempotent(self, s):
        once = tokenize(s)
        assert tokenize(" ".join(once)) == once

    @given(st.text())
    def test_tokens_are_lowercase_without_space(self, s):
        for tok in tokenize(s):
            assert tok and tok == tok.lower() and not any(c.isspace() for c in tok)


class TestStopwords:
    def test_bundled_list(self):
        words = load_stopwords()
        assert len(words) == 153
        assert {"the", "and", "of", "not", "very"} <= words
        assert "reuter" not in words

    def test_custom_list(self, tmp_path):
        p = tmp_path / "sw.txt"
        p.write_text("foo\n\nbar\n")
        assert load_stopwords(p) == {"foo", "bar"}


class TestBuildCorpus:
    def test_two_line_vocabulary(self, tmp_path):
        docs, md = write_corpus(tmp_path, ["a b", "b c"], [("d0", "train", "x"), ("d1", "test", "x")])
        c = build_corpus(docs, md, NO_FILTER)
        assert c.vocabulary.terms == ("a", "b", "c")
        assert c.vocabulary.doc_freq.tolist() == [1, 2, 1]
        assert c.num_nodes == 5
        assert c.num_classes == 1

    def test_first_occurrence_order_and_tokens(self):
        c = corpus_from_texts(["z y z", "x y"], [("a", "train", "p"), ("b", "train", "q")], NO_FILTER)
        assert c.vocabulary.terms == ("z", "y", "x")
        assert c.documents[0].tokens.tolist() == [0, 1, 0]
        assert c.documents[1].tokens.tolist() == [2, 1]
        assert c.label_names == ("p", "q")

    def test_filtering(self):
        texts = ["the cat sat"] * 5 + ["the cat dog"] * 4 + ["cat"]
        meta = [(f"d{i}", "train", "a") for i in range(len(texts))]
        # "the" is a stop word; counts: cat 10, sat 5, dog 4
        c = corpus_from_texts(texts, meta, PreprocessOptions(min_term_freq=5))
        assert c.vocabulary.terms == ("cat", "sat")
        assert c.documents[5].tokens.tolist() == [0]
        c = corpus_from_texts(texts, meta, PreprocessOptions(min_term_freq=4))
        assert c.vocabulary.terms == ("cat", "sat", "dog")
        c = corpus_from_texts(texts, meta, PreprocessOptions(filter_enabled=False))
        assert c.vocabulary.terms == ("the", "cat", "sat", "dog")

    def test_filtering_uses_corpus_frequency_not_doc_frequency(self):
        texts = ["rare rare rare rare rare", "other"]
        meta = [("a", "train", "x"), ("b", "train", "x")]
        with pytest.raises(CorpusError, match="line 2"):
            corpus_from_texts(texts, meta, PreprocessOptions(min_term_freq=5))
        c = corpus_from_texts(texts[:1], meta[:1], PreprocessOptions(min_term_freq=5))
        assert c.vocabulary.terms == ("rare",)

    def test_custom_stopwords(self, tmp_path):
        sw = tmp_path / "sw.txt"
        sw.write_text("b\n")
        c = corpus_from_texts(["a b", "b c"], [("0", "train", "x"), ("1", "train", "x")],
                              PreprocessOptions(min_term_freq=1, stopwords_path=str(sw)))
        assert c.vocabulary.terms == ("a", "c")

    def test_line_count_mismatch(self, tmp_path):
        docs, md = write_corpus(tmp_path, ["a", "b"], [("d0", "train", "x")])
        with pytest.raises(CorpusError, match="mismatch"):
            build_corpus(docs, md, NO_FILTER)

    def test_unknown_split(self, tmp_path):
        docs, md = write_corpus(tmp_path, ["a"], [("d0", "dev", "x")])
        with pytest.raises(CorpusError, match="unknown split"):
            build_corpus(docs, md, NO_FILTER)

    def test_malformed_metadata(self, tmp_path):
        docs, md = write_corpus(tmp_path, ["a"], [("d0", "train")])
        with pytest.raises(CorpusError, match="3 tab-separated"):
            build_corpus(docs, md, NO_FILTER)

    def test_empty_document_is_an_error(self, tmp_path):
        docs, md = write_corpus(tmp_path, ["a b", "..."], [("d0", "train", "x"), ("d1", "test", "x")])
        with pytest.raises(CorpusError, match="line 2"):
            build_corpus(docs, md, NO_FILTER)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(CorpusError, match="cannot read"):
            build_corpus(tmp_path / "missing.txt", tmp_path / "missing.tsv")

    def test_class_without_training_document(self):
        with pytest.raises(CorpusError, match="without training"):
            corpus_from_texts(["a", "b"], [("0", "train", "x"), ("1", "test", "y")], NO_FILTER)

    def test_crlf_lines(self, tmp_path):
        docs = tmp_path / "d.txt"
        md = tmp_path / "m.tsv"
        docs.write_bytes(b"a b\r\nc\r\n")
        md.write_bytes(b"0\ttrain\tx\r\n1\ttest\tx\r\n")
        c = build_corpus(docs, md, NO_FILTER)
        assert c.vocabulary.terms == ("a", "b", "c")

    def test_rebuild_is_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        words = [f"w{i}" for i in range(30)]
        texts = [" ".join(rng.choice(words, size=12)) for _ in range(20)]
        meta = [(str(i), "train" if i % 3 else "test", "ab"[i % 2]) for i in range(20)]
        docs, md = write_corpus(tmp_path, texts, meta)
        opts = PreprocessOptions(min_term_freq=3)
        c1, c2 = build_corpus(docs, md, opts), build_corpus(docs, md, opts)
        assert c1.vocabulary.terms == c2.vocabulary.terms
        assert all(np.array_equal(a.tokens, b.tokens) for a, b in zip(c1.documents, c2.documents))


@given(st.lists(st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=15), min_size=1, max_size=12))
def test_vocabulary_invariants(token_lists):
    texts = [" ".join(t) for t in token_lists]
    meta = [(str(i), "train", "x") for i in range(len(texts))]
    c = corpus_from_texts(texts, meta, NO_FILTER)
    vocab = c.vocabulary
    assert all(vocab.index[t] == i for i, t in enumerate(vocab.terms))
    assert len(vocab.index) == len(vocab.terms)
    for t, term in enumerate(vocab.terms):
        brute = sum(term in toks for toks in token_lists)
        assert vocab.doc_freq[t] == brute
        assert 1 <= vocab.doc_freq[t] <= len(texts)


def _toy(n_train, n_test=3) -> Corpus:
    texts = ["a b"] * (n_train + n_test)
    meta = [(str(i), "train" if i < n_train else "test", "x") for i in range(n_train + n_test)]
    return corpus_from_texts(texts, meta, NO_FILTER)


class TestSplitValidation:
    def test_r8_sized_split(self):
        train, val = split_validation(range(5485), 0.1, seed=1)
        assert len(val) == 549 and len(train) == 4936

    def test_deterministic(self):
        c = _toy(10)
        a = split_validation(c, 0.1, 7)
        b = split_validation(c, 0.1, 7)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_seed_changes_split(self):
        outs = {tuple(split_validation(range(100), 0.1, s)[1]) for s in range(5)}
        assert len(outs) > 1

    def test_half_partition(self):
        c = _toy(10)
        train, val = split_validation(c, 0.5, 3)
        assert len(train) == len(val) == 5
        assert set(train).isdisjoint(val)
        assert set(train) | set(val) == set(range(10))

    def test_excludes_test_documents(self):
        c = _toy(10, n_test=5)
        train, val = split_validation(c, 0.3, 0)
        test = set(c.indices("test").tolist())
        assert test.isdisjoint(train) and test.isdisjoint(val)
        assert len(train) + len(val) + len(test) == c.num_documents

    def test_at_least_one_validation_document(self):
        train, val = split_validation(range(3), 0.01, 0)
        assert len(val) == 1 and len(train) == 2

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
    def test_fraction_out_of_range(self, fraction):
        with pytest.raises(CorpusError):
            split_validation(range(10), fraction, 0)

    def test_too_few_documents(self):
        with pytest.raises(CorpusError):
            split_validation([4], 0.5, 0)
