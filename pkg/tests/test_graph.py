import json
import math
from collections import Counter
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textgcn.corpus import PreprocessOptions, corpus_from_texts
from textgcn.graph import (
    CooccurrenceStats,
    build_graph,
    count_windows,
    pmi,
    pmi_edges,
    tfidf,
    write_graph,
)
from textgcn.sparse import read_matrix_market

NO_FILTER = PreprocessOptions(filter_enabled=False)


def make_corpus(docs, labels=None):
    labels = labels or ["x"] * len(docs)
    meta = [(f"doc{i}", "train", lab) for i, lab in enumerate(labels)]
    return corpus_from_texts([" ".join(d) for d in docs], meta, NO_FILTER)


def brute_windows(token_lists, window):
    """Enumerate every window explicitly: (#W, Counter of terms, Counter of pairs)."""
    total, single, pair = 0, Counter(), Counter()
    for toks in token_lists:
        span = min(len(toks), window)
        for s in range(max(1, len(toks) - window + 1)):
            content = set(toks[s:s + span])
            total += 1
            single.update(content)
            pair.update(frozenset(p) for p in combinations(sorted(content), 2))
    return total, single, pair


def dense_oracle(token_lists, window):
    """Evaluate the edge-weight cases directly for every node pair."""
    vocab = []
    for toks in token_lists:
        for t in toks:
            if t not in vocab:
                vocab.append(t)
    nd, nw = len(token_lists), len(vocab)
    total, single, pair = brute_windows(token_lists, window)
    a = np.zeros((nd + nw, nd + nw))
    for i in range(nd + nw):
        for j in range(nd + nw):
            if i == j:
                a[i, j] = 1.0
            elif i >= nd and j >= nd:
                wi, wj = vocab[i - nd], vocab[j - nd]
                c = pair[frozenset((wi, wj))]
                if c:
                    v = math.log((float(c) * float(total)) / (float(single[wi]) * float(single[wj])))
                    a[i, j] = v if v > 0 else 0.0
            elif i < nd <= j or j < nd <= i:
                d, w = (i, vocab[j - nd]) if i < nd else (j, vocab[i - nd])
                tf = token_lists[d].count(w)
                df = sum(w in toks for toks in token_lists)
                a[i, j] = tf * math.log(nd / df)
    return a


class TestCountWindows:
    def test_short_document_single_window(self):
        s = count_windows(make_corpus([["a", "b"]]), 20)
        assert s.total_windows == 1
        assert s.word_windows.tolist() == [1, 1]
        assert s.pair_windows(0, 1) == 1

    def test_repeated_term_counts_once(self):
        s = count_windows(make_corpus([["a", "b", "a"]]), 2)
        assert s.total_windows == 2
        assert s.word_windows.tolist() == [2, 2]
        assert s.pair_windows(0, 1) == 2 and s.pair_windows(1, 0) == 2

    def test_windows_do_not_cross_documents(self):
        s = count_windows(make_corpus([["a", "b"], ["c", "d"]]), 3)
        assert s.total_windows == 2
        assert s.pair_windows(1, 2) == 0
        assert set(s.as_dict()) == {(0, 1), (2, 3)}

    @pytest.mark.parametrize("seed", range(5))
    def test_random_document_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        toks = list(rng.choice(list("abcde"), size=30))
        c = make_corpus([toks])
        s = count_windows(c, 3)
        total, single, pair = brute_windows([toks], 3)
        terms = c.vocabulary.terms
        assert s.total_windows == total == 28
        assert {terms[t]: int(n) for t, n in enumerate(s.word_windows)} == dict(single)
        got = {frozenset((terms[i], terms[j])): n for (i, j), n in s.as_dict().items()}
        assert got == dict(pair)

    def test_window_too_small(self):
        with pytest.raises(ValueError):
            count_windows(make_corpus([["a", "b"]]), 1)

    def test_chunked_counting_matches(self, monkeypatch):
        import textgcn.graph as graph_mod

        rng = np.random.default_rng(4)
        docs = [list(rng.choice(list("abcdefgh"), size=rng.integers(1, 25))) for _ in range(40)]
        c = make_corpus(docs)
        whole = count_windows(c, 5)
        monkeypatch.setattr(graph_mod, "_KEY_BUDGET", 12)
        chunked = count_windows(c, 5)
        assert whole.total_windows == chunked.total_windows
        assert np.array_equal(whole.word_windows, chunked.word_windows)
        assert whole.as_dict() == chunked.as_dict()

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=12), min_size=1, max_size=6),
        st.integers(2, 8),
    )
    def test_count_invariants(self, docs, window):
        s = count_windows(make_corpus(docs), window)
        assert np.all(s.word_windows >= 1)
        assert np.all(s.word_windows <= s.total_windows)
        assert np.all(s.pair_i < s.pair_j)
        bound = np.minimum(s.word_windows[s.pair_i], s.word_windows[s.pair_j])
        assert np.all(s.pair_count <= bound)
        total, single, pair = brute_windows(docs, window)
        assert s.total_windows == total
        assert sum(s.pair_count.tolist()) == sum(pair.values())


def stats_of(total, word, pairs):
    keys = sorted(pairs)
    return CooccurrenceStats(
        total,
        np.array(word, dtype=np.int64),
        np.array([k[0] for k in keys], dtype=np.int64),
        np.array([k[1] for k in keys], dtype=np.int64),
        np.array([pairs[k] for k in keys], dtype=np.int64),
    )


class TestPmi:
    def test_zero_pmi_is_absent(self):
        assert pmi(stats_of(1, [1, 1], {(0, 1): 1}), 0, 1) is None

    def test_log_two(self):
        s = stats_of(4, [1, 2], {(0, 1): 1})
        assert pmi(s, 0, 1) == pytest.approx(math.log(2), abs=1e-15)
        assert pmi(s, 1, 0) == pmi(s, 0, 1)
        i, j, v = pmi_edges(s)
        assert (i.tolist(), j.tolist()) == ([0], [1]) and v[0] == pmi(s, 0, 1)

    def test_no_cooccurrence(self):
        assert pmi(stats_of(4, [1, 2], {}), 0, 1) is None

    def test_negative_pmi_absent(self):
        s = stats_of(4, [3, 3], {(0, 1): 2})
        assert pmi(s, 0, 1) is None
        assert len(pmi_edges(s)[2]) == 0

    def test_self_pair_is_error(self):
        with pytest.raises(ValueError):
            pmi(stats_of(4, [1, 2], {}), 1, 1)

    def test_missing_term_is_error(self):
        with pytest.raises(ValueError):
            pmi(stats_of(4, [1, 0], {}), 0, 1)


class TestTfidf:
    def test_hand_value(self):
        c = make_corpus([["a", "a", "b"], ["b"]])
        assert tfidf(c, 0, 0) == pytest.approx(2 * math.log(2), abs=1e-15)

    def test_absent_term(self):
        c = make_corpus([["a", "b"], ["b"]])
        assert tfidf(c, 1, 0) is None

    def test_everywhere_term_has_no_edge(self):
        c = make_corpus([["a", "b"], ["b"]])
        assert tfidf(c, 0, 1) is None

    def test_index_errors(self):
        c = make_corpus([["a"]])
        with pytest.raises(IndexError):
            tfidf(c, 1, 0)
        with pytest.raises(IndexError):
            tfidf(c, 0, 3)


class TestBuildGraph:
    def test_single_document(self):
        g = build_graph(make_corpus([["a"]]), 20)
        assert g.node_count == 2
        assert g.adjacency.to_dense().tolist() == [[1.0, 0.0], [0.0, 1.0]]

    def test_two_documents_by_hand(self):
        g = build_graph(make_corpus([["a", "b"], ["b", "c"]]), 20)
        a = g.adjacency.to_dense()
        l2 = math.log(2)
        # docs 0,1 then words a=2, b=3, c=4; #W = 2, #W(a)=#W(c)=1, #W(b)=2
        expected = np.eye(5)
        expected[0, 2] = expected[2, 0] = l2
        expected[1, 4] = expected[4, 1] = l2
        # PMI(a,c): never together; PMI(a,b) = log(1*2/(1*2)) = 0, likewise (b,c)
        assert np.array_equal(a, expected)
        assert g.summary["doc_word_edges"] == 2 and g.summary["word_word_edges"] == 0

    def test_node_ordering_contract(self):
        c = make_corpus([["p", "q", "q"], ["q", "r"], ["s"]])
        g = build_graph(c, 20)
        a = g.adjacency.to_dense()
        for d in range(c.num_documents):
            for t in range(len(c.vocabulary)):
                w = tfidf(c, d, t)
                assert a[d, g.word_node(t)] == (w if w is not None else 0.0)

    @pytest.mark.parametrize("seed", range(50))
    def test_dense_oracle_exact(self, seed):
        rng = np.random.default_rng(seed)
        n_docs = int(rng.integers(1, 7))
        vocab = list("abcdefghij")[: int(rng.integers(2, 11))]
        docs = [list(rng.choice(vocab, size=int(rng.integers(1, 15)))) for _ in range(n_docs)]
        window = int(rng.integers(2, 8))
        g = build_graph(make_corpus(docs), window)
        assert g.node_count <= 50
        assert np.array_equal(g.adjacency.to_dense(), dense_oracle(docs, window))

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=20), min_size=1, max_size=8),
        st.integers(2, 10),
    )
    def test_structure(self, docs, window):
        c = make_corpus(docs)
        g = build_graph(c, window)
        a = g.adjacency
        dense = a.to_dense()
        nd = c.num_documents
        assert a.is_symmetric()
        assert np.all(a.diagonal() == 1.0)
        off = dense - np.diag(np.diag(dense))
        assert not np.any(off[:nd, :nd])
        assert np.all(dense >= 0.0)
        stats = count_windows(c, window)
        rows, cols, vals = a.triplets()
        ww = (rows >= nd) & (cols >= nd) & (rows < cols)
        for i, j, v in zip(rows[ww], cols[ww], vals[ww]):
            assert pmi(stats, i - nd, j - nd) == v > 0.0
        assert g.normalized.is_symmetric()
        assert g.summary["nnz"] == a.nnz
        assert g.summary["nodes"] == nd + len(c.vocabulary)

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        docs = [list(rng.choice(list("abcdefgh"), size=20)) for _ in range(10)]
        g1, g2 = build_graph(make_corpus(docs), 5), build_graph(make_corpus(docs), 5)
        assert g1.adjacency == g2.adjacency and g1.normalized == g2.normalized


def test_write_graph(tmp_path):
    c = make_corpus([["a", "b"], ["b", "c"], ["c", "d", "a"]])
    g = build_graph(c, 20)
    write_graph(tmp_path, g, c)
    assert read_matrix_market(tmp_path / "adjacency.mtx") == g.adjacency
    assert read_matrix_market(tmp_path / "normalized.mtx") == g.normalized
    lines = (tmp_path / "nodes.tsv").read_text().splitlines()
    assert lines[:3] == ["0\tdoc\tdoc0", "1\tdoc\tdoc1", "2\tdoc\tdoc2"]
    assert lines[3:] == ["3\tword\ta", "4\tword\tb", "5\tword\tc", "6\tword\td"]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary == g.summary
