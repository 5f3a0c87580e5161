"""Heterogeneous document-word graph construction.

Nodes are all documents followed by all vocabulary words, so word ``w`` is
node ``num_documents + w``.  Edge weights:

* word-word: positive PMI from sliding-window co-occurrence,
* document-word: raw term count times ``log(N / df)``,
* every node: a unit self-loop.

Non-positive PMI and zero TF-IDF weights produce no edge at all.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .corpus import Corpus
from .sparse import CsrMatrix, from_triplets, normalize_symmetric, write_matrix_market

__all__ = [
    "CooccurrenceStats",
    "TextGraph",
    "count_windows",
    "pmi",
    "tfidf",
    "pmi_edges",
    "tfidf_edges",
    "build_graph",
    "write_graph",
]

# bound on pair keys materialized at once while counting windows
_KEY_BUDGET = 8_000_000


@dataclass(frozen=True, eq=False)
class CooccurrenceStats:
    """Window counts: total, per term, and per unordered term pair (i < j)."""

    total_windows: int
    word_windows: np.ndarray
    pair_i: np.ndarray
    pair_j: np.ndarray
    pair_count: np.ndarray

    @property
    def num_terms(self) -> int:
        return len(self.word_windows)

    def pair_windows(self, i: int, j: int) -> int:
        """``#W(i, j)``; zero for pairs that never share a window."""
        if i == j:
            raise ValueError("pair counts are defined for distinct terms only")
        i, j = min(i, j), max(i, j)
        keys = self.pair_i * self.num_terms + self.pair_j
        key = i * self.num_terms + j
        pos = np.searchsorted(keys, key)
        if pos < len(keys) and keys[pos] == key:
            return int(self.pair_count[pos])
        return 0

    def as_dict(self) -> dict[tuple[int, int], int]:
        return {
            (int(i), int(j)): int(c)
            for i, j, c in zip(self.pair_i, self.pair_j, self.pair_count)
        }


@numba.njit(cache=True)
def _window_keys(tokens, offsets, window, n_terms, word_windows, key_capacity):
    keys = np.empty(key_capacity, dtype=np.int64)
    seen = np.full(n_terms, -1, dtype=np.int64)
    uniq = np.empty(window, dtype=np.int64)
    n_keys = 0
    n_windows = 0
    for d in range(len(offsets) - 1):
        start, stop = offsets[d], offsets[d + 1]
        length = stop - start
        span = min(length, window)
        for s in range(start, stop - span + 1):
            wid = n_windows
            n_windows += 1
            m = 0
            for p in range(s, s + span):
                t = tokens[p]
                if seen[t] != wid:
                    seen[t] = wid
                    uniq[m] = t
                    m += 1
            for a in range(m):
                word_windows[uniq[a]] += 1
                for b in range(a + 1, m):
                    x, y = uniq[a], uniq[b]
                    if x < y:
                        keys[n_keys] = x * n_terms + y
                    else:
                        keys[n_keys] = y * n_terms + x
                    n_keys += 1
    return n_windows, keys[:n_keys]


def _pair_bound(length: int, window: int) -> int:
    span = min(length, window)
    return max(1, length - window + 1) * span * (span - 1) // 2


def count_windows(corpus: Corpus, window_size: int) -> CooccurrenceStats:
    """Slide a window of ``window_size`` tokens (stride 1) over every document.

    Windows never cross documents; a document shorter than the window yields a
    single window holding all of it.  A term counts once per window however
    often it repeats there.
    """
    if window_size < 2:
        raise ValueError(f"window_size must be >= 2, got {window_size}")
    n_terms = len(corpus.vocabulary)
    word_windows = np.zeros(n_terms, dtype=np.int64)
    total = 0
    chunk_keys: list[np.ndarray] = []
    chunk_counts: list[np.ndarray] = []

    docs = corpus.documents
    start = 0
    while start < len(docs):
        stop, budget = start, 0
        while stop < len(docs):
            need = _pair_bound(len(docs[stop].tokens), window_size)
            if budget and budget + need > _KEY_BUDGET:
                break
            budget += need
            stop += 1
        toks = [d.tokens for d in docs[start:stop]]
        offsets = np.concatenate(([0], np.cumsum([len(t) for t in toks]))).astype(np.int64)
        n_win, keys = _window_keys(
            np.concatenate(toks).astype(np.int64), offsets, window_size, n_terms, word_windows, budget
        )
        total += int(n_win)
        k, c = np.unique(keys, return_counts=True)
        chunk_keys.append(k)
        chunk_counts.append(c)
        start = stop

    if chunk_keys:
        all_keys = np.concatenate(chunk_keys)
        keys, inverse = np.unique(all_keys, return_inverse=True)
        counts = np.bincount(inverse, weights=np.concatenate(chunk_counts)).astype(np.int64)
    else:
        keys = np.zeros(0, dtype=np.int64)
        counts = np.zeros(0, dtype=np.int64)
    return CooccurrenceStats(total, word_windows, keys // max(n_terms, 1), keys % max(n_terms, 1), counts)


def _pmi_value(pair: float, total: float, wi: float, wj: float) -> float:
    return math.log((pair * total) / (wi * wj))


def pmi(stats: CooccurrenceStats, i: int, j: int) -> float | None:
    """Positive PMI of terms ``i`` and ``j``, or ``None`` when there is no edge."""
    if i == j:
        raise ValueError("PMI is not defined as an edge for a term with itself")
    for t in (i, j):
        if not 0 <= t < stats.num_terms or stats.word_windows[t] == 0:
            raise ValueError(f"term {t} does not occur in the corpus")
    pair = stats.pair_windows(i, j)
    if pair == 0:
        return None
    value = _pmi_value(
        float(pair), float(stats.total_windows),
        float(stats.word_windows[i]), float(stats.word_windows[j]),
    )
    return value if value > 0.0 else None


def pmi_edges(stats: CooccurrenceStats) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All positive-PMI term pairs as ``(i, j, weight)`` with ``i < j``."""
    wi = stats.word_windows[stats.pair_i].astype(np.float64)
    wj = stats.word_windows[stats.pair_j].astype(np.float64)
    ratio = (stats.pair_count.astype(np.float64) * float(stats.total_windows)) / (wi * wj)
    values = np.fromiter((math.log(r) for r in ratio.tolist()), dtype=np.float64, count=len(ratio))
    keep = values > 0.0
    return stats.pair_i[keep], stats.pair_j[keep], values[keep]


def _idf(corpus: Corpus) -> np.ndarray:
    n = float(corpus.num_documents)
    return np.array([math.log(n / float(df)) for df in corpus.vocabulary.doc_freq.tolist()])


def tfidf(corpus: Corpus, doc: int, term: int) -> float | None:
    """TF-IDF weight of ``term`` in document ``doc``; ``None`` when zero."""
    if not 0 <= doc < corpus.num_documents:
        raise IndexError(f"document index {doc} out of range")
    if not 0 <= term < len(corpus.vocabulary):
        raise IndexError(f"term index {term} out of range")
    tf = int(np.count_nonzero(corpus.documents[doc].tokens == term))
    if tf == 0:
        return None
    df = float(corpus.vocabulary.doc_freq[term])
    value = float(tf) * math.log(float(corpus.num_documents) / df)
    return value if value > 0.0 else None


def tfidf_edges(corpus: Corpus) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All positive document-term weights as ``(doc, term, weight)``."""
    idf = _idf(corpus)
    docs, terms, values = [], [], []
    for d in corpus.documents:
        t, tf = np.unique(d.tokens, return_counts=True)
        docs.append(np.full(len(t), d.id, dtype=np.int64))
        terms.append(t)
        values.append(tf.astype(np.float64) * idf[t])
    docs_a, terms_a, values_a = (np.concatenate(x) for x in (docs, terms, values))
    keep = values_a > 0.0
    return docs_a[keep], terms_a[keep], values_a[keep]


@dataclass(frozen=True, eq=False)
class TextGraph:
    adjacency: CsrMatrix
    normalized: CsrMatrix
    num_documents: int
    num_words: int
    summary: dict = field(default_factory=dict)

    @property
    def node_count(self) -> int:
        return self.num_documents + self.num_words

    def word_node(self, term: int) -> int:
        return self.num_documents + term

    def is_document(self, node: int) -> bool:
        return node < self.num_documents


def build_graph(
    corpus: Corpus, window_size: int = 20, stats: CooccurrenceStats | None = None
) -> TextGraph:
    """Assemble the symmetric adjacency and its normalized form."""
    if corpus.num_documents == 0:
        raise ValueError("corpus is empty")
    if stats is None:
        stats = count_windows(corpus, window_size)
    nd, nw = corpus.num_documents, len(corpus.vocabulary)
    n = nd + nw

    wi, wj, wv = pmi_edges(stats)
    di, dt, dv = tfidf_edges(corpus)
    diag = np.arange(n, dtype=np.int64)

    rows = np.concatenate((diag, di, dt + nd, wi + nd, wj + nd))
    cols = np.concatenate((diag, dt + nd, di, wj + nd, wi + nd))
    vals = np.concatenate((np.ones(n), dv, dv, wv, wv))
    adjacency = from_triplets(rows, cols, vals, (n, n))

    summary = {
        "window_size": int(window_size),
        "nodes": int(n),
        "documents": int(nd),
        "words": int(nw),
        "doc_word_edges": int(len(dv)),
        "word_word_edges": int(len(wv)),
        "self_loops": int(n),
        "nnz": int(adjacency.nnz),
        "total_windows": int(stats.total_windows),
        "cooccurring_pairs": int(len(stats.pair_count)),
    }
    return TextGraph(adjacency, normalize_symmetric(adjacency), nd, nw, summary)


def write_graph(out_dir: str | Path, graph: TextGraph, corpus: Corpus) -> None:
    """Write both matrices, the node map and the build summary to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_market(out / "adjacency.mtx", graph.adjacency, symmetric=True)
    write_matrix_market(out / "normalized.mtx", graph.normalized, symmetric=True)
    with open(out / "nodes.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for d in corpus.documents:
            fh.write(f"{d.id}\tdoc\t{d.name}\n")
        for t, term in enumerate(corpus.vocabulary.terms):
            fh.write(f"{graph.word_node(t)}\tword\t{term}\n")
    (out / "summary.json").write_text(json.dumps(graph.summary, sort_keys=True) + "\n", encoding="utf-8")
