"""Corpus ingestion: cleaning, tokenization, vocabulary and splits.

A corpus is read from two aligned UTF-8 files: one raw document per line,
and a tab-separated metadata line ``doc_name<TAB>split<TAB>label`` for each
document.  Preprocessing follows the usual sentence-classification cleaning
rules (lowercase, contractions split, punctuation isolated or dropped),
optionally followed by stop-word and rare-term removal.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CorpusError",
    "Document",
    "Vocabulary",
    "Corpus",
    "PreprocessOptions",
    "tokenize",
    "load_stopwords",
    "build_corpus",
    "corpus_from_texts",
    "split_validation",
]

SPLITS = ("train", "test")


class CorpusError(ValueError):
    """Raised for malformed corpus inputs."""


_CLEAN_RULES: tuple[tuple[re.Pattern[str], str], ...] = (
    (re.compile(r"[^A-Za-z0-9(),!?'`]"), " "),
    (re.compile(r"'s"), " 's"),
    (re.compile(r"'ve"), " 've"),
    (re.compile(r"n't"), " n't"),
    (re.compile(r"'re"), " 're"),
    (re.compile(r"'d"), " 'd"),
    (re.compile(r"'ll"), " 'll"),
    (re.compile(r","), " , "),
    (re.compile(r"!"), " ! "),
    (re.compile(r"\("), " ( "),
    (re.compile(r"\)"), " ) "),
    (re.compile(r"\?"), " ? "),
)


def tokenize(raw_text: str) -> list[str]:
    """Clean and split one raw document into lowercase tokens.

    >>> tokenize("I don't like it.")
    ['i', 'do', "n't", 'like', 'it']
    """
    text = unicodedata.normalize("NFC", raw_text)
    for pattern, repl in _CLEAN_RULES:
        text = pattern.sub(repl, text)
    return text.lower().split()


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read a stop-word list, one word per line. Defaults to the bundled English list."""
    if path is None:
        text = resources.files("textgcn").joinpath("data/stopwords_en.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@dataclass(frozen=True)
class PreprocessOptions:
    filter_enabled: bool = True
    min_term_freq: int = 5
    stopwords_path: str | None = None

    def __post_init__(self):
        if self.min_term_freq < 1:
            raise CorpusError(f"min_term_freq must be >= 1, got {self.min_term_freq}")


@dataclass(frozen=True)
class Document:
    id: int
    tokens: np.ndarray
    split: str
    label: int
    name: str = ""


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    doc_freq: np.ndarray
    index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if not self.index:
            object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    vocabulary: Vocabulary
    label_names: tuple[str, ...]

    @property
    def num_classes(self) -> int:
        return len(self.label_names)

    @property
    def num_documents(self) -> int:
        return len(self.documents)

    @property
    def num_nodes(self) -> int:
        return len(self.documents) + len(self.vocabulary)

    @property
    def labels(self) -> np.ndarray:
        return np.array([d.label for d in self.documents], dtype=np.int64)

    def indices(self, split: str) -> np.ndarray:
        if split not in SPLITS:
            raise CorpusError(f"unknown split {split!r}")
        return np.array([d.id for d in self.documents if d.split == split], dtype=np.int64)

    def label_matrix(self) -> np.ndarray:
        """One-hot label indicator over documents, shape (#docs, F)."""
        y = np.zeros((self.num_documents, self.num_classes))
        y[np.arange(self.num_documents), self.labels] = 1.0
        return y

    def stats(self) -> dict:
        lengths = [len(d.tokens) for d in self.documents]
        return {
            "documents": self.num_documents,
            "train": int(len(self.indices("train"))),
            "test": int(len(self.indices("test"))),
            "words": len(self.vocabulary),
            "nodes": self.num_nodes,
            "classes": self.num_classes,
            "average_length": float(np.mean(lengths)) if lengths else 0.0,
        }


def _read_lines(path: str | Path) -> list[str]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line.rstrip("\r") for line in lines]


def _parse_metadata(lines: Sequence[str]) -> list[tuple[str, str, str]]:
    rows = []
    for lineno, line in enumerate(lines, 1):
        parts = line.split("\t")
        if len(parts) != 3:
            raise CorpusError(f"metadata line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
        name, split, label = parts
        if split not in SPLITS:
            raise CorpusError(f"metadata line {lineno}: unknown split {split!r}")
        rows.append((name, split, label))
    return rows


def corpus_from_texts(
    texts: Sequence[str],
    metadata: Sequence[tuple[str, str, str]],
    options: PreprocessOptions = PreprocessOptions(),
) -> Corpus:
    """Build a corpus from in-memory raw texts and ``(name, split, label)`` rows."""
    if len(texts) != len(metadata):
        raise CorpusError(
            f"line-count mismatch: {len(texts)} documents vs {len(metadata)} metadata rows"
        )
    if not texts:
        raise CorpusError("corpus is empty")
    for lineno, (_, split, _) in enumerate(metadata, 1):
        if split not in SPLITS:
            raise CorpusError(f"metadata line {lineno}: unknown split {split!r}")

    tokenized = [tokenize(t) for t in texts]

    if options.filter_enabled:
        stop = load_stopwords(options.stopwords_path)
        freq = Counter(tok for toks in tokenized for tok in toks)
        keep = {w for w, c in freq.items() if c >= options.min_term_freq and w not in stop}
        tokenized = [[t for t in toks if t in keep] for toks in tokenized]

    terms: dict[str, int] = {}
    for toks in tokenized:
        for t in toks:
            if t not in terms:
                terms[t] = len(terms)

    label_names = tuple(sorted({label for _, _, label in metadata}))
    label_index = {name: i for i, name in enumerate(label_names)}

    doc_freq = np.zeros(len(terms), dtype=np.int64)
    documents = []
    for i, (toks, (name, split, label)) in enumerate(zip(tokenized, metadata)):
        if not toks:
            raise CorpusError(f"document on line {i + 1} ({name!r}) is empty after preprocessing")
        ids = np.fromiter((terms[t] for t in toks), dtype=np.int64, count=len(toks))
        doc_freq[np.unique(ids)] += 1
        documents.append(Document(i, ids, split, label_index[label], name))

    train_labels = {d.label for d in documents if d.split == "train"}
    missing = [label_names[c] for c in range(len(label_names)) if c not in train_labels]
    if missing:
        raise CorpusError(f"classes without training documents: {missing}")

    vocab = Vocabulary(tuple(terms), doc_freq, dict(terms))
    return Corpus(tuple(documents), vocab, label_names)


def build_corpus(
    documents_path: str | Path,
    metadata_path: str | Path,
    options: PreprocessOptions = PreprocessOptions(),
) -> Corpus:
    """Read and preprocess a corpus from its documents and metadata files."""
    texts = _read_lines(documents_path)
    meta = _parse_metadata(_read_lines(metadata_path))
    return corpus_from_texts(texts, meta, options)


def split_validation(
    corpus: Corpus | Iterable[int], fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Randomly hold out ``fraction`` of the training documents for validation.

    ``corpus`` may also be a plain collection of training document ids.
    Returns sorted ``(train_ids, validation_ids)``.
    """
    if not 0.0 < fraction < 1.0:
        raise CorpusError(f"validation fraction must lie in (0, 1), got {fraction}")
    if isinstance(corpus, Corpus):
        train = corpus.indices("train")
    else:
        train = np.asarray(list(corpus), dtype=np.int64)
    if len(train) < 2:
        raise CorpusError("need at least two training documents to split")
    n_val = int(np.floor(fraction * len(train) + 0.5))
    n_val = min(max(n_val, 1), len(train) - 1)
    perm = np.random.default_rng(seed).permutation(train)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])
