"""Text classification with a graph convolutional network over a document-word graph."""

from .corpus import (
    Corpus,
    CorpusError,
    Document,
    PreprocessOptions,
    Vocabulary,
    build_corpus,
    corpus_from_texts,
    split_validation,
    tokenize,
)
from .gcn import AdamState, ForwardCache, GcnModel, adam_step, backward, forward, glorot_init, loss
from .graph import CooccurrenceStats, TextGraph, build_graph, count_windows, pmi, tfidf
from .sparse import CsrMatrix, from_triplets, normalize_symmetric, spmm, spmm_transpose
from .trainer import TrainConfig, TrainReport, evaluate, run_replicates, tfidf_lr_baseline, train_once

__version__ = "0.1.0"
