"""Embedding export, top words per class and hyperparameter sweeps."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .gcn import GcnModel, forward
from .graph import TextGraph, build_graph
from .trainer import TrainConfig, run_replicates

__all__ = [
    "EmbeddingExport",
    "embeddings",
    "export_embeddings",
    "read_embeddings",
    "top_words",
    "format_top_words",
    "sweep",
    "sweep_csv",
]

SWEEP_PARAMETERS = ("window_size", "embedding_dim")


@dataclass
class EmbeddingExport:
    layer: str
    node_ids: np.ndarray
    kinds: list[str]
    names: list[str]
    labels: list[str]
    vectors: np.ndarray


def embeddings(model: GcnModel, graph: TextGraph, corpus: Corpus, layer: str = "second") -> EmbeddingExport:
    """Evaluation-mode node embeddings.

    ``first`` gives the post-ReLU hidden layer (k columns), ``second`` the
    pre-softmax logits (F columns).  Documents carry their gold label; words
    carry the class of their largest second-layer value.
    """
    if layer not in ("first", "second"):
        raise ValueError(f"layer must be 'first' or 'second', got {layer!r}")
    cache = forward(model, graph.normalized, training=False)
    vectors = cache.e1 if layer == "first" else cache.e2
    word_class = np.argmax(cache.e2[graph.num_documents:], axis=1)
    names = [d.name for d in corpus.documents] + list(corpus.vocabulary.terms)
    kinds = ["doc"] * graph.num_documents + ["word"] * graph.num_words
    labels = [corpus.label_names[d.label] for d in corpus.documents]
    labels += [corpus.label_names[c] for c in word_class]
    return EmbeddingExport(layer, np.arange(graph.node_count), kinds, names, labels, vectors)


def export_embeddings(path: str | Path, model: GcnModel, graph: TextGraph, corpus: Corpus,
                      layer: str = "second", trained: bool = True) -> EmbeddingExport:
    """Write embeddings as TSV: ``node_id kind name label v0 .. v{d-1}``."""
    exp = embeddings(model, graph, corpus, layer)
    dims = exp.vectors.shape[1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# layer={layer}\n")
        if not trained:
            fh.write("# untrained: weights are at initialization\n")
        fh.write("\t".join(["node_id", "kind", "name", "label"] + [f"v{i}" for i in range(dims)]) + "\n")
        for i in range(graph.node_count):
            vals = "\t".join(repr(float(v)) for v in exp.vectors[i])
            fh.write(f"{i}\t{exp.kinds[i]}\t{exp.names[i]}\t{exp.labels[i]}\t{vals}\n")
    return exp


def read_embeddings(path: str | Path) -> EmbeddingExport:
    layer = "second"
    rows = []
    header = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                if line.startswith("# layer="):
                    layer = line.split("=", 1)[1]
                continue
            if header is None:
                header = line.split("\t")
                continue
            rows.append(line.split("\t"))
    return EmbeddingExport(
        layer,
        np.array([int(r[0]) for r in rows], dtype=np.int64),
        [r[1] for r in rows],
        [r[2] for r in rows],
        [r[3] for r in rows],
        np.array([[float(v) for v in r[4:]] for r in rows]).reshape(len(rows), len(header) - 4),
    )


def top_words(model: GcnModel, graph: TextGraph, corpus: Corpus, top_k: int = 10) -> dict[str, list[tuple[str, float]]]:
    """Highest-valued words per class in the second-layer embeddings."""
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    if top_k > graph.num_words:
        raise ValueError(f"top_k={top_k} exceeds vocabulary size {graph.num_words}")
    e2 = forward(model, graph.normalized, training=False).e2[graph.num_documents:]
    table = {}
    for c, name in enumerate(corpus.label_names):
        # stable sort on the negated column: equal values keep vocabulary order
        order = np.argsort(-e2[:, c], kind="stable")[:top_k]
        table[name] = [(corpus.vocabulary.terms[w], float(e2[w, c])) for w in order]
    return table


def format_top_words(table: dict[str, list[tuple[str, float]]]) -> str:
    lines = ["class\trank\tword\tvalue"]
    for name, items in table.items():
        lines += [f"{name}\t{r}\t{w}\t{v!r}" for r, (w, v) in enumerate(items, 1)]
    return "\n".join(lines) + "\n"


def sweep(corpus: Corpus, config: TrainConfig, parameter: str, values,
          graph: TextGraph | None = None) -> list[tuple[int, float, float]]:
    """``(value, mean, std)`` rows, one per parameter value, in ascending order.

    Window sweeps rebuild the graph per value; dimension sweeps share one graph.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"cannot sweep {parameter!r}; choose one of {SWEEP_PARAMETERS}")
    values = sorted({int(v) for v in values})
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    for v in values:
        cfg = replace(config, **{parameter: v})
        if parameter == "window_size":
            g = build_graph(corpus, v)
        else:
            g = graph if graph is not None else build_graph(corpus, cfg.window_size)
            graph = g
        report = run_replicates(corpus, cfg, g)
        rows.append((v, report.mean, report.std))
    return rows


def sweep_csv(parameter: str, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([parameter, "mean", "std"])
    for value, mean, std in rows:
        w.writerow([value, repr(mean), repr(std)])
    return buf.getvalue()
