"""Two-layer graph convolutional classifier with hand-written gradients.

The model computes ``Z = softmax(A relu(A W0) W1)`` where ``A`` is the
normalized adjacency.  Node features are one-hot, so the first layer's input
product ``A X W0`` is simply ``A W0`` and ``W0`` doubles as a node embedding
table.  No biases.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .sparse import CsrMatrix, spmm, spmm_transpose

__all__ = [
    "GcnModel",
    "ForwardCache",
    "AdamState",
    "NonFiniteError",
    "glorot_init",
    "init_model",
    "forward",
    "softmax",
    "loss",
    "backward",
    "adam_step",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_FORMAT = "textgcn-checkpoint"
CHECKPOINT_VERSION = 1


class NonFiniteError(FloatingPointError):
    """Activations, losses or gradients stopped being finite."""


@dataclass
class GcnModel:
    w0: np.ndarray
    w1: np.ndarray
    dropout: float = 0.5
    seed: int = 0

    def __post_init__(self):
        self.w0 = np.asarray(self.w0, dtype=np.float64)
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        if self.w0.ndim != 2 or self.w1.ndim != 2 or self.w0.shape[1] != self.w1.shape[0]:
            raise ValueError(f"inconsistent weight shapes {self.w0.shape} and {self.w1.shape}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")

    @property
    def num_nodes(self) -> int:
        return self.w0.shape[0]

    @property
    def embedding_dim(self) -> int:
        return self.w0.shape[1]

    @property
    def num_classes(self) -> int:
        return self.w1.shape[1]

    def copy(self) -> GcnModel:
        return GcnModel(self.w0.copy(), self.w1.copy(), self.dropout, self.seed)


@dataclass
class ForwardCache:
    e1_pre: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    z: np.ndarray
    keep_mask: np.ndarray | None = None
    training: bool = False


@dataclass
class AdamState:
    m0: np.ndarray
    v0: np.ndarray
    m1: np.ndarray
    v1: np.ndarray
    step: int = 0
    lr: float = 0.02
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    l2_weight: float = 0.0

    @classmethod
    def for_model(cls, model: GcnModel, **hyper) -> AdamState:
        return cls(
            np.zeros_like(model.w0), np.zeros_like(model.w0),
            np.zeros_like(model.w1), np.zeros_like(model.w1),
            **hyper,
        )


def glorot_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform weights in ``+-sqrt(6 / (rows + cols))``."""
    if rows < 1 or cols < 1:
        raise ValueError(f"dimensions must be positive, got {rows}x{cols}")
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def init_model(num_nodes: int, embedding_dim: int, num_classes: int,
               dropout: float = 0.5, seed: int = 0,
               rng: np.random.Generator | None = None) -> GcnModel:
    if rng is None:
        rng = np.random.default_rng(seed)
    w0 = glorot_init(num_nodes, embedding_dim, rng)
    w1 = glorot_init(embedding_dim, num_classes, rng)
    return GcnModel(w0, w1, dropout, seed)


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(model: GcnModel, a_norm: CsrMatrix, training: bool = False,
            rng: np.random.Generator | None = None, e1_pre: np.ndarray | None = None) -> ForwardCache:
    """Run both layers. Training mode applies inverted dropout to the hidden layer.

    ``e1_pre`` may carry an already computed ``a_norm @ w0`` for the current weights.
    """
    if a_norm.shape != (model.num_nodes, model.num_nodes):
        raise ValueError(f"adjacency {a_norm.shape} does not match {model.num_nodes} model nodes")
    if e1_pre is None:
        e1_pre = spmm(a_norm, model.w0)
    elif e1_pre.shape != (model.num_nodes, model.embedding_dim):
        raise ValueError("precomputed first layer has the wrong shape")
    e1 = np.maximum(e1_pre, 0.0)
    keep_mask = None
    if training and model.dropout > 0.0:
        if rng is None:
            raise ValueError("training-mode forward needs a seeded generator")
        keep = 1.0 - model.dropout
        keep_mask = rng.random(e1.shape) < keep
        e1 = np.where(keep_mask, e1 / keep, 0.0)
    # A (E1 W1) == (A E1) W1, and the right-hand side is F columns wide instead of k
    e2 = spmm(a_norm, e1 @ model.w1)
    if not np.all(np.isfinite(e2)):
        raise NonFiniteError("non-finite logits in forward pass")
    return ForwardCache(e1_pre, e1, e2, softmax(e2), keep_mask, training)


def _check_mask(mask, labels, n_nodes: int) -> np.ndarray:
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("loss mask is empty")
    if mask.min() < 0 or mask.max() >= min(len(labels), n_nodes):
        raise ValueError("loss mask refers to nodes without labels")
    return mask


def loss(cache: ForwardCache, labels, mask) -> float:
    """Mean cross-entropy over the masked (labeled) documents.

    ``labels`` holds one class index per document node.
    """
    labels = np.asarray(labels, dtype=np.int64)
    mask = _check_mask(mask, labels, len(cache.z))
    picked = cache.z[mask, labels[mask]]
    value = float(-np.mean(np.log(picked)))
    if not np.isfinite(value):
        raise NonFiniteError("non-finite loss")
    return value


def backward(model: GcnModel, a_norm: CsrMatrix, cache: ForwardCache, labels, mask,
             symmetric: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of :func:`loss` with respect to ``(w0, w1)``.

    ``symmetric`` lets the transposed products reuse ``a_norm`` directly.
    """
    labels = np.asarray(labels, dtype=np.int64)
    mask = _check_mask(mask, labels, len(cache.z))
    if cache.e1.shape != (model.num_nodes, model.embedding_dim) or cache.z.shape[1] != model.num_classes:
        raise ValueError("forward cache does not belong to this model")

    g2 = np.zeros_like(cache.z)
    g2[mask] = cache.z[mask]
    g2[mask, labels[mask]] -= 1.0
    g2 /= len(mask)

    d_p = spmm_transpose(a_norm, g2, symmetric=symmetric)   # dL/d(E1 W1)
    d_w1 = cache.e1.T @ d_p
    d_e1 = d_p @ model.w1.T
    if cache.keep_mask is not None:
        d_e1 = np.where(cache.keep_mask, d_e1 / (1.0 - model.dropout), 0.0)
    d_e1 *= cache.e1_pre > 0.0
    d_w0 = spmm_transpose(a_norm, d_e1, symmetric=symmetric)
    return d_w0, d_w1


def adam_step(model: GcnModel, state: AdamState, gradients) -> None:
    """Apply one bias-corrected Adam update to ``model`` in place.

    A nonzero ``state.l2_weight`` adds a decoupled ``lr * l2 * w`` shrinkage.
    """
    d_w0, d_w1 = gradients
    if d_w0.shape != model.w0.shape or d_w1.shape != model.w1.shape:
        raise ValueError("gradient shapes do not match parameters")
    if not (np.all(np.isfinite(d_w0)) and np.all(np.isfinite(d_w1))):
        raise NonFiniteError("non-finite gradient")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1, c2 = 1.0 - b1 ** t, 1.0 - b2 ** t
    for w, g, m, v in ((model.w0, d_w0, state.m0, state.v0), (model.w1, d_w1, state.m1, state.v1)):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        if state.l2_weight:
            w -= state.lr * state.l2_weight * w
        w -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def save_checkpoint(path: str | Path, model: GcnModel, extra: dict | None = None) -> None:
    """Write a JSON checkpoint.

    Fields: ``format``, ``version``, ``num_nodes``, ``embedding_dim``,
    ``num_classes``, ``dropout``, ``seed``, ``w0`` and ``w1`` (row-major nested
    lists), and a free-form ``extra`` mapping.  Floats are written in shortest
    round-trip form, so loading gives back bit-identical weights.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "num_nodes": model.num_nodes,
        "embedding_dim": model.embedding_dim,
        "num_classes": model.num_classes,
        "dropout": model.dropout,
        "seed": model.seed,
        "w0": model.w0.tolist(),
        "w1": model.w1.tolist(),
        "extra": extra or {},
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[GcnModel, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a model checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    model = GcnModel(np.array(doc["w0"], dtype=np.float64).reshape(doc["num_nodes"], doc["embedding_dim"]),
                     np.array(doc["w1"], dtype=np.float64).reshape(doc["embedding_dim"], doc["num_classes"]),
                     doc["dropout"], doc["seed"])
    return model, doc.get("extra", {})
