"""Training loop, replicated runs, label-fraction sweeps and the TF-IDF + LR baseline."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .corpus import Corpus, CorpusError, split_validation
from .gcn import (
    AdamState,
    GcnModel,
    NonFiniteError,
    adam_step,
    backward,
    forward,
    init_model,
    loss,
)
from .graph import TextGraph, build_graph, tfidf_edges
from .sparse import CsrMatrix, from_triplets, spmm

__all__ = [
    "TrainConfig",
    "EpochRecord",
    "RunResult",
    "TrainReport",
    "TrainingDiverged",
    "EarlyStopping",
    "training_split",
    "stratified_subsample",
    "train_once",
    "evaluate",
    "predict",
    "run_replicates",
    "label_fraction_sweep",
    "tfidf_features",
    "tfidf_lr_baseline",
]

log = logging.getLogger(__name__)

DEFAULT_SEEDS = tuple(range(10))


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    embedding_dim: int = 200
    window_size: int = 20
    learning_rate: float = 0.02
    dropout: float = 0.5
    l2_weight: float = 0.0
    max_epochs: int = 200
    patience: int = 10
    validation_fraction: float = 0.1
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    label_fraction: float = 1.0
    restore_best: bool = False

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.embedding_dim < 1:
            raise ValueError("embedding_dim must be positive")
        if self.window_size < 2:
            raise ValueError("window_size must be >= 2")
        if self.max_epochs < 1 or not 0 < self.patience < self.max_epochs:
            raise ValueError("need 0 < patience < max_epochs")
        if not 0.0 < self.label_fraction <= 1.0:
            raise ValueError(f"label_fraction must lie in (0, 1], got {self.label_fraction}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.learning_rate <= 0.0 or self.l2_weight < 0.0:
            raise ValueError("learning_rate must be positive and l2_weight non-negative")
        if not self.seeds:
            raise ValueError("at least one seed is required")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_acc: float


@dataclass
class RunResult:
    seed: int
    stopped_epoch: int
    test_accuracy: float
    history: list[EpochRecord] = field(default_factory=list)
    num_labeled: int = 0
    num_validation: int = 0

    def curves_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss", "val_acc"])
        for r in self.history:
            w.writerow([r.epoch, repr(r.train_loss), repr(r.val_loss), repr(r.val_acc)])
        return buf.getvalue()


@dataclass
class TrainReport:
    config: TrainConfig
    runs: list[RunResult]

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([r.test_accuracy for r in self.runs])

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        # population std: a single run reports 0
        return float(np.std(self.accuracies))

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "validation_split": "re-drawn from each run's seed",
            "test_accuracy_mean": self.mean,
            "test_accuracy_std": self.std,
            "runs": [
                {
                    "seed": r.seed,
                    "stopped_epoch": r.stopped_epoch,
                    "test_accuracy": r.test_accuracy,
                    "num_labeled": r.num_labeled,
                    "num_validation": r.num_validation,
                    "history": [asdict(h) for h in r.history],
                }
                for r in self.runs
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        lines = [f"{'seed':>6}  {'epochs':>6}  {'test_acc':>8}"]
        lines += [f"{r.seed:>6}  {r.stopped_epoch:>6}  {r.test_accuracy:>8.4f}" for r in self.runs]
        lines.append(f"{'mean':>6}  {'':>6}  {self.mean:>8.4f}")
        lines.append(f"{'std':>6}  {'':>6}  {self.std:>8.4f}")
        return "\n".join(lines) + "\n"


class EarlyStopping:
    """Stop after ``patience`` consecutive epochs without a strictly lower validation loss."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.bad_epochs = 0
        self.epoch = 0

    def update(self, val_loss: float) -> bool:
        self.epoch += 1
        if val_loss < self.best:
            self.best = val_loss
            self.best_epoch = self.epoch
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
        return self.bad_epochs >= self.patience


def _streams(seed: int) -> dict[str, np.random.Generator]:
    names = ("labels", "split", "init", "dropout")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.default_rng(c) for n, c in zip(names, children)}


def stratified_subsample(doc_ids, labels, fraction: float, rng: np.random.Generator,
                         num_classes: int | None = None) -> np.ndarray:
    """Keep ``fraction`` of the documents per class, never fewer than one per class."""
    doc_ids = np.asarray(doc_ids, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    kept = []
    for c in range(num_classes):
        members = doc_ids[labels[doc_ids] == c]
        if len(members) == 0:
            raise CorpusError(f"class {c} has no training documents to subsample")
        n = max(1, int(np.floor(fraction * len(members) + 0.5)))
        kept.append(rng.choice(members, size=n, replace=False))
    return np.sort(np.concatenate(kept))


def training_split(corpus: Corpus, config: TrainConfig, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Labeled training ids and validation ids for one run.

    With ``label_fraction < 1`` the training documents are first subsampled
    (stratified); the validation share is then drawn from what was kept.
    Everything else stays in the graph as unlabeled nodes.
    """
    rngs = _streams(seed)
    pool = corpus.indices("train")
    if config.label_fraction < 1.0:
        pool = stratified_subsample(pool, corpus.labels, config.label_fraction, rngs["labels"],
                                    corpus.num_classes)
    split_seed = int(rngs["split"].integers(2**63 - 1))
    return split_validation(pool, config.validation_fraction, split_seed)


def predict(model: GcnModel, graph: TextGraph) -> np.ndarray:
    """Evaluation-mode class prediction for every node (ties go to the lowest class)."""
    return np.argmax(forward(model, graph.normalized, training=False).z, axis=1)


def evaluate(model: GcnModel, graph: TextGraph, corpus: Corpus, which: str = "test",
             doc_ids=None) -> float:
    """Accuracy on the test documents, or on ``doc_ids`` for a validation set."""
    if doc_ids is None:
        if which != "test":
            raise ValueError("validation accuracy needs the validation doc_ids")
        doc_ids = corpus.indices("test")
    doc_ids = np.asarray(doc_ids, dtype=np.int64)
    if len(doc_ids) == 0:
        return 0.0
    pred = predict(model, graph)[doc_ids]
    return float(np.mean(pred == corpus.labels[doc_ids]))


def train_once(corpus: Corpus, graph: TextGraph, config: TrainConfig, seed: int) -> tuple[GcnModel, RunResult]:
    """Full-batch training with validation-loss early stopping.

    Every random choice (label subsample, validation split, initialization,
    dropout) derives from ``seed``.
    """
    if graph.num_documents != corpus.num_documents or graph.num_words != len(corpus.vocabulary):
        raise ValueError("graph was not built from this corpus")
    rngs = _streams(seed)
    train_ids, val_ids = training_split(corpus, config, seed)
    labels = corpus.labels
    a_norm = graph.normalized

    model = init_model(graph.node_count, config.embedding_dim, corpus.num_classes,
                       config.dropout, seed, rng=rngs["init"])
    state = AdamState.for_model(model, lr=config.learning_rate, l2_weight=config.l2_weight)
    stopper = EarlyStopping(config.patience)
    best_model = model.copy() if config.restore_best else None
    history: list[EpochRecord] = []
    # the evaluation pass after each update already holds a_norm @ w0 for the next epoch
    first_layer = None

    for epoch in range(1, config.max_epochs + 1):
        try:
            cache = forward(model, a_norm, training=True, rng=rngs["dropout"], e1_pre=first_layer)
            train_loss = loss(cache, labels, train_ids)
            adam_step(model, state, backward(model, a_norm, cache, labels, train_ids))
            eval_cache = forward(model, a_norm, training=False)
            eval_z, first_layer = eval_cache.z, eval_cache.e1_pre
            val_loss = float(-np.mean(np.log(eval_z[val_ids, labels[val_ids]])))
            if not np.isfinite(val_loss):
                raise NonFiniteError("non-finite validation loss")
        except NonFiniteError as exc:
            raise TrainingDiverged(f"training diverged at epoch {epoch}: {exc}") from exc
        val_acc = float(np.mean(np.argmax(eval_z[val_ids], axis=1) == labels[val_ids]))
        history.append(EpochRecord(epoch, train_loss, val_loss, val_acc))
        log.debug("seed %d epoch %d train %.5f val %.5f acc %.4f", seed, epoch, train_loss, val_loss, val_acc)
        stop = stopper.update(val_loss)
        if best_model is not None and stopper.best_epoch == epoch:
            best_model = model.copy()
        if stop:
            break

    final = best_model if best_model is not None else model
    result = RunResult(
        seed=seed,
        stopped_epoch=len(history),
        test_accuracy=evaluate(final, graph, corpus, "test"),
        history=history,
        num_labeled=int(len(train_ids)),
        num_validation=int(len(val_ids)),
    )
    log.info("seed %d stopped at epoch %d, test accuracy %.4f", seed, result.stopped_epoch, result.test_accuracy)
    return final, result


def run_replicates(corpus: Corpus, config: TrainConfig, graph: TextGraph | None = None) -> TrainReport:
    """Train once per seed on one shared graph and aggregate test accuracy."""
    if graph is None:
        graph = build_graph(corpus, config.window_size)
    runs = [train_once(corpus, graph, config, s)[1] for s in config.seeds]
    return TrainReport(config, runs)


def label_fraction_sweep(corpus: Corpus, config: TrainConfig, fractions,
                         graph: TextGraph | None = None) -> list[tuple[float, float, float]]:
    """``(fraction, mean, std)`` of test accuracy for each share of training labels."""
    if graph is None:
        graph = build_graph(corpus, config.window_size)
    rows = []
    for f in sorted(float(x) for x in fractions):
        report = run_replicates(corpus, replace(config, label_fraction=f), graph)
        rows.append((f, report.mean, report.std))
    return rows


# --- TF-IDF + logistic regression baseline ---------------------------------

# strength of the L2 penalty relative to the summed loss; 1.0 is the usual default
LR_INVERSE_STRENGTH = 1.0
LR_MAX_ITERATIONS = 1000


def tfidf_features(corpus: Corpus) -> CsrMatrix:
    """Sparse document-term TF-IDF matrix with L2-normalized rows.

    Term weights are the raw count times ``log(N / df)``, as on graph edges.
    """
    docs, terms, values = tfidf_edges(corpus)
    norms = np.sqrt(np.bincount(docs, weights=values * values, minlength=corpus.num_documents))
    values = values / np.where(norms > 0.0, norms, 1.0)[docs]
    return from_triplets(docs, terms, values, (corpus.num_documents, len(corpus.vocabulary)))


def _rows(x: CsrMatrix, ids: np.ndarray) -> CsrMatrix:
    starts, stops = x.indptr[ids], x.indptr[ids + 1]
    take = np.concatenate([np.arange(a, b) for a, b in zip(starts, stops)]) if len(ids) else np.zeros(0, np.int64)
    indptr = np.concatenate(([0], np.cumsum(stops - starts))).astype(np.int64)
    return CsrMatrix((len(ids), x.cols), indptr, x.indices[take], x.data[take])


def _fit_logreg(x: CsrMatrix, y: np.ndarray, num_classes: int,
                inverse_strength: float = LR_INVERSE_STRENGTH,
                max_iterations: int = LR_MAX_ITERATIONS) -> tuple[np.ndarray, np.ndarray]:
    """Multinomial logistic regression, minimizing ``C * sum(loss) + |W|^2 / 2``.

    The bias is not penalized.  The problem is strictly convex, so L-BFGS from
    zero converges to the unique optimum and the fit is deterministic.
    """
    v, f = x.cols, num_classes
    onehot = np.eye(f)[y]
    xt = x.transpose()
    rows = np.arange(x.rows)

    def objective(theta):
        w, b = theta[:v * f].reshape(v, f), theta[v * f:]
        logits = spmm(x, w) + b
        logits -= logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(logits).sum(axis=1))
        value = inverse_strength * float(np.sum(log_norm - logits[rows, y])) + 0.5 * float(np.sum(w * w))
        resid = inverse_strength * (np.exp(logits - log_norm[:, None]) - onehot)
        grad = np.concatenate(((spmm(xt, resid) + w).ravel(), resid.sum(axis=0)))
        return value, grad

    result = minimize(objective, np.zeros(v * f + f), jac=True, method="L-BFGS-B",
                      options={"maxiter": max_iterations, "gtol": 1e-6})
    return result.x[:v * f].reshape(v, f), result.x[v * f:]


def _logreg_predict(params: tuple[np.ndarray, np.ndarray], x: CsrMatrix) -> np.ndarray:
    w, b = params
    return np.argmax(spmm(x, w) + b, axis=1)


def tfidf_lr_baseline(corpus: Corpus, seed: int = 0, config: TrainConfig | None = None,
                      features: CsrMatrix | None = None) -> float:
    """Test accuracy of TF-IDF + logistic regression.

    Fits on every labeled document a GCN run with this ``seed`` and ``config``
    sees (labeled plus validation), so ``label_fraction`` applies here too.
    With the full label set the result does not depend on ``seed``.
    """
    config = config or TrainConfig()
    x = tfidf_features(corpus) if features is None else features
    y = corpus.labels
    train_ids, val_ids = training_split(corpus, config, seed)
    fit_ids = np.sort(np.concatenate((train_ids, val_ids)))
    params = _fit_logreg(_rows(x, fit_ids), y[fit_ids], corpus.num_classes)
    test_ids = corpus.indices("test")
    return float(np.mean(_logreg_predict(params, _rows(x, test_ids)) == y[test_ids]))
