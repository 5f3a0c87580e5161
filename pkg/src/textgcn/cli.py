"""Command-line entry point: ``textgcn <subcommand> [flags]``.

Every subcommand reads a corpus from ``--documents`` / ``--metadata``.  An
optional ``--config`` file holds ``key = value`` lines named after the long
flags (``window-size = 15``); explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import export_embeddings, format_top_words, sweep, sweep_csv, top_words
from .corpus import PreprocessOptions, build_corpus
from .gcn import load_checkpoint, save_checkpoint
from .graph import build_graph, write_graph
from .trainer import (
    TrainConfig,
    TrainReport,
    evaluate,
    label_fraction_sweep,
    tfidf_lr_baseline,
    train_once,
    training_split,
)

COMMANDS = ("build-graph", "train", "evaluate", "sweep", "label-sweep", "export-embeddings", "top-words", "baseline")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _seeds(text: str) -> tuple[int, ...]:
    """``"10"`` means seeds 0..9; ``"3,7,11"`` is an explicit list."""
    text = text.strip()
    if "," in text:
        return tuple(int(s) for s in text.split(",") if s.strip())
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("--seeds needs a positive count or a list")
    return tuple(range(n))


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_corpus_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value file with defaults for any flag")
    p.add_argument("--documents", type=Path, required=True, help="one raw document per line")
    p.add_argument("--metadata", type=Path, required=True, help="doc_name<TAB>split<TAB>label per line")
    p.add_argument("--min-term-freq", type=int, default=5)
    p.add_argument("--no-filter", action="store_true", help="keep every token (short-text corpora)")
    p.add_argument("--stopwords", type=Path, default=None, help="stop-word list (default: bundled English)")
    p.add_argument("--window-size", type=int, default=20)
    p.add_argument("-v", "--verbose", action="store_true")


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embedding-dim", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--max-epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--seeds", type=_seeds, default=tuple(range(10)))
    p.add_argument("--label-fraction", type=float, default=1.0)
    p.add_argument("--restore-best", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="textgcn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build the text graph and write it as Matrix Market")
    _add_corpus_args(p)
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("train", help="train replicated models and report test accuracy")
    _add_corpus_args(p)
    _add_train_args(p)
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("evaluate", help="accuracy of a saved checkpoint")
    _add_corpus_args(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--split", choices=("test", "validation"), default="test")

    p = sub.add_parser("sweep", help="accuracy across window sizes or embedding dimensions")
    _add_corpus_args(p)
    _add_train_args(p)
    p.add_argument("--parameter", choices=("window_size", "embedding_dim"), required=True)
    p.add_argument("--values", type=_ints, required=True)
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("label-sweep", help="accuracy across training-label fractions")
    _add_corpus_args(p)
    _add_train_args(p)
    p.add_argument("--fractions", type=_floats, default=[0.01, 0.05, 0.1, 0.2])
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("export-embeddings", help="write node embeddings as TSV")
    _add_corpus_args(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--layer", choices=("first", "second"), default="second")
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("top-words", help="highest-valued words per class")
    _add_corpus_args(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--output", type=Path)

    p = sub.add_parser("baseline", help="TF-IDF + logistic regression accuracy")
    _add_corpus_args(p)
    _add_train_args(p)
    return parser


def read_config_file(path: Path) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-").replace("_", "-")] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    extra = []
    subs = parser._subparsers._group_actions[0].choices  # noqa: SLF001
    flags = {c: {o: a for a in p._actions for o in a.option_strings} for c, p in subs.items()}  # noqa: SLF001
    known = flags[args.command]
    for key, value in read_config_file(args.config).items():
        action = known.get(f"--{key}")
        if action is None:
            # one file may serve several subcommands; only reject keys no command accepts
            if any(f"--{key}" in f for f in flags.values()):
                continue
            raise ValueError(f"{args.config}: unknown key {key!r}")
        if action.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                extra.append(f"--{key}")
        else:
            extra += [f"--{key}", value]
    # file values first so that explicit flags, parsed later, override them
    return parser.parse_args([args.command] + extra + argv[1:])


def _config(args) -> TrainConfig:
    return TrainConfig(
        embedding_dim=args.embedding_dim,
        window_size=args.window_size,
        learning_rate=args.lr,
        dropout=args.dropout,
        l2_weight=args.l2,
        max_epochs=args.max_epochs,
        patience=args.patience,
        validation_fraction=args.val_fraction,
        seeds=args.seeds,
        label_fraction=args.label_fraction,
        restore_best=args.restore_best,
    )


def _corpus(args):
    opts = PreprocessOptions(
        filter_enabled=not args.no_filter,
        min_term_freq=args.min_term_freq,
        stopwords_path=str(args.stopwords) if args.stopwords else None,
    )
    return build_corpus(args.documents, args.metadata, opts)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def _load_model(args, corpus, graph):
    model, extra = load_checkpoint(args.checkpoint)
    if model.num_nodes != graph.node_count or model.num_classes != corpus.num_classes:
        raise ValueError("checkpoint does not match this corpus/graph")
    return model, extra


def run(argv: list[str]) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    corpus = _corpus(args)
    out = sys.stdout

    if args.command == "build-graph":
        graph = build_graph(corpus, args.window_size)
        write_graph(args.output, graph, corpus)
        out.write(_dump(graph.summary))
        return 0

    if args.command == "baseline":
        cfg = _config(args)
        accs = [tfidf_lr_baseline(corpus, s, cfg) for s in cfg.seeds]
        out.write(_dump({"model": "tfidf+lr", "label_fraction": cfg.label_fraction, "accuracies": accs,
                         "mean": float(np.mean(accs)), "std": float(np.std(accs))}))
        return 0

    graph = build_graph(corpus, args.window_size)

    if args.command == "train":
        cfg = _config(args)
        args.output.mkdir(parents=True, exist_ok=True)
        runs = []
        for seed in cfg.seeds:
            model, result = train_once(corpus, graph, cfg, seed)
            runs.append(result)
            (args.output / f"curves_seed{seed}.csv").write_text(result.curves_csv(), encoding="utf-8")
            config = dataclasses.asdict(dataclasses.replace(cfg, seeds=(seed,)))
            save_checkpoint(args.output / f"model_seed{seed}.json", model,
                            {"train_seed": seed, "config": config})
        report = TrainReport(cfg, runs)
        (args.output / "report.json").write_text(report.to_json(), encoding="utf-8")
        (args.output / "report.txt").write_text(report.to_table(), encoding="utf-8")
        out.write(report.to_table())
        return 0

    if args.command == "evaluate":
        model, extra = _load_model(args, corpus, graph)
        if args.split == "test":
            acc = evaluate(model, graph, corpus, "test")
        else:
            cfg = TrainConfig(**extra.get("config", {}))
            _, val_ids = training_split(corpus, cfg, int(extra.get("train_seed", model.seed)))
            acc = evaluate(model, graph, corpus, "validation", val_ids)
        out.write(_dump({"split": args.split, "accuracy": acc}))
        return 0

    if args.command == "sweep":
        rows = sweep(corpus, _config(args), args.parameter, args.values, graph)
        args.output.write_text(sweep_csv(args.parameter, rows), encoding="utf-8")
        out.write(sweep_csv(args.parameter, rows))
        return 0

    if args.command == "label-sweep":
        rows = label_fraction_sweep(corpus, _config(args), args.fractions, graph)
        args.output.write_text(sweep_csv("label_fraction", rows), encoding="utf-8")
        out.write(sweep_csv("label_fraction", rows))
        return 0

    if args.command == "export-embeddings":
        model, _ = _load_model(args, corpus, graph)
        export_embeddings(args.output, model, graph, corpus, args.layer)
        return 0

    if args.command == "top-words":
        model, _ = _load_model(args, corpus, graph)
        text = format_top_words(top_words(model, graph, corpus, args.top_k))
        if args.output:
            args.output.write_text(text, encoding="utf-8")
        out.write(text)
        return 0

    raise AssertionError(args.command)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return run(argv)
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2 if isinstance(exc, UsageError) else 1


if __name__ == "__main__":
    sys.exit(main())
