import numpy as np
import pytest

from textgcn.corpus import PreprocessOptions, corpus_from_texts

TOPICS = {
    "sport": ["goal", "match", "team", "coach", "league", "score", "season", "player"],
    "tech": ["chip", "software", "code", "server", "network", "data", "cloud", "device"],
}
SHARED = ["today", "report", "new", "week"]


def toy_texts(docs_per_class=10, test_per_class=5, seed=0, length=12):
    """Two classes with disjoint topical vocabularies plus a few shared words."""
    rng = np.random.default_rng(seed)
    texts, meta = [], []
    for split, count in (("train", docs_per_class), ("test", test_per_class)):
        for i in range(count):
            for label, words in TOPICS.items():
                toks = list(rng.choice(words, size=length - 2)) + list(rng.choice(SHARED, size=2))
                rng.shuffle(toks)
                texts.append(" ".join(toks))
                meta.append((f"{label}-{split}-{i}", split, label))
    return texts, meta


def toy_corpus(**kwargs):
    texts, meta = toy_texts(**kwargs)
    return corpus_from_texts(texts, meta, PreprocessOptions(filter_enabled=False))


@pytest.fixture
def corpus():
    return toy_corpus()


@pytest.fixture
def corpus_files(tmp_path):
    texts, meta = toy_texts()
    docs = tmp_path / "documents.txt"
    md = tmp_path / "metadata.tsv"
    docs.write_text("".join(t + "\n" for t in texts), encoding="utf-8")
    md.write_text("".join("\t".join(m) + "\n" for m in meta), encoding="utf-8")
    return docs, md


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
