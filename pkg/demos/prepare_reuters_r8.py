"""
Build an R8-style corpus from the JSON dump of Reuters-21578
=============================================================

The npm package ``reuters-21578-json`` ships all 21,578 Reuters stories as
JSON (title, body, date, topics) but drops the SGML split attributes.  This
script rebuilds an approximation of the eight-class single-label subset:

* keep stories with exactly one topic among the eight largest classes,
* put stories dated up to 7 April 1987 in ``train`` and later ones in ``test``,
* prepend the title to the body, keep letters only, lowercase.

Without the LEWISSPLIT/TOPICS attributes the unused stories cannot be
excluded, so this yields 5,554 train / 2,323 test documents rather than the
canonical 5,485 / 2,189.

Usage::

    npm pack reuters-21578-json && tar xzf reuters-21578-json-*.tgz
    python demos/prepare_reuters_r8.py package/data/full data/r8_approx
"""

import json
import re
import sys
from datetime import datetime
from pathlib import Path

CLASSES = ("acq", "crude", "earn", "grain", "interest", "money-fx", "ship", "trade")
LAST_TRAIN_DAY = datetime(1987, 4, 7)


def story_text(story):
    text = story.get("title", "") + " " + story.get("body", "")
    text = re.sub(r"[^A-Za-z]", " ", text).lower()
    return " ".join(text.split())


def main(src, dst):
    stories = []
    for path in sorted(Path(src).glob("reuters-*.json")):
        stories += json.loads(path.read_text())
    stories.sort(key=lambda s: int(s["id"]))

    out = Path(dst)
    out.mkdir(parents=True, exist_ok=True)
    n = {"train": 0, "test": 0}
    with open(out / "documents.txt", "w") as docs, open(out / "metadata.tsv", "w") as meta:
        for s in stories:
            topics = s.get("topics", [])
            if len(topics) != 1 or topics[0] not in CLASSES:
                continue
            text = story_text(s)
            if not text:
                continue
            day = datetime.strptime(s["date"].strip().split()[0], "%d-%b-%Y")
            split = "train" if day <= LAST_TRAIN_DAY else "test"
            n[split] += 1
            docs.write(text + "\n")
            meta.write(f"reuters-{s['id']}\t{split}\t{topics[0]}\n")
    print(f"wrote {n['train']} train and {n['test']} test documents to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:3])
