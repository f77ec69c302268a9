"""TF-IDF candidate scores for the next-action fixtures.

Documents are "text category" per page element; the query is the summary
followed by the last five history strings. IDF over the page is
ln((1 + N) / (1 + df)) + 1, weights are raw term count times IDF, and the
score is cosine similarity (0 when either vector is empty). Ties keep DOM
order.

Usage: python3 next_action_oracle.py   (writes ../next_action/expected.json)
"""

import json
import math
import os
import re

HERE = os.path.dirname(os.path.abspath(__file__))
BASE = os.path.join(HERE, "..", "next_action")


def tokens(text):
    return [t.lower() for t in re.split(r"[^0-9A-Za-z]+", text) if t]


def tf(words):
    out = {}
    for w in words:
        out[w] = out.get(w, 0) + 1
    return out


def rank(page, history, summary):
    docs = [tf(tokens(e["text"] + " " + e["category"])) for e in page["elements"]]
    n = len(docs)
    df = {}
    for d in docs:
        for w in d:
            df[w] = df.get(w, 0) + 1

    def idf(w):
        return math.log((1 + n) / (1 + df.get(w, 0))) + 1

    q = {w: c * idf(w) for w, c in tf(tokens(" ".join([summary] + history[-5:]))).items()}
    qn = math.sqrt(sum(v * v for v in q.values()))
    scored = []
    for e, d in zip(page["elements"], docs):
        vec = {w: c * idf(w) for w, c in d.items()}
        dn = math.sqrt(sum(v * v for v in vec.values()))
        dot = sum(v * q.get(w, 0.0) for w, v in vec.items())
        s = dot / (dn * qn) if dn > 0 and qn > 0 else 0.0
        scored.append((e["element_id"], e["dom_order"], s))
    scored.sort(key=lambda x: (-x[2], x[1]))
    return [{"element_id": i, "score": s} for i, _, s in scored]


def main():
    expected = {}
    with open(os.path.join(BASE, "samples.jsonl")) as f:
        for line in f:
            if not line.strip():
                continue
            s = json.loads(line)
            with open(os.path.join(BASE, "pages", s["page_id"] + ".json")) as p:
                page = json.load(p)
            expected[s["sample_id"]] = rank(page, s["history"], s["summary"])
    with open(os.path.join(BASE, "expected.json"), "w") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
