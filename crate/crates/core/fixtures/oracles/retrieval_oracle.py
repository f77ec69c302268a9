"""Brute-force ranking of fixtures/retrieval/summaries.jsonl for a few
queries under the hashed bag-of-words mock embedder.

Writes fixtures/retrieval/expected.json. Scores are plain f64 cosines;
ties are broken by trace id.
"""

import json
import os

from metrics_oracle import cosine, mock_embed

HERE = os.path.dirname(os.path.abspath(__file__))
DIR = os.path.join(HERE, "..", "retrieval")
QUERIES = [
    "book a flight",
    "hotel in Rotterdam",
    "piano lesson",
    "nothing matches zzz",
    "rent a car in Denver",
    "jobs in London",
    "buy a linen dress",
    "camping in Yosemite",
    "table at an Italian restaurant",
    "compare flight prices",
]


def main():
    with open(os.path.join(DIR, "summaries.jsonl")) as f:
        records = [json.loads(line) for line in f if line.strip()]
    out = []
    for q in QUERIES:
        qv = mock_embed(q)
        scored = [(cosine(qv, mock_embed(r["summary"])), r["trace_id"]) for r in records]
        scored.sort(key=lambda s: (-round(s[0], 9), s[1]))
        for (a, _), (b, _) in zip(scored, scored[1:]):
            if a != b and abs(a - b) < 1e-5:
                raise SystemExit(f"near tie for {q!r}: {a} vs {b}")
        out.append({"query": q, "top": [{"trace_id": t, "score": s} for s, t in scored[:5]]})
    with open(os.path.join(DIR, "expected.json"), "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
