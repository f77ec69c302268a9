"""Reference values for the metric fixtures.

Written independently of the Rust code from the metric definitions:
BLEU-4 (unsmoothed unigrams, (m+1)/(c+1) for orders 2-4, brevity penalty),
ROUGE-L F1 over the token LCS, reduced METEOR with exact-then-stem greedy
alignment (Snowball English), and the hashed bag-of-words mock embedder.

Usage: python3 metrics_oracle.py   (writes ../metrics/*.json)
"""

import hashlib
import json
import math
import os
from collections import Counter
from functools import lru_cache

import snowballstemmer

STEM = snowballstemmer.stemmer("english")
HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "metrics")


def tokens(text):
    out, cur = [], []
    for ch in text:
        if ch.isalnum():
            cur.append(ch)
        elif cur:
            out.append("".join(cur).lower())
            cur = []
    if cur:
        out.append("".join(cur).lower())
    return out


def bleu(cand, ref):
    c, r = tokens(cand), tokens(ref)
    if not c:
        return 0.0
    logs = 0.0
    for n in range(1, 5):
        cg = Counter(tuple(c[i:i + n]) for i in range(len(c) - n + 1))
        rg = Counter(tuple(r[i:i + n]) for i in range(len(r) - n + 1))
        total = sum(cg.values())
        hit = sum(min(k, rg[g]) for g, k in cg.items())
        if n == 1:
            if hit == 0:
                return 0.0
            p = hit / total
        else:
            p = (hit + 1) / (total + 1)
        logs += math.log(p)
    bp = 1.0 if len(c) > len(r) else math.exp(1 - len(r) / len(c))
    return bp * math.exp(logs / 4)


def rouge_l(cand, ref):
    c, r = tuple(tokens(cand)), tuple(tokens(ref))
    if not c or not r:
        return 0.0

    @lru_cache(maxsize=None)
    def lcs(i, j):
        if i == len(c) or j == len(r):
            return 0
        if c[i] == r[j]:
            return 1 + lcs(i + 1, j + 1)
        return max(lcs(i + 1, j), lcs(i, j + 1))

    l = lcs(0, 0)
    p, rr = l / len(c), l / len(r)
    return 0.0 if p + rr == 0 else 2 * p * rr / (p + rr)


def meteor(cand, ref):
    c, r = tokens(cand), tokens(ref)
    if not c or not r:
        return 0.0
    taken = [False] * len(r)
    link = {}
    for i, w in enumerate(c):
        for j, v in enumerate(r):
            if not taken[j] and v == w:
                taken[j] = True
                link[i] = j
                break
    for i, w in enumerate(c):
        if i in link:
            continue
        sw = STEM.stemWord(w)
        for j, v in enumerate(r):
            if not taken[j] and STEM.stemWord(v) == sw:
                taken[j] = True
                link[i] = j
                break
    m = len(link)
    if m == 0:
        return 0.0
    order = sorted(link.items())
    chunks = 1
    for (i0, j0), (i1, j1) in zip(order, order[1:]):
        if not (i1 == i0 + 1 and j1 == j0 + 1):
            chunks += 1
    p, rr = m / len(c), m / len(r)
    fmean = 10 * p * rr / (rr + 9 * p)
    return fmean * (1 - 0.5 * (chunks / m) ** 3)


def mock_embed(text):
    v = [0.0] * 256
    for t in tokens(text):
        d = hashlib.sha256(t.encode()).digest()
        bucket = int.from_bytes(d[:8], "little") % 256
        v[bucket] += 1.0 if d[8] % 2 == 0 else -1.0
    n = math.sqrt(sum(x * x for x in v))
    if n == 0:
        v = [0.0] * 256
        v[0] = 1.0
        return v
    return [x / n for x in v]


def cosine(a, b):
    if a == b:
        return 1.0
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    return max(-1.0, min(1.0, dot / (na * nb)))


PAIRS_12 = [
    ("find a campground in orlando", "find a campground near orlando for two adults"),
    ("running fast", "run fast"),
    ("a b c d", "a c d e"),
    ("book a one way flight to Paris", "book a one way flight to Paris"),
    ("order sushi", "rent a car"),
    ("Booking flights from Berlin", "book a flight from berlin to rome"),
    ("the the the the", "the cat sat on the mat"),
    ("", "anything at all"),
    ("search for jobs in London posted this week", "jobs in london"),
    ("Add the RED jacket to the cart!", "add red jacket to cart"),
    ("compare prices of running shoes and buy the cheapest pair", "buy the cheapest running shoes after comparing prices"),
    ("watch", "watched a movie"),
]

PAIRS_3 = [
    ("Find a campground in Orlando", "Find a campground near Orlando for two adults"),
    ("Add the red jacket to the cart", "Add the red jacket to the cart"),
    ("Search for flights to Tokyo", "Book a hotel in Tokyo for next week"),
]


def main():
    rows = [
        {"candidate": c, "reference": r, "bleu": bleu(c, r), "rouge_l": rouge_l(c, r), "meteor": meteor(c, r)}
        for c, r in PAIRS_12
    ]
    with open(os.path.join(OUT, "pairs12.json"), "w") as f:
        json.dump(rows, f, indent=2)
        f.write("\n")

    pairs = []
    for i, (p, g) in enumerate(PAIRS_3):
        pairs.append({
            "index": i, "prediction": p, "gold": g,
            "bleu": bleu(p, g), "rouge_l": rouge_l(p, g), "meteor": meteor(p, g),
            "cosine": cosine(mock_embed(p), mock_embed(g)),
        })
    means = {k: sum(x[k] for x in pairs) / len(pairs) for k in ("bleu", "rouge_l", "meteor", "cosine")}
    report = {"split": "golden", "count": len(pairs), "means": means, "pairs": pairs}
    with open(os.path.join(OUT, "report3.golden.json"), "w") as f:
        json.dump(report, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
