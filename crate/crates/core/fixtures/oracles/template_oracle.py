"""Generates the 50-trace fixture and its golden rendering.

The rendering here is a direct transcription of the four action templates and
shares no code with the Rust implementation.

Usage: python3 template_oracle.py   (writes ../traces50.jsonl and
../traces50.rendered.jsonl)
"""

import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

CATEGORIES = ["button", "link", "combobox", "searchbox", "textbox", "checkbox", "tab", "menuitem", "Button", "LINK"]
CONTENTS = ["Add to Cart", "Sort By", "Search", "Sign in", "Flights", "Café & Bar", "Größe", "Next »",
            "2 adults", "Jobs near me", "Price: Low to High", "Check-in", "Book now!", "Filter (3)", "東京"]
VALUES = ["Price Low to High", "Johannesburg", "New York, NY", "2", "red", "pizza near me", "March 14",
          "über", "software engineer", "O'Hare"]
SITES = ["uniqlo", "united", "exploretock", "indeed", "ikea", "yelp"]
APPS = ["Calendar", "Gmail", "Maps", "Spotify"]
OPS = ["CLICK", "SELECT", "TYPE", "SWIPE"]


def render(category, content, extra, op):
    cat = category.lower()
    if op == "CLICK":
        return 'Click the ' + cat + ' element with text "' + content + '" on it'
    if op == "SELECT":
        return 'Select "' + extra + '" from ' + cat + ' with text "' + content + '" on it'
    if op == "TYPE":
        return 'Type text "' + extra + '" into ' + cat + ' with text "' + content + '" on it'
    if op == "SWIPE":
        return 'Swipe on the ' + cat + ' element with text "' + content + '" on it'
    raise ValueError(op)


def main():
    rng = random.Random(20240501)
    traces, rendered = [], []
    for i in range(50):
        mobile = i % 5 == 4
        meta = {"source": "MOBILE", "app": rng.choice(APPS)} if mobile else {"source": "WEB", "website": rng.choice(SITES)}
        if not mobile and rng.random() < 0.5:
            meta["domain"] = "Travel"
            meta["subdomain"] = "Airlines"
        actions, lines = [], []
        for _ in range(rng.randint(1, 9)):
            op = rng.choice(OPS if mobile else OPS[:3])
            el = {"category": rng.choice(CATEGORIES), "content": rng.choice(CONTENTS)}
            extra = None
            if op in ("SELECT", "TYPE") or rng.random() < 0.1:
                extra = rng.choice(VALUES)
                el["additional_content"] = extra
            actions.append({"element": el, "operation": op})
            lines.append(render(el["category"], el["content"], extra, op))
        t = {"trace_id": "fx%02d" % i, "metadata": meta, "actions": actions}
        if i % 3 == 0:
            t["gold_intention"] = "Intention number %d" % i
        traces.append(t)
        rendered.append({"trace_id": t["trace_id"], "actions": lines})
    with open(os.path.join(HERE, "..", "traces50.jsonl"), "w", encoding="utf-8") as f:
        for t in traces:
            f.write(json.dumps(t, ensure_ascii=False) + "\n")
    with open(os.path.join(HERE, "..", "traces50.rendered.jsonl"), "w", encoding="utf-8") as f:
        for r in rendered:
            f.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()
