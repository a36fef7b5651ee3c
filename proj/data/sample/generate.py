#!/usr/bin/env python3
"""Regenerates the bundled synthetic corpus, type map and word vectors.

Usage: python3 data/sample/generate.py [output_dir]
"""

import json
import random
import sys
from pathlib import Path

SEED = 20240611
DIM = 300

PEOPLE = [
    "alice smith", "bob jones", "carol white", "david brown", "erin clark",
    "frank moore", "grace hall", "henry young", "irene king", "jack wright",
    "karen scott", "leo green", "maria lopez", "nina adams", "oscar baker",
]
COMPANIES = [
    "acme corp", "globex", "initech", "umbrella labs", "stark industries",
    "wayne enterprises", "hooli", "vandelay imports", "soylent", "tyrell group",
]
CITIES = ["paris", "berlin", "tokyo", "new york", "madrid", "oslo", "cairo", "lima"]

TYPE_MAP = {"PER": ["works_for", "founded"], "ORG": ["located_in"]}

# Tokens that deliberately have no vector, so lookups fall back to UNK.
NO_VECTOR = {"reportedly", "meanwhile"}


def span_of(tokens, phrase, start=0):
    words = phrase.split()
    for i in range(start, len(tokens) - len(words) + 1):
        if tokens[i:i + len(words)] == words:
            return [i, i + len(words) - 1]
    raise ValueError(f"{phrase!r} not in {tokens}")


def triple(tokens, head, head_type, relation, tail):
    h = span_of(tokens, head)
    try:
        t = span_of(tokens, tail, h[1] + 1)
    except ValueError:
        t = span_of(tokens, tail)
    return {"head": h, "head_type": head_type, "relation": relation, "tail": t}


def make(text, facts):
    tokens = text.split()
    return {"text": text, "triples": [triple(tokens, *f) for f in facts]}


def build_corpus(rng):
    corpus = []
    people = PEOPLE[:]
    rng.shuffle(people)

    # Single triples, one template per relation.
    for i in range(16):
        p, c = people[i % len(people)], COMPANIES[i % len(COMPANIES)]
        corpus.append(make(f"{p} works for {c} .", [(p, "PER", "works_for", c)]))
    for i in range(12):
        p, c = people[(i + 5) % len(people)], COMPANIES[(i + 3) % len(COMPANIES)]
        corpus.append(make(f"in 2001 {p} founded {c} .", [(p, "PER", "founded", c)]))
    for i in range(14):
        c, city = COMPANIES[(i + 1) % len(COMPANIES)], CITIES[i % len(CITIES)]
        corpus.append(make(f"{c} is based in {city} .", [(c, "ORG", "located_in", city)]))

    # Shared head: one head, two tails under different relations.
    for i in range(5):
        p = people[(i + 9) % len(people)]
        c1, c2 = COMPANIES[(i + 2) % len(COMPANIES)], COMPANIES[(i + 6) % len(COMPANIES)]
        corpus.append(make(f"{p} works for {c1} and founded {c2} .",
                           [(p, "PER", "works_for", c1), (p, "PER", "founded", c2)]))

    # Entity-pair overlap: the same pair under two relations.
    for i in range(4):
        p, c = people[(i + 3) % len(people)], COMPANIES[(i + 7) % len(COMPANIES)]
        corpus.append(make(f"{p} founded and still works for {c} .",
                           [(p, "PER", "founded", c), (p, "PER", "works_for", c)]))

    # Two heads of different types in one sentence.
    for i in range(5):
        p, c = people[(i + 11) % len(people)], COMPANIES[(i + 4) % len(COMPANIES)]
        city = CITIES[(i + 3) % len(CITIES)]
        corpus.append(make(f"reportedly {p} works for {c} , which is based in {city} .",
                           [(p, "PER", "works_for", c), (c, "ORG", "located_in", city)]))

    # No triples.
    for i in range(4):
        city = CITIES[(i + 5) % len(CITIES)]
        corpus.append(make(f"meanwhile it rained in {city} all week .", []))

    assert len(corpus) == 60, len(corpus)
    rng.shuffle(corpus)
    return corpus


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent
    rng = random.Random(SEED)
    corpus = build_corpus(rng)

    vocab = sorted({tok for ex in corpus for tok in ex["text"].split()} - NO_VECTOR)
    # A few vectors for words outside the corpus, as in a real GloVe file.
    vocab += ["the", "of", "company", "city"]
    lines = []
    for word in vocab:
        vec = [rng.gauss(0.0, 0.4) for _ in range(DIM)]
        lines.append(word + " " + " ".join(f"{v:.4f}" for v in vec))

    (out / "corpus.jsonl").write_text("".join(json.dumps(ex) + "\n" for ex in corpus))
    (out / "type_map.json").write_text(json.dumps(TYPE_MAP, indent=2) + "\n")
    (out / "glove.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
