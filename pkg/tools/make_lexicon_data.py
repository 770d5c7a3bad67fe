#!/usr/bin/env python3
"""Generate the bundled 50-d mini embedding file and the POS tag lexicon.

The embedding file is synthetic but structured: every cluster in
tools/wordlists.py gets a shared centroid so cosine similarity recovers the
synonym families the rule layer relies on; all other words receive
independent random directions (pairwise cosine ~0.1). Coverage includes
every token of the bundled corpus and fixture, the stopword list, and
pronounceable filler up to ~10k entries. Deterministic.

Usage: python tools/make_lexicon_data.py [--out-dir src/palisade/data]
"""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from wordlists import CLUSTERS, COMMON_ADJS, COMMON_NOUNS, COMMON_VERBS

DIMENSION = 50
TARGET_WORDS = 10_000
SEED = 7


def corpus_tokens(data_dir: Path) -> set[str]:
    import re

    tokens: set[str] = set()
    for name in ("corpus.csv", "fixture_40.csv"):
        with (data_dir / name).open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader)
            for text, _ in reader:
                tokens.update(re.sub(r"[^a-z0-9]+", " ", text.lower()).split())
    return tokens


def filler_words(count: int, taken: set[str]) -> list[str]:
    onsets = ["b", "br", "c", "cl", "d", "dr", "f", "fl", "g", "gr", "h", "j", "k", "l",
              "m", "n", "p", "pl", "pr", "qu", "r", "s", "sk", "sl", "sn", "st", "t", "tr", "v", "w"]
    nuclei = ["a", "e", "i", "o", "u", "ai", "ea", "ou"]
    codas = ["", "b", "ck", "d", "g", "l", "m", "n", "nd", "nt", "p", "r", "rn", "s", "sh", "st", "t", "th", "x"]
    words = []
    for (o1, n1, c1), (o2, n2, c2) in itertools.product(
        itertools.product(onsets, nuclei, codas), repeat=2
    ):
        word = o1 + n1 + c1 + o2 + n2 + c2
        if len(word) < 5 or word in taken:
            continue
        words.append(word)
        taken.add(word)
        if len(words) >= count:
            break
    return words


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="src/palisade/data", type=Path)
    args = parser.parse_args()
    data_dir = args.out_dir

    rng = np.random.default_rng(SEED)

    def unit(v: np.ndarray) -> np.ndarray:
        return v / np.linalg.norm(v)

    vectors: dict[str, np.ndarray] = {}
    tag_sections: dict[str, list[str]] = {"nouns": [], "verbs": [], "adjectives": []}

    for _, (category, members) in CLUSTERS.items():
        centroid = unit(rng.standard_normal(DIMENSION))
        for word in members:
            tag_sections[category].append(word)
            if word in vectors:
                continue
            spread = rng.uniform(0.25, 0.45)
            vectors[word] = unit(centroid + spread * unit(rng.standard_normal(DIMENSION)))

    for section, words in (("nouns", COMMON_NOUNS), ("verbs", COMMON_VERBS), ("adjectives", COMMON_ADJS)):
        tag_sections[section].extend(w for w in words if w not in tag_sections[section])

    stopwords = [
        w.strip()
        for w in (data_dir / "stopwords_en.txt").read_text("utf-8").splitlines()
        if w.strip()
    ]
    plain = set(COMMON_NOUNS) | set(COMMON_VERBS) | set(COMMON_ADJS) | set(stopwords)
    plain |= corpus_tokens(data_dir)
    for word in sorted(plain):
        if word not in vectors:
            vectors[word] = unit(rng.standard_normal(DIMENSION))

    taken = set(vectors)
    for word in filler_words(TARGET_WORDS - len(vectors), taken):
        vectors[word] = unit(rng.standard_normal(DIMENSION))

    out = data_dir / "vectors_50d.txt"
    with out.open("w", encoding="utf-8") as fh:
        for word in sorted(vectors):
            comps = " ".join(f"{x:.4f}" for x in vectors[word])
            fh.write(f"{word} {comps}\n")
    print(f"{out}: {len(vectors)} words, dimension {DIMENSION}")

    tag_out = data_dir / "tag_lexicon.txt"
    with tag_out.open("w", encoding="utf-8") as fh:
        fh.write("# Bundled POS word lists; lookup precedence nouns > verbs > adjectives.\n")
        for section in ("nouns", "verbs", "adjectives"):
            fh.write(f"\n[{section}]\n")
            seen: set[str] = set()
            for word in tag_sections[section]:
                if word not in seen:
                    seen.add(word)
                    fh.write(word + "\n")
    counts = {s: len(set(ws)) for s, ws in tag_sections.items()}
    print(f"{tag_out}: {counts}")


if __name__ == "__main__":
    main()
