"""Word vectors, similarity, POS tagging, and injection-lexicon expansion.

The rule layer is driven by three word sets (nouns, verbs, adjectives) grown
from small seed lists: every noun/verb/adjective harvested from the injected
portion of the training data joins the lexicon when its embedding sits close
enough to one of the seeds.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

import numpy as np

from .corpus import Pos, RawRecord, Token, dataset_fingerprint, normalize, tokenize

logger = logging.getLogger(__name__)

CATEGORIES = ("nouns", "verbs", "adjectives")
_POS_TO_CATEGORY = {Pos.NOUN: "nouns", Pos.VERB: "verbs", Pos.ADJ: "adjectives"}

DEFAULT_SIMILARITY_THRESHOLD = 0.6

LEXICON_FORMAT = "palisade-lexicon/v1"


class OutOfVocabularyError(KeyError):
    """Word absent from the vector store; callers skip, never crash."""


class VectorStore:
    """Immutable word -> dense vector map with a single fixed dimension."""

    def __init__(self, entries: dict[str, np.ndarray], dimension: int):
        self.dimension = dimension
        self._entries = entries
        # Precomputed norms make expansion over large pools cheap.
        self._norms = {w: float(np.linalg.norm(v)) for w, v in entries.items()}

    def __contains__(self, word: str) -> bool:
        return word in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def vector(self, word: str) -> np.ndarray:
        try:
            return self._entries[word]
        except KeyError:
            raise OutOfVocabularyError(word) from None

    def norm(self, word: str) -> float:
        try:
            return self._norms[word]
        except KeyError:
            raise OutOfVocabularyError(word) from None


def load_vectors(path) -> VectorStore:
    """Parse a plain-text embedding file: `word v1 v2 ... vd` per line.

    The first line fixes the dimension; later lines with a different number
    of components (or unparsable components) are errors naming the line.
    """
    entries: dict[str, np.ndarray] = {}
    dimension: int | None = None
    with open(path, encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            word, comps = parts[0], parts[1:]
            if not comps:
                raise ValueError(f"{path}:{line_num}: no vector components")
            if dimension is None:
                dimension = len(comps)
            elif len(comps) != dimension:
                raise ValueError(
                    f"{path}:{line_num}: expected {dimension} components, got {len(comps)}"
                )
            try:
                vec = np.array([float(c) for c in comps], dtype=np.float64)
            except ValueError as exc:
                raise ValueError(f"{path}:{line_num}: unparsable number ({exc})") from None
            entries[word] = vec
    if dimension is None:
        raise ValueError(f"{path}: empty vector file")
    return VectorStore(entries, dimension)


def similarity(a: str, b: str, store: VectorStore) -> float:
    """Cosine similarity clamped to [0, 1]; 1.0 for a word with itself.

    Zero vectors have undefined cosine and score 0. Absent words raise
    OutOfVocabularyError.
    """
    na, nb = store.norm(a), store.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    if a == b:
        return 1.0
    cos = float(np.dot(store.vector(a), store.vector(b))) / (na * nb)
    return min(1.0, max(0.0, cos))


@dataclass(frozen=True)
class SeedLexicon:
    nouns: tuple[str, ...]
    verbs: tuple[str, ...]
    adjectives: tuple[str, ...]

    def category(self, name: str) -> tuple[str, ...]:
        return getattr(self, name)


@dataclass
class InjectionLexicon:
    """Expanded injected-word sets plus build provenance.

    provenance[category][word] = {"seed": best-matching seed, "similarity": score}
    rule_threshold is attached by the rule layer's calibration step.
    """

    nouns: set[str]
    verbs: set[str]
    adjectives: set[str]
    provenance: dict[str, dict[str, dict]]
    similarity_threshold: float
    rule_threshold: float | None = None
    train_fingerprint: dict | None = None
    warnings: list[str] = field(default_factory=list)

    def category(self, name: str) -> set[str]:
        return getattr(self, name)

    def categories_of(self, word: str) -> list[str]:
        return [c for c in CATEGORIES if word in self.category(c)]

    def to_dict(self) -> dict:
        return {
            "format": LEXICON_FORMAT,
            "similarity_threshold": self.similarity_threshold,
            "rule_threshold": self.rule_threshold,
            "nouns": sorted(self.nouns),
            "verbs": sorted(self.verbs),
            "adjectives": sorted(self.adjectives),
            "provenance": self.provenance,
            "train_fingerprint": self.train_fingerprint,
            "warnings": list(self.warnings),
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "InjectionLexicon":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("format") != LEXICON_FORMAT:
            raise ValueError(f"{path}: not a {LEXICON_FORMAT} document")
        return cls(
            nouns=set(doc["nouns"]),
            verbs=set(doc["verbs"]),
            adjectives=set(doc["adjectives"]),
            provenance=doc.get("provenance", {}),
            similarity_threshold=doc["similarity_threshold"],
            rule_threshold=doc.get("rule_threshold"),
            train_fingerprint=doc.get("train_fingerprint"),
            warnings=doc.get("warnings", []),
        )


def _parse_sections(text: str) -> dict[str, list[str]]:
    sections: dict[str, list[str]] = {c: [] for c in CATEGORIES}
    current: str | None = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in sections:
                raise ValueError(f"unknown section {line!r}")
            current = name
            continue
        if current is None:
            raise ValueError(f"word {line!r} before any section header")
        sections[current].append(normalize(line))
    return sections


def load_seed_lexicon(path=None) -> SeedLexicon:
    """Seed word lists from a sectioned text file ([nouns]/[verbs]/[adjectives])."""
    if path is None:
        text = resources.files("palisade.data").joinpath("seed_lexicon.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    sections = _parse_sections(text)
    for name in CATEGORIES:
        if not sections[name]:
            raise ValueError(f"seed lexicon section [{name}] is empty")
    return SeedLexicon(
        nouns=tuple(sections["nouns"]),
        verbs=tuple(sections["verbs"]),
        adjectives=tuple(sections["adjectives"]),
    )


class WordListTagger:
    """Bundled POS tagger: section word-lists first, then suffix heuristics.

    Lookup precedence is nouns, verbs, adjectives; unknown words fall back to
    suffix rules (-ing/-ize verbs, -ous/-ful/-al adjectives) and finally OTHER.
    Deterministic by construction. Any object with the same tag() shape can
    replace it.
    """

    _SUFFIX_RULES = (("ing", Pos.VERB), ("ize", Pos.VERB), ("ous", Pos.ADJ), ("ful", Pos.ADJ), ("al", Pos.ADJ))

    def __init__(self, nouns: Iterable[str], verbs: Iterable[str], adjectives: Iterable[str]):
        self._table: dict[str, Pos] = {}
        # First listing wins, so noun entries shadow verb/adjective duplicates.
        for words, pos in ((nouns, Pos.NOUN), (verbs, Pos.VERB), (adjectives, Pos.ADJ)):
            for w in words:
                self._table.setdefault(w, pos)

    @classmethod
    def from_file(cls, path=None) -> "WordListTagger":
        if path is None:
            text = resources.files("palisade.data").joinpath("tag_lexicon.txt").read_text("utf-8")
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        sections = _parse_sections(text)
        return cls(sections["nouns"], sections["verbs"], sections["adjectives"])

    def tag_word(self, word: str) -> Pos:
        pos = self._table.get(word)
        if pos is not None:
            return pos
        for suffix, fallback in self._SUFFIX_RULES:
            if len(word) > len(suffix) + 1 and word.endswith(suffix):
                return fallback
        return Pos.OTHER

    def tag(self, tokens: tuple[Token, ...]) -> tuple[Token, ...]:
        return tuple(
            Token(surface=t.surface, index=t.index, pos=self.tag_word(t.surface)) for t in tokens
        )


_DEFAULT_TAGGER: WordListTagger | None = None


def default_tagger() -> WordListTagger:
    global _DEFAULT_TAGGER
    if _DEFAULT_TAGGER is None:
        _DEFAULT_TAGGER = WordListTagger.from_file()
    return _DEFAULT_TAGGER


def tag_pos(tokens: tuple[Token, ...], tagger: WordListTagger | None = None) -> tuple[Token, ...]:
    """Assign exactly one of NOUN/VERB/ADJ/OTHER to every token."""
    return (tagger or default_tagger()).tag(tokens)


@dataclass(frozen=True)
class FilterResult:
    words: list[str]
    target_oov: bool


def filter_similar_words(
    words: list[str], target: str, threshold: float, store: VectorStore
) -> FilterResult:
    """Keep the words whose similarity to `target` is at least `threshold`.

    Out-of-vocabulary pool words are skipped; an out-of-vocabulary target
    yields an empty result with target_oov set. Input order is preserved.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    if target not in store:
        return FilterResult(words=[], target_oov=True)
    kept = []
    for w in words:
        if w not in store:
            continue
        if similarity(w, target, store) >= threshold:
            kept.append(w)
    return FilterResult(words=kept, target_oov=False)


def _pool_by_category(records: list[RawRecord], tagger: WordListTagger) -> dict[str, list[str]]:
    """Unique nouns/verbs/adjectives harvested from prompts, first-seen order."""
    pools: dict[str, list[str]] = {c: [] for c in CATEGORIES}
    seen: dict[str, set[str]] = {c: set() for c in CATEGORIES}
    for rec in records:
        for tok in tagger.tag(tokenize(normalize(rec.text))):
            cat = _POS_TO_CATEGORY.get(tok.pos)
            if cat and tok.surface not in seen[cat]:
                seen[cat].add(tok.surface)
                pools[cat].append(tok.surface)
    return pools


def expand_lexicon(
    seeds: SeedLexicon,
    injected_records: list[RawRecord],
    threshold: float,
    store: VectorStore,
    tagger: WordListTagger | None = None,
    train_fingerprint: dict | None = None,
) -> InjectionLexicon:
    """Grow the seed lists into the injection lexicon.

    Nouns/verbs/adjectives extracted from the injected records are pooled per
    category and filtered against every seed of the matching category; the
    union of matches joins the lexicon. In-vocabulary seeds always appear in
    their own category (self-similarity 1). Provenance records, per word, the
    best-matching seed.
    """
    bad = [r.source_index for r in injected_records if r.label != 1]
    if bad:
        raise ValueError(f"expand_lexicon expects injected records only; clean at {bad[:5]}")

    tagger = tagger or default_tagger()
    warnings: list[str] = []
    if not injected_records:
        warnings.append("no injected records supplied; lexicon contains seeds only")
    pools = _pool_by_category(injected_records, tagger)

    categories: dict[str, set[str]] = {c: set() for c in CATEGORIES}
    provenance: dict[str, dict[str, dict]] = {c: {} for c in CATEGORIES}

    for cat in CATEGORIES:
        for seed in seeds.category(cat):
            if seed not in store:
                warnings.append(f"seed {seed!r} ({cat}) not in vector store; skipped")
                continue
            categories[cat].add(seed)
            provenance[cat].setdefault(seed, {"seed": seed, "similarity": 1.0})
            result = filter_similar_words(pools[cat], seed, threshold, store)
            for word in result.words:
                score = similarity(word, seed, store)
                categories[cat].add(word)
                best = provenance[cat].get(word)
                if best is None or score > best["similarity"]:
                    provenance[cat][word] = {"seed": seed, "similarity": score}

    if train_fingerprint is None and injected_records:
        train_fingerprint = dataset_fingerprint(injected_records)
    for w in warnings:
        logger.warning("%s", w)
    return InjectionLexicon(
        nouns=categories["nouns"],
        verbs=categories["verbs"],
        adjectives=categories["adjectives"],
        provenance=provenance,
        similarity_threshold=threshold,
        train_fingerprint=train_fingerprint,
        warnings=warnings,
    )


def bundled_vectors_path():
    """Path to the packaged 50-dimension mini embedding file."""
    return resources.files("palisade.data").joinpath("vectors_50d.txt")
