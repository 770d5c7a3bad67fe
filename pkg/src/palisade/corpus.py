"""Dataset ingestion: CSV loading, language gating, normalization, splitting.

Everything here is a pure function over its inputs. The unit that flows
through the detection layers is a Prompt: original text plus its normalized
form, token list, and detected language.
"""

from __future__ import annotations

import csv
import hashlib
import random
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources


class Pos(str, Enum):
    NOUN = "NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    OTHER = "OTHER"


@dataclass(frozen=True)
class Token:
    surface: str
    index: int
    pos: Pos = Pos.OTHER


@dataclass(frozen=True)
class RawRecord:
    text: str
    label: int  # 0 = clean, 1 = injected
    source_index: int


@dataclass(frozen=True)
class Prompt:
    original: str
    normalized: str
    tokens: tuple[Token, ...]
    language: str
    language_confidence: float


@dataclass(frozen=True)
class SplitDataset:
    train: list[RawRecord]
    test: list[RawRecord]
    seed: int
    ratio: float


class DatasetError(ValueError):
    """Malformed dataset file (bad row, bad label, empty file)."""


_NON_ALNUM = re.compile(r"[^a-z0-9]+")

# Language gate: fraction of tokens that must be known English stopwords.
ENGLISH_RATIO_THRESHOLD = 0.15
# Typical stopword density of running English text; used to scale confidence.
_TYPICAL_EN_DENSITY = 0.4

_STOPWORDS: frozenset[str] | None = None


def _data_text(name: str) -> str:
    return resources.files("palisade.data").joinpath(name).read_text(encoding="utf-8")


def english_stopwords() -> frozenset[str]:
    """The bundled English stopword set (one word per line on disk)."""
    global _STOPWORDS
    if _STOPWORDS is None:
        words = [w.strip() for w in _data_text("stopwords_en.txt").splitlines()]
        _STOPWORDS = frozenset(w for w in words if w and not w.startswith("#"))
    return _STOPWORDS


def normalize(text: str) -> str:
    """Lowercase, replace everything outside [a-z0-9] with spaces, collapse runs.

    Idempotent; output alphabet is {a-z, 0-9, space} with single spaces and
    no leading/trailing space.
    """
    return _NON_ALNUM.sub(" ", text.lower()).strip()


def tokenize(normalized: str) -> tuple[Token, ...]:
    return tuple(Token(surface=s, index=i) for i, s in enumerate(normalized.split()))


def detect_language(text: str) -> tuple[str, float]:
    """Offline stopword-frequency language gate.

    Returns ("en", confidence) when the fraction of tokens found in the
    bundled English stopword list is at least ENGLISH_RATIO_THRESHOLD,
    otherwise ("und", confidence). Empty or non-alphanumeric input yields
    ("und", 0.0). Deterministic and total.
    """
    tokens = normalize(text).split()
    if not tokens:
        return ("und", 0.0)
    stop = english_stopwords()
    ratio = sum(1 for t in tokens if t in stop) / len(tokens)
    if ratio >= ENGLISH_RATIO_THRESHOLD:
        return ("en", min(1.0, ratio / _TYPICAL_EN_DENSITY))
    return ("und", min(1.0, (ENGLISH_RATIO_THRESHOLD - ratio) / ENGLISH_RATIO_THRESHOLD))


def build_prompt(text: str, tagger=None) -> Prompt:
    """Normalize, tokenize and language-tag a raw prompt.

    `tagger` is anything with a tag(tokens) -> tokens method (see
    palisade.lexicon); without one, every token is tagged OTHER.
    """
    normalized = normalize(text)
    tokens = tokenize(normalized)
    if tagger is not None:
        tokens = tagger.tag(tokens)
    code, confidence = detect_language(text)
    return Prompt(
        original=text,
        normalized=normalized,
        tokens=tokens,
        language=code,
        language_confidence=confidence,
    )


def load_dataset(path) -> list[RawRecord]:
    """Load a `text,label` CSV (RFC-4180, UTF-8) into RawRecords.

    Labels are parsed strictly: anything but "0" or "1" is an error naming
    the offending line. Input order is preserved.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if [h.strip().lower() for h in header[:2]] != ["text", "label"]:
            raise DatasetError(f"{path}: expected header 'text,label', got {header!r}")
        records: list[RawRecord] = []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) < 2:
                raise DatasetError(f"{path}:{line}: missing column (expected text,label)")
            text, label_str = row[0], row[1].strip()
            if label_str not in ("0", "1"):
                raise DatasetError(f"{path}:{line}: label must be 0 or 1, got {label_str!r}")
            if not text:
                raise DatasetError(f"{path}:{line}: empty text")
            records.append(RawRecord(text=text, label=int(label_str), source_index=len(records)))
    if not records:
        raise DatasetError(f"{path}: no data rows")
    return records


def filter_english(records: list[RawRecord]) -> tuple[list[RawRecord], list[int]]:
    """Drop records whose detected language is not English.

    Returns (kept, dropped_source_indices); applied before splitting.
    """
    kept: list[RawRecord] = []
    dropped: list[int] = []
    for rec in records:
        code, _ = detect_language(rec.text)
        if code == "en":
            kept.append(rec)
        else:
            dropped.append(rec.source_index)
    return kept, dropped


def split(records: list[RawRecord], ratio: float, seed: int) -> SplitDataset:
    """Deterministic seeded shuffle, then a prefix cut of floor(ratio * N)."""
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    if len(records) < 2:
        raise ValueError(f"need at least 2 records to split, got {len(records)}")
    shuffled = list(records)
    random.Random(seed).shuffle(shuffled)
    cut = int(ratio * len(shuffled))
    return SplitDataset(train=shuffled[:cut], test=shuffled[cut:], seed=seed, ratio=ratio)


def record_hash(text: str) -> str:
    """Stable per-record content hash used in training fingerprints."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def dataset_fingerprint(records: list[RawRecord]) -> dict:
    """Fingerprint of a record set: size plus per-record content hashes."""
    return {
        "size": len(records),
        "record_hashes": sorted(record_hash(r.text) for r in records),
    }


def bundled_corpus_path():
    """Path to the packaged 546-prompt corpus CSV."""
    return resources.files("palisade.data").joinpath("corpus.csv")


def bundled_fixture_path():
    """Path to the packaged 40-prompt rule-layer fixture CSV."""
    return resources.files("palisade.data").joinpath("fixture_40.csv")
