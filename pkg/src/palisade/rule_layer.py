"""Layer 1: lexical proximity scoring against the injection lexicon.

A prompt scores high when lexicon nouns, verbs, and adjectives co-occur close
together ("ignore previous instructions" packs a verb, adjective, and noun
into three tokens). Each cross-category pair of matched tokens contributes
1/(1 + distance); the raw sum is squashed to [0, 1) by x/(1+x).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .corpus import Prompt, RawRecord, build_prompt
from .lexicon import CATEGORIES, InjectionLexicon
from .verdicts import Decision, Layer, LayerVerdict


@dataclass(frozen=True)
class RuleScore:
    raw: float
    score: float
    matched: tuple[tuple[int, str, str], ...]  # (token index, word, category)


def score_prompt(prompt: Prompt, lexicon: InjectionLexicon) -> RuleScore:
    """Proximity score over cross-category lexicon matches.

    matched lists every (token index, word, category) whose surface appears
    in that lexicon category; a word in several categories matches once per
    category. raw sums 1/(1 + |i - j|) over unordered pairs of matched
    entries with different categories (fsum, so the value is independent of
    enumeration order); score = raw / (1 + raw).
    """
    matched: list[tuple[int, str, str]] = []
    for tok in prompt.tokens:
        for cat in CATEGORIES:
            if tok.surface in lexicon.category(cat):
                matched.append((tok.index, tok.surface, cat))
    contributions = []
    for a in range(len(matched)):
        ia, _, ca = matched[a]
        for b in range(a + 1, len(matched)):
            ib, _, cb = matched[b]
            if ca != cb:
                contributions.append(1.0 / (1.0 + abs(ia - ib)))
    raw = math.fsum(contributions)
    return RuleScore(raw=raw, score=raw / (1.0 + raw), matched=tuple(matched))


def calibrate_threshold(
    train: list[RawRecord], lexicon: InjectionLexicon, tagger=None
) -> float:
    """Pick the score cut maximizing F1 (positive = injected) on `train`.

    Candidate cuts are the observed score values; ties break toward the
    larger threshold. The decision rule downstream is INJECTED iff
    score >= threshold.
    """
    labels = [r.label for r in train]
    if not train or len(set(labels)) < 2:
        raise ValueError("calibration needs a non-empty training set with both labels")
    scores = [score_prompt(build_prompt(r.text, tagger), lexicon).score for r in train]

    best_tau, best_f1 = 0.0, -1.0
    for tau in sorted(set(scores)):
        tp = fp = fn = 0
        for s, y in zip(scores, labels):
            predicted_injected = s >= tau
            if predicted_injected and y == 1:
                tp += 1
            elif predicted_injected and y == 0:
                fp += 1
            elif not predicted_injected and y == 1:
                fn += 1
        f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else 0.0
        if f1 > best_f1 or (f1 == best_f1 and tau > best_tau):
            best_tau, best_f1 = tau, f1
    return best_tau


def rule_verdict(prompt: Prompt, lexicon: InjectionLexicon, threshold: float) -> LayerVerdict:
    """INJECTED iff the proximity score reaches the calibrated threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    start = time.perf_counter()
    rs = score_prompt(prompt, lexicon)
    decision = Decision.INJECTED if rs.score >= threshold else Decision.CLEAN
    diagnostics = [f"matched {idx}:{word}:{cat}" for idx, word, cat in rs.matched]
    diagnostics.append(f"raw={rs.raw:.6f} threshold={threshold:.6f}")
    return LayerVerdict(
        layer=Layer.RULE,
        decision=decision,
        score=rs.score,
        latency_s=time.perf_counter() - start,
        diagnostics=diagnostics,
    )
