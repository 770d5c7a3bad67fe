"""Shared verdict types produced by the detection layers."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Layer(str, Enum):
    RULE = "rule"
    CLASSIFIER = "classifier"
    JUDGE = "judge"


class Decision(str, Enum):
    INJECTED = "injected"
    CLEAN = "clean"

    @property
    def is_injected(self) -> bool:
        return self is Decision.INJECTED


@dataclass
class LayerVerdict:
    layer: Layer
    decision: Decision
    score: float | None = None  # absent for the binary judge layer
    latency_s: float = 0.0
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self, include_latency: bool = True) -> dict:
        doc = {
            "layer": self.layer.value,
            "decision": self.decision.value,
            "score": self.score,
            "diagnostics": list(self.diagnostics),
        }
        if include_latency:
            doc["latency_ms"] = round(self.latency_s * 1000.0, 3)
        return doc


@dataclass
class CombinedVerdict:
    verdicts: list[LayerVerdict]
    final: Decision
    total_latency_s: float = 0.0

    @property
    def injected(self) -> bool:
        return self.final.is_injected

    def to_dict(self, include_latency: bool = True) -> dict:
        doc = {
            "injected": self.injected,
            "layers": [v.to_dict(include_latency=include_latency) for v in self.verdicts],
        }
        if include_latency:
            doc["latency_ms"] = round(self.total_latency_s * 1000.0, 3)
        return doc
