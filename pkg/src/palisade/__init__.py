"""Palisade: layered prompt-injection detection.

Three independent layers (lexical proximity rules, a trained classifier, and
a companion-LLM judge) screen every prompt; a prompt is blocked when any
layer flags it. Exposed as a library, a CLI, and an HTTP filtering gateway.
"""

__version__ = "0.1.0"

from .pipeline import Pipeline, PipelineConfig, combine
from .verdicts import CombinedVerdict, Decision, Layer, LayerVerdict

__all__ = [
    "Pipeline",
    "PipelineConfig",
    "combine",
    "CombinedVerdict",
    "Decision",
    "Layer",
    "LayerVerdict",
    "__version__",
]
