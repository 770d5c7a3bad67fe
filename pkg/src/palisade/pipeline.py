"""Orchestration: run the enabled layers on a prompt and OR their verdicts.

Layers never see each other's output. The combined decision is INJECTED as
soon as any enabled layer says INJECTED; with fast_block enabled the
remaining layers are skipped once that happens (gateway mode), otherwise all
enabled layers always run (evaluation mode).
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path

from . import classifier as clf
from . import llm_judge, rule_layer, transformer
from .corpus import build_prompt
from .lexicon import InjectionLexicon, default_tagger
from .verdicts import CombinedVerdict, Decision, Layer, LayerVerdict

logger = logging.getLogger(__name__)

_LAYER_ORDER = {Layer.RULE: 0, Layer.CLASSIFIER: 1, Layer.JUDGE: 2}


class ConfigurationError(ValueError):
    """Invalid pipeline configuration or unloadable artifact at startup."""


@dataclass
class JudgeSettings:
    mode: str = "stub"  # live | cache | stub
    endpoint: str = "http://127.0.0.1:0/v1/chat/completions"
    model: str = "default"
    timeout_s: float = llm_judge.DEFAULT_TIMEOUT_S
    retries: int = llm_judge.DEFAULT_RETRIES
    api_key_env: str = llm_judge.DEFAULT_API_KEY_ENV
    max_concurrency: int = llm_judge.DEFAULT_MAX_CONCURRENCY
    system_prompt_path: str | None = None
    cache_dir: str | None = None

    def to_judge_config(self) -> llm_judge.JudgeConfig:
        if self.system_prompt_path:
            system_prompt = Path(self.system_prompt_path).read_text(encoding="utf-8")
        else:
            system_prompt = llm_judge.default_system_prompt()
        return llm_judge.JudgeConfig(
            endpoint=self.endpoint,
            model=self.model,
            system_prompt=system_prompt,
            timeout_s=self.timeout_s,
            retries=self.retries,
            api_key_env=self.api_key_env,
            max_concurrency=self.max_concurrency,
        )


@dataclass
class PipelineConfig:
    rule_enabled: bool = True
    classifier_enabled: bool = True
    judge_enabled: bool = False
    lexicon_path: str | None = None
    model_path: str | None = None
    classifier_backend: str = "native"  # native | transformer
    transformer_dir: str | None = None
    judge: JudgeSettings = field(default_factory=JudgeSettings)
    execution: str = "sequential"  # sequential | parallel
    fast_block: bool = False

    def __post_init__(self):
        if not (self.rule_enabled or self.classifier_enabled or self.judge_enabled):
            raise ConfigurationError("at least one layer must be enabled")
        if self.execution not in ("sequential", "parallel"):
            raise ConfigurationError(f"unknown execution mode {self.execution!r}")
        if self.classifier_backend not in ("native", "transformer"):
            raise ConfigurationError(f"unknown classifier backend {self.classifier_backend!r}")
        if self.judge.mode not in ("live", "cache", "stub"):
            raise ConfigurationError(f"unknown judge mode {self.judge.mode!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        layers = doc.get("layers", {})
        artifacts = doc.get("artifacts", {})
        judge_doc = doc.get("judge", {})
        judge = JudgeSettings(
            mode=judge_doc.get("mode", "stub"),
            endpoint=judge_doc.get("endpoint", JudgeSettings.endpoint),
            model=judge_doc.get("model", "default"),
            timeout_s=judge_doc.get("timeout_s", llm_judge.DEFAULT_TIMEOUT_S),
            retries=judge_doc.get("retries", llm_judge.DEFAULT_RETRIES),
            api_key_env=judge_doc.get("api_key_env", llm_judge.DEFAULT_API_KEY_ENV),
            max_concurrency=judge_doc.get("max_concurrency", llm_judge.DEFAULT_MAX_CONCURRENCY),
            system_prompt_path=judge_doc.get("system_prompt_path"),
            cache_dir=judge_doc.get("cache_dir"),
        )
        return cls(
            rule_enabled=layers.get("rule", True),
            classifier_enabled=layers.get("classifier", True),
            judge_enabled=layers.get("judge", False),
            lexicon_path=artifacts.get("lexicon"),
            model_path=artifacts.get("model"),
            classifier_backend=doc.get("classifier_backend", "native"),
            transformer_dir=artifacts.get("transformer_dir"),
            judge=judge,
            execution=doc.get("execution", "sequential"),
            fast_block=doc.get("fast_block", False),
        )

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls.from_dict(doc.get("pipeline", doc))


def combine(verdicts: list[LayerVerdict]) -> Decision:
    """Logical OR: INJECTED iff any layer verdict is INJECTED."""
    if not verdicts:
        raise ValueError("cannot combine an empty verdict list")
    return (
        Decision.INJECTED
        if any(v.decision is Decision.INJECTED for v in verdicts)
        else Decision.CLEAN
    )


class Pipeline:
    """Loaded artifacts plus the per-prompt evaluation entry point.

    All artifact loading happens here, so construction failures are
    configuration errors and request handling never loads anything. State is
    immutable after construction; evaluate_prompt is reentrant.
    """

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.tagger = default_tagger()
        self.lexicon: InjectionLexicon | None = None
        self.rule_threshold: float | None = None
        self.model = None
        self.transformer_backend = None
        self.judge_client = None
        self.judge_config = None
        self.startup_diagnostics: list[str] = []

        if config.rule_enabled:
            if not config.lexicon_path:
                raise ConfigurationError("rule layer enabled but no lexicon path configured")
            try:
                self.lexicon = InjectionLexicon.load(config.lexicon_path)
            except (OSError, ValueError, KeyError) as exc:
                raise ConfigurationError(f"cannot load lexicon {config.lexicon_path}: {exc}") from exc
            if self.lexicon.rule_threshold is None:
                raise ConfigurationError(
                    f"lexicon {config.lexicon_path} has no rule_threshold; run calibrate first"
                )
            self.rule_threshold = self.lexicon.rule_threshold

        if config.classifier_enabled:
            if config.classifier_backend == "transformer":
                try:
                    self.transformer_backend = transformer.TransformerBackend.load(
                        config.transformer_dir or ""
                    )
                except (transformer.ArtifactError, OSError) as exc:
                    # Spec'd fallback: unloadable transformer artifact engages
                    # the native backend with a diagnostic, at startup only.
                    note = f"transformer backend unavailable ({exc}); falling back to native"
                    logger.warning("%s", note)
                    self.startup_diagnostics.append(note)
            if self.transformer_backend is None:
                if not config.model_path:
                    raise ConfigurationError("classifier layer enabled but no model path configured")
                try:
                    self.model = clf.load_model(config.model_path)
                except (OSError, ValueError) as exc:
                    raise ConfigurationError(f"cannot load model {config.model_path}: {exc}") from exc

        if config.judge_enabled:
            self.judge_config = config.judge.to_judge_config()
            if config.judge.mode == "stub":
                self.judge_client = llm_judge.StubJudgeClient()
            else:
                client = llm_judge.JudgeClient(self.judge_config)
                if config.judge.mode == "cache":
                    if not config.judge.cache_dir:
                        raise ConfigurationError("judge mode 'cache' requires a cache_dir")
                    client = llm_judge.CachedJudgeClient(client, config.judge.cache_dir)
                self.judge_client = client

    @property
    def enabled_layers(self) -> list[Layer]:
        layers = []
        if self.config.rule_enabled:
            layers.append(Layer.RULE)
        if self.config.classifier_enabled:
            layers.append(Layer.CLASSIFIER)
        if self.config.judge_enabled:
            layers.append(Layer.JUDGE)
        return layers

    def _run_layer(self, layer: Layer, prompt, text: str) -> LayerVerdict:
        if layer is Layer.RULE:
            return rule_layer.rule_verdict(prompt, self.lexicon, self.rule_threshold)
        if layer is Layer.CLASSIFIER:
            if self.transformer_backend is not None:
                return transformer.transformer_verdict(self.transformer_backend, text)
            return clf.classifier_verdict(self.model, text)
        if layer is Layer.JUDGE:
            return llm_judge.judge_verdict(prompt, self.judge_config, self.judge_client)
        raise ValueError(f"unknown layer {layer}")

    def evaluate_prompt(self, text: str) -> CombinedVerdict:
        """Normalize once, run enabled layers independently, OR the verdicts."""
        start = time.perf_counter()
        prompt = build_prompt(text, self.tagger)
        layers = self.enabled_layers
        verdicts: list[LayerVerdict] = []

        if self.config.execution == "parallel" and len(layers) > 1:
            pool = ThreadPoolExecutor(max_workers=len(layers))
            try:
                pending = {pool.submit(self._run_layer, l, prompt, text) for l in layers}
                while pending:
                    done, pending = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in done:
                        verdicts.append(fut.result())
                    if self.config.fast_block and any(
                        v.decision is Decision.INJECTED for v in verdicts
                    ):
                        # Slower layers keep running unobserved; only the
                        # final decision matters in fast_block mode.
                        for fut in pending:
                            fut.cancel()
                        break
            finally:
                pool.shutdown(wait=False)
        else:
            for layer in layers:
                verdict = self._run_layer(layer, prompt, text)
                verdicts.append(verdict)
                if self.config.fast_block and verdict.decision is Decision.INJECTED:
                    break

        verdicts.sort(key=lambda v: _LAYER_ORDER[v.layer])
        if self.startup_diagnostics:
            for v in verdicts:
                if v.layer is Layer.CLASSIFIER:
                    v.diagnostics.extend(self.startup_diagnostics)
        return CombinedVerdict(
            verdicts=verdicts,
            final=combine(verdicts),
            total_latency_s=time.perf_counter() - start,
        )
