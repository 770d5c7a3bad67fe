"""Confusion matrices and derived metrics per layer and combined.

Positive class = injected (label 1). The OR combination guarantees the
combined false negatives never exceed any single layer's, at the price of at
least as many false positives as the worst layer; both consequences are
asserted structurally in the report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .corpus import SplitDataset, record_hash
from .pipeline import Pipeline, PipelineConfig, combine
from .verdicts import Decision, Layer

REPORT_SCHEMA = "eval-report/v1"


class LeakageError(ValueError):
    """An artifact was trained on records that appear in the test split."""


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion(predictions: list[Decision], labels: list[int]) -> ConfusionMatrix:
    """Count tp/fp/fn/tn with positive = injected."""
    if len(predictions) != len(labels):
        raise ValueError(f"length mismatch: {len(predictions)} predictions, {len(labels)} labels")
    if not predictions:
        raise ValueError("nothing to evaluate")
    tp = fp = fn = tn = 0
    for pred, label in zip(predictions, labels):
        injected = pred is Decision.INJECTED
        if injected and label == 1:
            tp += 1
        elif injected and label == 0:
            fp += 1
        elif not injected and label == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def metrics(cm: ConfusionMatrix) -> dict:
    """accuracy/precision/recall/F1/FPR/FNR with explicit zero-denominator flags.

    Undefined ratios are reported as 0.0 and named in "undefined".
    """
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    undefined: list[str] = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    accuracy = (cm.tp + cm.tn) / cm.total
    precision = ratio(cm.tp, cm.tp + cm.fp, "precision")
    recall = ratio(cm.tp, cm.tp + cm.fn, "recall")
    if precision + recall == 0.0:
        undefined.append("f1")
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    fpr = ratio(cm.fp, cm.fp + cm.tn, "fpr")
    fnr = ratio(cm.fn, cm.fn + cm.tp, "fnr")
    return {
        "accuracy": accuracy,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "fpr": fpr,
        "fnr": fnr,
        "undefined": sorted(set(undefined)),
    }


def _check_leakage(split: SplitDataset, fingerprint: dict | None, artifact: str) -> None:
    if not fingerprint:
        return
    trained_on = set(fingerprint.get("record_hashes", []))
    leaked = [r.source_index for r in split.test if record_hash(r.text) in trained_on]
    if leaked:
        raise LeakageError(
            f"{artifact} was trained on {len(leaked)} record(s) present in the test split "
            f"(source indices {leaked[:5]}{'...' if len(leaked) > 5 else ''})"
        )


def run_eval(split: SplitDataset, config: PipelineConfig, pipeline: Pipeline | None = None) -> dict:
    """Evaluate every test record through every enabled layer plus the OR.

    The report is a canonical eval-report/v1 document: per-layer and combined
    matrices and metrics, dataset fingerprint, and a config snapshot. Layer
    latencies are deliberately excluded so identical artifacts (and a cached
    or stubbed judge) reproduce the report byte for byte.
    """
    if not split.test:
        raise ValueError("test split is empty")
    if config.fast_block:
        raise ValueError("run_eval needs every layer's verdict; disable fast_block")
    pipeline = pipeline or Pipeline(config)
    if pipeline.lexicon is not None:
        _check_leakage(split, pipeline.lexicon.train_fingerprint, "lexicon")
    if pipeline.model is not None:
        _check_leakage(split, pipeline.model.train_fingerprint, "classifier model")

    labels = [r.label for r in split.test]
    per_layer: dict[Layer, list[Decision]] = {layer: [] for layer in pipeline.enabled_layers}
    combined: list[Decision] = []
    for record in split.test:
        verdict = pipeline.evaluate_prompt(record.text)
        for lv in verdict.verdicts:
            per_layer[lv.layer].append(lv.decision)
        combined.append(combine(verdict.verdicts))

    report: dict = {
        "schema": REPORT_SCHEMA,
        "dataset": {
            "test_size": len(split.test),
            "train_size": len(split.train),
            "split_seed": split.seed,
            "split_ratio": split.ratio,
        },
        "config": {
            "layers": [layer.value for layer in pipeline.enabled_layers],
            "classifier_backend": (
                "transformer" if pipeline.transformer_backend is not None else "native"
            ),
            "judge_mode": config.judge.mode if config.judge_enabled else None,
            "execution": config.execution,
        },
        "layers": {},
    }
    for layer, decisions in per_layer.items():
        cm = confusion(decisions, labels)
        report["layers"][layer.value] = {"confusion": cm.to_dict(), "metrics": metrics(cm)}
    combined_cm = confusion(combined, labels)
    report["combined"] = {"confusion": combined_cm.to_dict(), "metrics": metrics(combined_cm)}

    for layer, section in report["layers"].items():
        if combined_cm.fn > section["confusion"]["fn"]:
            raise AssertionError(f"combined FN exceeds {layer} FN; OR aggregation broken")
        if combined_cm.fp < section["confusion"]["fp"]:
            raise AssertionError(f"combined FP below {layer} FP; OR aggregation broken")
    return report


def render_report(report: dict) -> str:
    """Plain-text table view of a report document."""
    lines = []
    header = f"{'section':<12} {'tp':>5} {'fp':>5} {'fn':>5} {'tn':>5} {'acc':>7} {'prec':>7} {'rec':>7} {'f1':>7}"
    lines.append(header)
    lines.append("-" * len(header))

    def row(name: str, section: dict) -> str:
        cm, m = section["confusion"], section["metrics"]
        return (
            f"{name:<12} {cm['tp']:>5} {cm['fp']:>5} {cm['fn']:>5} {cm['tn']:>5} "
            f"{m['accuracy']:>7.4f} {m['precision']:>7.4f} {m['recall']:>7.4f} {m['f1']:>7.4f}"
        )

    for name in sorted(report["layers"]):
        lines.append(row(name, report["layers"][name]))
    lines.append(row("combined", report["combined"]))
    return "\n".join(lines) + "\n"


def report_to_json(report: dict) -> str:
    """Canonical JSON serialization (stable key order, trailing newline)."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report_to_json(report))
