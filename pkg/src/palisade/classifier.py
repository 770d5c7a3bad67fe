"""Layer 2 native backend: hashed character-n-gram logistic regression.

Features are lowercase character 3/4/5-grams plus word unigrams of the
normalized text, hashed into 2^18 buckets (BLAKE2b-64, little-endian, low 18
bits) and L2-normalized. Training is deterministic full-batch gradient
descent, so identical inputs serialize to identical model bytes.
"""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .corpus import SplitDataset, dataset_fingerprint, normalize
from .verdicts import Decision, Layer, LayerVerdict

HASH_BITS = 18
BUCKETS = 1 << HASH_BITS
CHAR_NGRAMS = (3, 4, 5)

MODEL_MAGIC = b"PLSD1"
MODEL_FORMAT_VERSION = 1

DEFAULT_EPOCHS = 300
DEFAULT_LEARNING_RATE = 2.0
DEFAULT_L2_LAMBDA = 0.01
DEFAULT_DECISION_THRESHOLD = 0.5


def hash_feature(feature: str) -> int:
    """Fixed, platform-independent bucket index for a feature string."""
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & (BUCKETS - 1)


def _feature_strings(text: str) -> list[str]:
    normalized = normalize(text)
    feats: list[str] = []
    for n in CHAR_NGRAMS:
        feats.extend(normalized[i : i + n] for i in range(len(normalized) - n + 1))
    feats.extend(normalized.split())
    return feats


def featurize(text: str) -> dict[int, float]:
    """Sparse L2-normalized bucket counts; empty when nothing normalizes."""
    buckets: dict[int, float] = {}
    for feat in _feature_strings(text):
        idx = hash_feature(feat)
        buckets[idx] = buckets.get(idx, 0.0) + 1.0
    if not buckets:
        return {}
    norm = float(np.sqrt(sum(v * v for v in buckets.values())))
    return {i: v / norm for i, v in buckets.items()}


def _design_matrix(texts: list[str]) -> sparse.csr_matrix:
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for text in texts:
        vec = featurize(text)
        indices.extend(vec.keys())
        data.extend(vec.values())
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(texts), BUCKETS),
    )


def _sigmoid(z: np.ndarray | float):
    return 1.0 / (1.0 + np.exp(-z))


def loss_and_grad(
    w: np.ndarray, b: float, X, y: np.ndarray, l2_lambda: float
) -> tuple[float, np.ndarray, float]:
    """Mean logistic loss with L2 on the weights (bias unregularized).

    Returns (loss, grad_w, grad_b); shared by the training loop and the
    finite-difference gradient tests.
    """
    n = y.shape[0]
    z = X @ w + b
    p = _sigmoid(z)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2_lambda * float(w @ w)
    grad_w = (X.T @ (p - y)) / n + l2_lambda * w
    grad_b = float(np.mean(p - y))
    return loss, np.asarray(grad_w).ravel(), grad_b


@dataclass
class ClassifierModel:
    weights: np.ndarray  # float64 in memory, float32 on disk
    bias: float
    l2_lambda: float = DEFAULT_L2_LAMBDA
    decision_threshold: float = DEFAULT_DECISION_THRESHOLD
    training_meta: dict = field(default_factory=dict)
    train_fingerprint: dict | None = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise ValueError("model weights must be finite")
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError("decision_threshold must be in (0, 1)")


def train(
    split: SplitDataset,
    epochs: int = DEFAULT_EPOCHS,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    l2_lambda: float = DEFAULT_L2_LAMBDA,
    seed: int = 0,
) -> ClassifierModel:
    """Deterministic full-batch gradient descent on the train split.

    The seed does not influence the optimization (zero init, full batch,
    fixed record order) but is recorded in the model metadata.
    """
    texts = [r.text for r in split.train]
    y = np.array([r.label for r in split.train], dtype=np.float64)
    if len(set(y.tolist())) < 2:
        raise ValueError("training data must contain both labels")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")

    X = _design_matrix(texts)
    w = np.zeros(BUCKETS, dtype=np.float64)
    b = 0.0
    initial_loss, _, _ = loss_and_grad(w, b, X, y, l2_lambda)
    for _ in range(epochs):
        _, grad_w, grad_b = loss_and_grad(w, b, X, y, l2_lambda)
        w -= learning_rate * grad_w
        b -= learning_rate * grad_b
    final_loss, _, _ = loss_and_grad(w, b, X, y, l2_lambda)

    return ClassifierModel(
        weights=w,
        bias=b,
        l2_lambda=l2_lambda,
        training_meta={
            "seed": seed,
            "epochs": epochs,
            "learning_rate": learning_rate,
            "initial_loss": initial_loss,
            "final_loss": final_loss,
        },
        train_fingerprint=dataset_fingerprint(split.train),
    )


def predict(model: ClassifierModel, text: str) -> float:
    """P(injected) = sigmoid(w . featurize(text) + bias)."""
    vec = featurize(text)
    z = model.bias
    if vec:
        idx = np.fromiter(vec.keys(), dtype=np.int64, count=len(vec))
        val = np.fromiter(vec.values(), dtype=np.float64, count=len(vec))
        z += float(model.weights[idx] @ val)
    return float(_sigmoid(z))


def classifier_verdict(model: ClassifierModel, text: str) -> LayerVerdict:
    """INJECTED iff the predicted probability reaches the decision threshold."""
    start = time.perf_counter()
    p = predict(model, text)
    decision = Decision.INJECTED if p >= model.decision_threshold else Decision.CLEAN
    return LayerVerdict(
        layer=Layer.CLASSIFIER,
        decision=decision,
        score=p,
        latency_s=time.perf_counter() - start,
        diagnostics=[f"backend=native threshold={model.decision_threshold}"],
    )


def save_model(model: ClassifierModel, path) -> None:
    """PLSD1 binary: magic, u32 LE weight count, float32 LE weights, JSON trailer."""
    weights32 = model.weights.astype("<f4")
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "bias": model.bias,
        "l2_lambda": model.l2_lambda,
        "decision_threshold": model.decision_threshold,
        "hash_bits": HASH_BITS,
        "char_ngrams": list(CHAR_NGRAMS),
        "word_unigrams": True,
        "training_meta": model.training_meta,
        "train_fingerprint": model.train_fingerprint,
    }
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", weights32.size))
        fh.write(weights32.tobytes())
        fh.write(json.dumps(meta, sort_keys=True).encode("utf-8"))


def load_model(path) -> ClassifierModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ValueError(f"{path}: bad magic; not a palisade classifier model")
    offset = len(MODEL_MAGIC)
    (count,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    end = offset + 4 * count
    if end > len(blob):
        raise ValueError(f"{path}: truncated weight block")
    weights = np.frombuffer(blob[offset:end], dtype="<f4").astype(np.float64)
    try:
        meta = json.loads(blob[end:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: bad metadata trailer ({exc})") from None
    if meta.get("hash_bits") != HASH_BITS:
        raise ValueError(f"{path}: hash_bits mismatch (model {meta.get('hash_bits')}, code {HASH_BITS})")
    return ClassifierModel(
        weights=weights,
        bias=float(meta["bias"]),
        l2_lambda=float(meta["l2_lambda"]),
        decision_threshold=float(meta["decision_threshold"]),
        training_meta=meta.get("training_meta", {}),
        train_fingerprint=meta.get("train_fingerprint"),
    )
