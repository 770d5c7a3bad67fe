"""Layer 2 transformer backend: WordPiece encoding + ONNX graph inference.

The backend loads an exported bundle (model.onnx, vocab.txt) and scores text
through the graph with a small numpy executor. The ONNX file is parsed with
a self-contained protobuf wire-format reader covering the subset of the
format the exported graphs use; the executor supports exactly the op set
those graphs contain, and both are validated at load time so a corrupt or
unsupported artifact can never fail mid-request.
"""

from __future__ import annotations

import time
import unicodedata
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

from .verdicts import Decision, Layer, LayerVerdict

DEFAULT_MAX_LENGTH = 256

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
_WORDPIECE_MAX_CHARS = 100


class ArtifactError(ValueError):
    """Missing, corrupt, or unsupported inference artifact."""


# ---------------------------------------------------------------------------
# Tokenization (BERT-uncased semantics: clean, lowercase, strip accents,
# split punctuation, then greedy longest-match WordPiece).
# ---------------------------------------------------------------------------


class Vocabulary:
    def __init__(self, tokens: list[str]):
        self.id_of = {tok: i for i, tok in enumerate(tokens)}
        self.tokens = tokens
        for special in (PAD, UNK, CLS, SEP):
            if special not in self.id_of:
                raise ArtifactError(f"vocabulary missing special token {special}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.id_of


def load_vocabulary(path) -> Vocabulary:
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"vocabulary file not found: {path}")
    tokens = path.read_text(encoding="utf-8").splitlines()
    while tokens and tokens[-1] == "":
        tokens.pop()
    if not tokens:
        raise ArtifactError(f"vocabulary file empty: {path}")
    return Vocabulary(tokens)


def _is_whitespace(ch: str) -> bool:
    return ch in " \t\n\r" or unicodedata.category(ch) == "Zs"


def _is_control(ch: str) -> bool:
    if ch in "\t\n\r":
        return False
    return unicodedata.category(ch).startswith("C")


def _is_punctuation(ch: str) -> bool:
    cp = ord(ch)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def _is_cjk(cp: int) -> bool:
    return (
        0x4E00 <= cp <= 0x9FFF
        or 0x3400 <= cp <= 0x4DBF
        or 0x20000 <= cp <= 0x2A6DF
        or 0x2A700 <= cp <= 0x2B73F
        or 0x2B740 <= cp <= 0x2B81F
        or 0x2B820 <= cp <= 0x2CEAF
        or 0xF900 <= cp <= 0xFAFF
        or 0x2F800 <= cp <= 0x2FA1F
    )


def basic_tokenize(text: str) -> list[str]:
    cleaned = []
    for ch in text:
        cp = ord(ch)
        if cp == 0 or cp == 0xFFFD or _is_control(ch):
            continue
        cleaned.append(" " if _is_whitespace(ch) else ch)
    spaced = []
    for ch in "".join(cleaned):
        if _is_cjk(ord(ch)):
            spaced.extend((" ", ch, " "))
        else:
            spaced.append(ch)
    tokens = []
    for word in "".join(spaced).split():
        word = word.lower()
        word = "".join(c for c in unicodedata.normalize("NFD", word) if unicodedata.category(c) != "Mn")
        current: list[str] = []
        for ch in word:
            if _is_punctuation(ch):
                if current:
                    tokens.append("".join(current))
                    current = []
                tokens.append(ch)
            else:
                current.append(ch)
        if current:
            tokens.append("".join(current))
    return tokens


def wordpiece_tokenize(word: str, vocab: Vocabulary) -> list[str]:
    if len(word) > _WORDPIECE_MAX_CHARS:
        return [UNK]
    pieces: list[str] = []
    start = 0
    while start < len(word):
        end = len(word)
        piece = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = "##" + candidate
            if candidate in vocab:
                piece = candidate
                break
            end -= 1
        if piece is None:
            return [UNK]
        pieces.append(piece)
        start = end
    return pieces


@dataclass(frozen=True)
class EncodedSequence:
    input_ids: tuple[int, ...]
    attention_mask: tuple[int, ...]


def encode(text: str, max_length: int, vocab: Vocabulary) -> EncodedSequence:
    """Token ids: [CLS] + subwords + [SEP], truncated keeping [SEP], padded.

    The mask is 1 exactly on non-padding positions; output length is exactly
    max_length for every input.
    """
    if max_length < 2:
        raise ValueError("max_length must fit the start and end tokens")
    pieces: list[str] = []
    for word in basic_tokenize(text):
        pieces.extend(wordpiece_tokenize(word, vocab))
    pieces = pieces[: max_length - 2]
    tokens = [CLS] + pieces + [SEP]
    ids = [vocab.id_of[t] for t in tokens]
    mask = [1] * len(ids)
    pad_id = vocab.id_of[PAD]
    while len(ids) < max_length:
        ids.append(pad_id)
        mask.append(0)
    return EncodedSequence(input_ids=tuple(ids), attention_mask=tuple(mask))


# ---------------------------------------------------------------------------
# Minimal ONNX reader: protobuf wire format for the model subset we emit.
# Field numbers follow the public onnx.proto3 schema.
# ---------------------------------------------------------------------------

_WIRE_VARINT, _WIRE_I64, _WIRE_LEN, _WIRE_I32 = 0, 1, 2, 5


def _read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise ArtifactError("truncated varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise ArtifactError("varint too long")


def _signed(value: int) -> int:
    return value - (1 << 64) if value >= (1 << 63) else value


def _fields(buf: bytes):
    """Yield (field_number, wire_type, value) triples from a message buffer."""
    pos = 0
    while pos < len(buf):
        key, pos = _read_varint(buf, pos)
        field_num, wire_type = key >> 3, key & 0x7
        if wire_type == _WIRE_VARINT:
            value, pos = _read_varint(buf, pos)
        elif wire_type == _WIRE_I64:
            value, pos = buf[pos : pos + 8], pos + 8
        elif wire_type == _WIRE_LEN:
            length, pos = _read_varint(buf, pos)
            value, pos = buf[pos : pos + length], pos + length
            if len(value) != length:
                raise ArtifactError("truncated length-delimited field")
        elif wire_type == _WIRE_I32:
            value, pos = buf[pos : pos + 4], pos + 4
        else:
            raise ArtifactError(f"unsupported wire type {wire_type}")
        yield field_num, wire_type, value


def _packed_varints(value: bytes, wire_type: int) -> list[int]:
    if wire_type == _WIRE_VARINT:
        return [value]
    out = []
    pos = 0
    while pos < len(value):
        v, pos = _read_varint(value, pos)
        out.append(v)
    return out


_TENSOR_DTYPES = {1: np.float32, 6: np.int32, 7: np.int64, 9: np.bool_}


def _parse_tensor(buf: bytes) -> tuple[str, np.ndarray]:
    dims: list[int] = []
    data_type = 1
    name = ""
    raw = b""
    float_data: list[float] = []
    int64_data: list[int] = []
    for num, wt, val in _fields(buf):
        if num == 1:
            dims.extend(_packed_varints(val, wt))
        elif num == 2:
            data_type = val
        elif num == 8:
            name = val.decode("utf-8")
        elif num == 9:
            raw = val
        elif num == 4:
            float_data.extend(np.frombuffer(val, dtype="<f4").tolist() if wt == _WIRE_LEN else [np.frombuffer(val, dtype="<f4")[0]])
        elif num == 7:
            int64_data.extend(_signed(v) for v in _packed_varints(val, wt))
    if data_type not in _TENSOR_DTYPES:
        raise ArtifactError(f"unsupported tensor data type {data_type}")
    dtype = _TENSOR_DTYPES[data_type]
    if raw:
        array = np.frombuffer(raw, dtype=np.dtype(dtype).newbyteorder("<")).astype(dtype)
    elif float_data:
        array = np.array(float_data, dtype=dtype)
    elif int64_data:
        array = np.array(int64_data, dtype=dtype)
    else:
        array = np.zeros(0, dtype=dtype)
    return name, array.reshape(dims) if dims else array


def _parse_attribute(buf: bytes) -> tuple[str, object]:
    name = ""
    value: object = None
    ints: list[int] = []
    floats: list[float] = []
    for num, wt, val in _fields(buf):
        if num == 1:
            name = val.decode("utf-8")
        elif num == 2:
            value = float(np.frombuffer(val, dtype="<f4")[0])
        elif num == 3:
            value = _signed(val)
        elif num == 4:
            value = val.decode("utf-8", errors="replace")
        elif num == 5:
            value = _parse_tensor(val)[1]
        elif num == 7:
            floats.extend(np.frombuffer(val, dtype="<f4").tolist() if wt == _WIRE_LEN else [float(np.frombuffer(val, dtype='<f4')[0])])
        elif num == 8:
            ints.extend(_signed(v) for v in _packed_varints(val, wt))
    if ints:
        value = ints
    elif floats:
        value = floats
    return name, value


@dataclass(frozen=True)
class GraphNode:
    op_type: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    attrs: dict


def _parse_node(buf: bytes) -> GraphNode:
    inputs: list[str] = []
    outputs: list[str] = []
    op_type = ""
    attrs: dict = {}
    for num, _, val in _fields(buf):
        if num == 1:
            inputs.append(val.decode("utf-8"))
        elif num == 2:
            outputs.append(val.decode("utf-8"))
        elif num == 4:
            op_type = val.decode("utf-8")
        elif num == 5:
            k, v = _parse_attribute(val)
            attrs[k] = v
    return GraphNode(op_type=op_type, inputs=tuple(inputs), outputs=tuple(outputs), attrs=attrs)


def _parse_value_info_name(buf: bytes) -> str:
    for num, _, val in _fields(buf):
        if num == 1:
            return val.decode("utf-8")
    return ""


@dataclass
class OnnxGraph:
    nodes: list[GraphNode]
    initializers: dict[str, np.ndarray]
    inputs: list[str]
    outputs: list[str]


def parse_onnx(path) -> OnnxGraph:
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"model file not found: {path}")
    blob = path.read_bytes()
    graph_buf = None
    for num, _, val in _fields(blob):
        if num == 7:
            graph_buf = val
    if graph_buf is None:
        raise ArtifactError(f"{path}: no graph found (not an ONNX model?)")
    nodes: list[GraphNode] = []
    initializers: dict[str, np.ndarray] = {}
    inputs: list[str] = []
    outputs: list[str] = []
    for num, _, val in _fields(graph_buf):
        if num == 1:
            nodes.append(_parse_node(val))
        elif num == 5:
            name, arr = _parse_tensor(val)
            initializers[name] = arr
        elif num == 11:
            inputs.append(_parse_value_info_name(val))
        elif num == 12:
            outputs.append(_parse_value_info_name(val))
    if not nodes or not outputs:
        raise ArtifactError(f"{path}: empty graph")
    return OnnxGraph(nodes=nodes, initializers=initializers, inputs=inputs, outputs=outputs)


# ---------------------------------------------------------------------------
# Executor
# ---------------------------------------------------------------------------

_CAST_DTYPES = {1: np.float32, 6: np.int32, 7: np.int64, 9: np.bool_}


def _softmax(x: np.ndarray, axis: int) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def _layer_norm(x, scale, bias, axis: int, epsilon: float):
    mean = x.mean(axis=axis, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=axis, keepdims=True)
    return ((x - mean) / np.sqrt(var + epsilon) * scale + bias).astype(x.dtype)


class GraphExecutor:
    """Sequential numpy evaluation of a parsed graph (nodes in emitted order)."""

    SUPPORTED_OPS = frozenset(
        {
            "Add", "Sub", "Mul", "Div", "MatMul", "Gather", "Transpose", "Reshape",
            "Softmax", "LayerNormalization", "Erf", "Tanh", "Cast", "Sqrt",
        }
    )

    def __init__(self, graph: OnnxGraph):
        self.graph = graph
        unsupported = {n.op_type for n in graph.nodes} - self.SUPPORTED_OPS
        if unsupported:
            raise ArtifactError(f"graph uses unsupported ops: {sorted(unsupported)}")
        # Validate dataflow now: every node input must be an initializer, a
        # graph input, or a prior node output.
        known = set(graph.initializers) | set(graph.inputs)
        for node in graph.nodes:
            for name in node.inputs:
                if name and name not in known:
                    raise ArtifactError(f"node input {name!r} has no producer")
            known.update(node.outputs)
        missing = [o for o in graph.outputs if o not in known]
        if missing:
            raise ArtifactError(f"graph outputs never produced: {missing}")

    def run(self, feeds: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        values: dict[str, np.ndarray] = dict(self.graph.initializers)
        values.update(feeds)
        for node in self.graph.nodes:
            args = [values[name] for name in node.inputs]
            values[node.outputs[0]] = self._apply(node, args)
        return {name: values[name] for name in self.graph.outputs}

    @staticmethod
    def _apply(node: GraphNode, args: list[np.ndarray]) -> np.ndarray:
        op = node.op_type
        if op == "Add":
            return args[0] + args[1]
        if op == "Sub":
            return args[0] - args[1]
        if op == "Mul":
            return args[0] * args[1]
        if op == "Div":
            return args[0] / args[1]
        if op == "MatMul":
            return np.matmul(args[0], args[1])
        if op == "Gather":
            return np.take(args[0], args[1], axis=node.attrs.get("axis", 0))
        if op == "Transpose":
            return np.transpose(args[0], axes=node.attrs.get("perm"))
        if op == "Reshape":
            return np.reshape(args[0], [int(d) for d in args[1]])
        if op == "Softmax":
            return _softmax(args[0], axis=node.attrs.get("axis", -1))
        if op == "LayerNormalization":
            return _layer_norm(
                args[0], args[1], args[2],
                axis=node.attrs.get("axis", -1),
                epsilon=node.attrs.get("epsilon", 1e-5),
            )
        if op == "Erf":
            return erf(args[0]).astype(args[0].dtype)
        if op == "Tanh":
            return np.tanh(args[0])
        if op == "Sqrt":
            return np.sqrt(args[0])
        if op == "Cast":
            return args[0].astype(_CAST_DTYPES[node.attrs["to"]])
        raise ArtifactError(f"unsupported op {op}")  # unreachable after validation


# ---------------------------------------------------------------------------
# Backend
# ---------------------------------------------------------------------------


class TransformerBackend:
    """Loaded inference bundle: vocabulary + graph executor."""

    def __init__(self, executor: GraphExecutor, vocab: Vocabulary, max_length: int):
        self.executor = executor
        self.vocab = vocab
        self.max_length = max_length

    @classmethod
    def load(cls, bundle_dir, max_length: int = DEFAULT_MAX_LENGTH) -> "TransformerBackend":
        bundle = Path(bundle_dir)
        graph = parse_onnx(bundle / "model.onnx")
        expected = {"input_ids", "attention_mask"}
        if set(graph.inputs) != expected:
            raise ArtifactError(f"graph inputs {graph.inputs} != {sorted(expected)}")
        if graph.outputs != ["logits"]:
            raise ArtifactError(f"graph outputs {graph.outputs} != ['logits']")
        vocab = load_vocabulary(bundle / "vocab.txt")
        return cls(GraphExecutor(graph), vocab, max_length)

    def logits(self, text: str) -> np.ndarray:
        seq = encode(text, self.max_length, self.vocab)
        feeds = {
            "input_ids": np.array([seq.input_ids], dtype=np.int64),
            "attention_mask": np.array([seq.attention_mask], dtype=np.int64),
        }
        out = self.executor.run(feeds)["logits"]
        return np.asarray(out, dtype=np.float64).reshape(-1)

    def logits_for_ids(self, input_ids: list[int], attention_mask: list[int]) -> np.ndarray:
        feeds = {
            "input_ids": np.array([input_ids], dtype=np.int64),
            "attention_mask": np.array([attention_mask], dtype=np.int64),
        }
        out = self.executor.run(feeds)["logits"]
        return np.asarray(out, dtype=np.float64).reshape(-1)


def transformer_verdict(backend: TransformerBackend, text: str) -> LayerVerdict:
    """Two-class logits -> softmax -> P(injected); INJECTED iff >= 0.5."""
    start = time.perf_counter()
    logits = backend.logits(text)
    shifted = logits - logits.max()
    e = np.exp(shifted)
    p_injected = float(e[1] / e.sum())
    decision = Decision.INJECTED if p_injected >= 0.5 else Decision.CLEAN
    return LayerVerdict(
        layer=Layer.CLASSIFIER,
        decision=decision,
        score=p_injected,
        latency_s=time.perf_counter() - start,
        diagnostics=["backend=transformer"],
    )
