"""Dense-network inference carried out entirely in posit arithmetic.

Each neuron accumulates ``w_ji * x_i`` in ascending ``i`` with one rounded
posit addition per term, then adds the bias, then applies the activation.
Only the multiplier changes between :attr:`MultMode.EXACT` and
:attr:`MultMode.PLAM`; accumulation is always exact-rounded addition.
"""
from __future__ import annotations

import csv
import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .exact_ops import exact_add, exact_mul
from .format import PositFormat, encode_float_array, to_signed, unpack
from .plam import plam_mul

__all__ = [
    "MultMode",
    "Tensor",
    "LayerSpec",
    "ModelSpec",
    "QuantizedLayer",
    "QuantizedModel",
    "InferenceResult",
    "load_model",
    "load_dataset",
    "quantize_model",
    "quantize_tensor",
    "dense_forward",
    "forward",
    "infer",
    "float_forward",
    "float_accuracy",
    "write_predictions",
    "bundled_model_path",
    "bundled_dataset_path",
    "softmax",
]


class MultMode(str, enum.Enum):
    EXACT = "exact"
    PLAM = "plam"


_MULTIPLIERS = {MultMode.EXACT: exact_mul, MultMode.PLAM: plam_mul}


@dataclass(frozen=True)
class Tensor:
    """Row-major posit patterns sharing one format."""

    data: np.ndarray
    fmt: PositFormat

    @property
    def shape(self):
        return self.data.shape

    def to_float(self) -> np.ndarray:
        f = unpack(self.data, self.fmt)
        mag = np.ldexp(1.0 + f.frac / float(1 << self.fmt.frac_bits), f.sf)
        out = np.where(f.sign == 1, -mag, mag)
        out = np.where(f.zero, 0.0, out)
        return np.where(f.nar, np.nan, out)


@dataclass(frozen=True)
class LayerSpec:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray
    activation: str = "relu"
    kind: str = "dense"

    def __post_init__(self):
        if self.kind != "dense":
            raise ValueError(f"unsupported layer kind {self.kind!r}")
        if self.activation not in ("relu", "none"):
            raise ValueError(f"unsupported activation {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ValueError("weights must be (out, in) and bias (out,)")


@dataclass(frozen=True)
class ModelSpec:
    input_dim: int
    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("model has no layers")
        dim = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.weights.shape[1] != dim:
                raise ValueError(f"layer {i} expects {layer.weights.shape[1]} inputs, gets {dim}")
            dim = layer.weights.shape[0]
        if self.layers[-1].activation != "none":
            raise ValueError("final layer must have activation 'none'")

    @property
    def num_classes(self) -> int:
        return self.layers[-1].weights.shape[0]


@dataclass(frozen=True)
class QuantizedLayer:
    weights: np.ndarray  # patterns (out, in)
    bias: np.ndarray
    activation: str


@dataclass(frozen=True)
class QuantizedModel:
    fmt: PositFormat
    input_dim: int
    layers: tuple[QuantizedLayer, ...]


def load_model(path) -> ModelSpec:
    with open(path) as fh:
        doc = json.load(fh)
    try:
        layers = tuple(
            LayerSpec(
                weights=np.asarray(l["weights"], dtype=np.float64),
                bias=np.asarray(l["bias"], dtype=np.float64),
                activation=l.get("activation", "none"),
                kind=l.get("kind", "dense"),
            )
            for l in doc["layers"]
        )
        return ModelSpec(int(doc["input_dim"]), layers)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model file: {exc}") from exc


def load_dataset(path) -> tuple[np.ndarray, np.ndarray]:
    """``(labels, features)`` from a CSV whose first column is the label.

    A header row is detected by its first field not being an integer.
    """
    with open(path, newline="") as fh:
        first = fh.readline()
    skip = 0
    try:
        int(first.split(",")[0])
    except ValueError:
        skip = 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    labels = data[:, 0]
    if not np.all(labels == np.round(labels)):
        raise ValueError("labels must be integers")
    return labels.astype(np.int64), data[:, 1:]


def quantize_tensor(x, fmt: PositFormat) -> Tensor:
    return Tensor(encode_float_array(x, fmt), fmt)


def quantize_model(model: ModelSpec, fmt: PositFormat) -> QuantizedModel:
    layers = []
    for layer in model.layers:
        if not (np.all(np.isfinite(layer.weights)) and np.all(np.isfinite(layer.bias))):
            raise ValueError("model contains non-finite parameters")
        layers.append(QuantizedLayer(
            encode_float_array(layer.weights, fmt),
            encode_float_array(layer.bias, fmt),
            layer.activation,
        ))
    return QuantizedModel(fmt, model.input_dim, tuple(layers))


def _relu(p: np.ndarray, fmt: PositFormat) -> np.ndarray:
    negative = (p >> (fmt.n - 1)) & 1
    return np.where((negative == 1) & (p != fmt.nar), 0, p)


def dense_forward(x: Tensor, layer: QuantizedLayer, mode=MultMode.EXACT) -> Tensor:
    """One dense layer for a single sample ``(in,)`` or a batch ``(batch, in)``."""
    fmt = x.fmt
    mul = _MULTIPLIERS[MultMode(mode)]
    data = x.data
    single = data.ndim == 1
    if single:
        data = data[None, :]
    if data.shape[1] != layer.weights.shape[1]:
        raise ValueError(f"expected {layer.weights.shape[1]} inputs, got {data.shape[1]}")

    acc = np.zeros((data.shape[0], layer.weights.shape[0]), dtype=np.int64)
    for i in range(data.shape[1]):
        col = data[:, i]
        # adding an exact zero is the identity, so all-zero columns can be skipped
        if not col.any():
            continue
        acc = exact_add(acc, mul(col[:, None], layer.weights[None, :, i], fmt), fmt)
    acc = exact_add(acc, layer.bias[None, :], fmt)
    if layer.activation == "relu":
        acc = _relu(acc, fmt)
    return Tensor(acc[0] if single else acc, fmt)


def forward(model: QuantizedModel, x: Tensor, mode=MultMode.EXACT) -> Tensor:
    for layer in model.layers:
        x = dense_forward(x, layer, mode)
    return x


@dataclass(frozen=True)
class InferenceResult:
    predictions: np.ndarray
    labels: np.ndarray
    top1: float
    top5: float | None

    def summary(self) -> str:
        parts = [f"count={len(self.labels)}", f"top1={self.top1:.4f}"]
        if self.top5 is not None:
            parts.append(f"top5={self.top5:.4f}")
        return " ".join(parts)


def _rank_keys(logits: Tensor) -> np.ndarray:
    keys = to_signed(logits.data, logits.fmt)
    # NaR never wins; sentinel stays negatable (patterns fit in 32 bits)
    return np.where(logits.data == logits.fmt.nar, -(1 << 40), keys)


def _top_k_hits(keys: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    # stable sort on negated keys keeps lower class index first among ties
    order = np.argsort(-keys, axis=1, kind="stable")[:, :k]
    return (order == labels[:, None]).any(axis=1)


def infer(model: QuantizedModel, features, labels, mode=MultMode.EXACT, workers: int = 1,
          chunk: int = 250) -> InferenceResult:
    """Classify every sample and score top-1 (and top-5 when there are more than 5 classes)."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[1] != model.input_dim:
        raise ValueError(f"dataset has {features.shape[-1]} features, model expects {model.input_dim}")
    if len(features) != len(labels):
        raise ValueError("features and labels differ in length")
    x = quantize_tensor(features, model.fmt)

    def run(start):
        return _rank_keys(forward(model, Tensor(x.data[start:start + chunk], model.fmt), mode))

    starts = range(0, len(labels), chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    num_classes = model.layers[-1].weights.shape[0]
    keys = np.concatenate(parts) if parts else np.empty((0, num_classes), dtype=np.int64)

    preds = np.argmax(keys, axis=1) if len(keys) else np.empty(0, dtype=np.int64)
    n = max(len(labels), 1)
    top1 = float((preds == labels).sum() / n)
    top5 = None
    if num_classes > 5:
        top5 = float(_top_k_hits(keys, labels, 5).sum() / n) if len(keys) else 0.0
    return InferenceResult(preds, labels, top1, top5)


def float_forward(model: ModelSpec, features) -> np.ndarray:
    """float64 reference logits."""
    h = np.asarray(features, dtype=np.float64)
    for layer in model.layers:
        h = h @ layer.weights.T + layer.bias
        if layer.activation == "relu":
            h = np.maximum(h, 0.0)
    return h


def float_accuracy(model: ModelSpec, features, labels) -> float:
    preds = np.argmax(float_forward(model, features), axis=1)
    return float((preds == np.asarray(labels)).mean())


def write_predictions(result: InferenceResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "label", "prediction", "correct"])
        for i, (y, p) in enumerate(zip(result.labels.tolist(), result.predictions.tolist())):
            w.writerow([i, y, p, int(y == p)])


def _data_file(name: str) -> Path:
    return Path(str(resources.files("posit_plam") / "data" / name))


def bundled_model_path() -> Path:
    return _data_file("mlp_mnist.json")


def bundled_dataset_path() -> Path:
    return _data_file("mnist2k.csv")


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


