"""Feedforward ReLU networks: loading, evaluation, input gradients, pruning."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .numerics import ShapeError, affine, as_matrix, as_vector

ACTIVATIONS = ("relu", "none")


class NetworkFormatError(ValueError):
    """A network document that cannot be turned into a valid Network."""


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.weights.shape[0] != self.bias.shape[0]:
            raise ShapeError(
                f"weights {self.weights.shape} do not match bias {self.bias.shape}"
            )

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def pre(self, x: np.ndarray) -> np.ndarray:
        return affine(self.weights, x, self.bias)

    def post(self, pre: np.ndarray) -> np.ndarray:
        return np.maximum(pre, 0.0) if self.activation == "relu" else pre


@dataclass(frozen=True)
class Network:
    """Layered affine+ReLU model whose last layer is the affine decision layer."""

    layers: tuple[Layer, ...]
    name: str = "network"
    input_shape: tuple[int, ...] = ()

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if len(layers) < 2:
            raise ShapeError("a network needs at least 2 layers")
        for i in range(1, len(layers)):
            if layers[i].in_dim != layers[i - 1].out_dim:
                raise ShapeError(
                    f"layer {i} expects {layers[i].in_dim} inputs, "
                    f"layer {i - 1} produces {layers[i - 1].out_dim}"
                )
        if layers[-1].activation != "none":
            raise ShapeError("the final layer must not have an activation")
        if not self.input_shape:
            object.__setattr__(self, "input_shape", (layers[0].in_dim,))
        elif int(np.prod(self.input_shape)) != layers[0].in_dim:
            raise ShapeError(
                f"input_shape {self.input_shape} does not flatten to {layers[0].in_dim}"
            )

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.layers[0].in_dim,) + tuple(layer.out_dim for layer in self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def penultimate_width(self) -> int:
        return self.layers[-1].in_dim

    @property
    def num_classes(self) -> int:
        return self.layers[-1].out_dim

    @property
    def decision_layer(self) -> Layer:
        return self.layers[-1]

    @property
    def feature_layers(self) -> tuple[Layer, ...]:
        return self.layers[:-1]

    @property
    def num_parameters(self) -> int:
        return sum(layer.weights.size + layer.bias.size for layer in self.layers)

    def with_decision_layer(self, layer: Layer) -> Network:
        return Network(self.layers[:-1] + (layer,), self.name, self.input_shape)


def _check_input(net: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ShapeError(f"input of shape {x.shape}, network expects ({net.input_dim},)")
    return x


def forward_trace(net: Network, x) -> list[tuple[np.ndarray, np.ndarray]]:
    """(pre-activation, post-activation) for every layer, in order."""
    h = _check_input(net, x)
    trace = []
    for layer in net.layers:
        pre = layer.pre(h)
        h = layer.post(pre)
        trace.append((pre, h))
    return trace


def forward(net: Network, x) -> np.ndarray:
    return forward_trace(net, x)[-1][1]


def penultimate(net: Network, x) -> np.ndarray:
    h = _check_input(net, x)
    for layer in net.feature_layers:
        h = layer.post(layer.pre(h))
    return h


def gradient_wrt_input(net: Network, x, neuron: int) -> np.ndarray:
    """d(post-activation of penultimate `neuron`) / d(input), ReLU'(0) taken as 0."""
    if not 0 <= neuron < net.penultimate_width:
        raise IndexError(f"neuron {neuron} outside penultimate width {net.penultimate_width}")
    h = _check_input(net, x)
    pres = []
    for layer in net.feature_layers:
        pre = layer.pre(h)
        pres.append(pre)
        h = layer.post(pre)
    g = np.zeros(net.penultimate_width)
    g[neuron] = 1.0
    for layer, pre in zip(reversed(net.feature_layers), reversed(pres)):
        if layer.activation == "relu":
            g = g * (pre > 0.0)
        g = layer.weights.T @ g
    return g


@dataclass(frozen=True)
class PrunedDecisionLayer:
    """Final layer with every column outside `keep` replaced by zeros; bias untouched."""

    base: Layer
    keep: frozenset[int] = field(default_factory=frozenset)

    @property
    def weights(self) -> np.ndarray:
        w = np.zeros_like(self.base.weights)
        idx = sorted(self.keep)
        w[:, idx] = self.base.weights[:, idx]
        return w

    @property
    def bias(self) -> np.ndarray:
        return self.base.bias

    def as_layer(self) -> Layer:
        return Layer(self.weights, self.bias.copy(), "none")

    def __call__(self, hidden: np.ndarray) -> np.ndarray:
        return affine(self.weights, np.asarray(hidden, dtype=np.float64), self.bias)


def check_keep(keep: Iterable[int], width: int) -> frozenset[int]:
    keep = frozenset(int(i) for i in keep)
    bad = [i for i in keep if not 0 <= i < width]
    if bad:
        raise IndexError(f"feature indices {sorted(bad)} outside [0, {width})")
    return keep


def prune_decision_layer(net: Network, keep: Iterable[int]) -> PrunedDecisionLayer:
    return PrunedDecisionLayer(net.decision_layer, check_keep(keep, net.penultimate_width))


# --------------------------------------------------------------------------
# File format
# --------------------------------------------------------------------------

_TOP_FIELDS = {"name", "input_shape", "layers"}
_DENSE_FIELDS = {"type", "weights", "bias", "activation"}
_CONV_FIELDS = {"type", "kernel", "bias", "stride", "padding", "activation"}
_POOLING = {"maxpool", "maxpool2d", "avgpool", "avgpool2d", "pool", "pooling"}


def conv2d_as_dense(kernel: np.ndarray, bias: np.ndarray, in_shape: Sequence[int],
                    stride: int = 1, padding: int = 0) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Materialize a 2-D convolution as a dense matrix over CHW-flattened inputs.

    kernel has shape (out_channels, in_channels, kh, kw). Returns the matrix,
    the per-position bias, and the (C, H, W) output shape.
    """
    c_out, c_in, kh, kw = kernel.shape
    c, h, w = in_shape
    if c != c_in:
        raise ShapeError(f"kernel expects {c_in} channels, input has {c}")
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    if oh < 1 or ow < 1:
        raise ShapeError("convolution output would be empty")
    mat = np.zeros((c_out * oh * ow, c * h * w))
    for o in range(c_out):
        for i in range(oh):
            for j in range(ow):
                row = (o * oh + i) * ow + j
                for ci in range(c_in):
                    for di in range(kh):
                        y = i * stride + di - padding
                        if not 0 <= y < h:
                            continue
                        for dj in range(kw):
                            x = j * stride + dj - padding
                            if 0 <= x < w:
                                mat[row, (ci * h + y) * w + x] += kernel[o, ci, di, dj]
    return mat, np.repeat(bias, oh * ow), (c_out, oh, ow)


def _as_chw(shape: Sequence[int]) -> tuple[int, int, int]:
    if len(shape) == 3:
        return tuple(shape)
    if len(shape) == 2:
        return (1, shape[0], shape[1])
    raise ShapeError(f"convolution needs a 2-D or 3-D input shape, got {tuple(shape)}")


def network_from_document(doc: dict) -> Network:
    if not isinstance(doc, dict):
        raise NetworkFormatError("network document must be an object")
    unknown = set(doc) - _TOP_FIELDS
    if unknown:
        raise NetworkFormatError(f"unknown top-level fields {sorted(unknown)}")
    missing = _TOP_FIELDS - set(doc)
    if missing:
        raise NetworkFormatError(f"missing top-level fields {sorted(missing)}")
    try:
        input_shape = tuple(int(s) for s in doc["input_shape"])
    except (TypeError, ValueError) as exc:
        raise NetworkFormatError(f"bad input_shape: {exc}") from None
    if not input_shape or any(s < 1 for s in input_shape):
        raise NetworkFormatError(f"bad input_shape {input_shape}")
    raw_layers = doc["layers"]
    if not isinstance(raw_layers, list):
        raise NetworkFormatError("layers must be a list")

    shape: tuple[int, ...] = input_shape
    layers = []
    for idx, spec in enumerate(raw_layers):
        try:
            if not isinstance(spec, dict):
                raise NetworkFormatError("layer must be an object")
            kind = spec.get("type")
            if isinstance(kind, str) and kind.lower() in _POOLING:
                raise NetworkFormatError(f"pooling layers ({kind!r}) are not supported")
            if kind not in ("dense", "conv2d"):
                raise NetworkFormatError(f"unknown layer type {kind!r}")
            activation = spec.get("activation")
            if activation not in ACTIVATIONS:
                raise NetworkFormatError(f"unknown activation {activation!r}")
            if kind == "dense":
                unknown = set(spec) - _DENSE_FIELDS
                if unknown:
                    raise NetworkFormatError(f"unknown fields {sorted(unknown)}")
                weights = as_matrix(spec["weights"], "weights")
                bias = as_vector(spec["bias"], "bias")
                flat = int(np.prod(shape))
                if weights.shape[1] != flat:
                    raise ShapeError(f"weights take {weights.shape[1]} inputs, previous layer gives {flat}")
                layer = Layer(weights, bias, activation)
                shape = (layer.out_dim,)
            else:
                unknown = set(spec) - _CONV_FIELDS
                if unknown:
                    raise NetworkFormatError(f"unknown fields {sorted(unknown)}")
                kernel = np.array(spec["kernel"], dtype=np.float64)
                if kernel.ndim != 4 or not np.all(np.isfinite(kernel)):
                    raise ShapeError("kernel must be a finite 4-D array (out, in, kh, kw)")
                bias = as_vector(spec["bias"], "bias")
                if bias.shape[0] != kernel.shape[0]:
                    raise ShapeError(f"bias length {bias.shape[0]} != {kernel.shape[0]} output channels")
                stride = int(spec.get("stride", 1))
                padding = int(spec.get("padding", 0))
                if stride < 1 or padding < 0:
                    raise NetworkFormatError("stride must be >= 1 and padding >= 0")
                mat, pos_bias, shape = conv2d_as_dense(kernel, bias, _as_chw(shape), stride, padding)
                layer = Layer(mat, pos_bias, activation)
        except KeyError as exc:
            raise NetworkFormatError(f"layer {idx}: missing field {exc.args[0]!r}") from None
        except (ShapeError, ValueError, TypeError) as exc:
            raise NetworkFormatError(f"layer {idx}: {exc}") from None
        layers.append(layer)

    if len(layers) < 2:
        raise NetworkFormatError("a network needs at least 2 layers")
    if layers[-1].activation != "none":
        raise NetworkFormatError(f"layer {len(layers) - 1}: final layer must use activation 'none'")
    return Network(tuple(layers), str(doc["name"]), input_shape)


def parse_network(text: str | bytes) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"malformed network document: {exc}") from None
    return network_from_document(doc)


def load_network(path) -> Network:
    with open(path, "rb") as fh:
        return parse_network(fh.read())


def network_to_document(net: Network) -> dict:
    """Dense-only document; conv layers come out in their lowered form."""
    return {
        "name": net.name,
        "input_shape": list(net.input_shape),
        "layers": [
            {
                "type": "dense",
                "weights": layer.weights.tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation,
            }
            for layer in net.layers
        ],
    }


def random_network(rng: np.random.Generator, widths: Sequence[int], scale: float = 1.0,
                   name: str = "random") -> Network:
    """He-style random ReLU net with the given layer widths (input first)."""
    layers = []
    for i in range(len(widths) - 1):
        w = rng.normal(0.0, scale * np.sqrt(2.0 / widths[i]), size=(widths[i + 1], widths[i]))
        b = rng.normal(0.0, 0.1 * scale, size=widths[i + 1])
        act = "none" if i == len(widths) - 2 else "relu"
        layers.append(Layer(w, b, act))
    return Network(tuple(layers), name)
