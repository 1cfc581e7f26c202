"""Mean input-gradient maps for proof features, plus PGM export."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import Network
from .numerics import ShapeError
from .verifier import InputRegion

DEFAULT_SAMPLES = 100


@dataclass(frozen=True)
class GradientMap:
    values: np.ndarray
    neuron: int
    sample_count: int
    seed: int


def sample_region(region: InputRegion, count: int, seed: int) -> np.ndarray:
    """``count`` points drawn uniformly from the box, one row per sample."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.uniform(region.lo, region.hi, size=(count, region.dim))


def batch_gradients(net: Network, xs: np.ndarray, neuron: int) -> np.ndarray:
    """Row-wise version of model.gradient_wrt_input for a stack of inputs."""
    if not 0 <= neuron < net.penultimate_width:
        raise IndexError(f"neuron {neuron} outside penultimate width {net.penultimate_width}")
    if xs.ndim != 2 or xs.shape[1] != net.input_dim:
        raise ShapeError(f"inputs of shape {xs.shape}, network expects (*, {net.input_dim})")
    h = xs
    pres = []
    for layer in net.feature_layers:
        pre = h @ layer.weights.T + layer.bias
        pres.append(pre)
        h = np.maximum(pre, 0.0) if layer.activation == "relu" else pre
    g = np.zeros((xs.shape[0], net.penultimate_width))
    g[:, neuron] = 1.0
    for layer, pre in zip(reversed(net.feature_layers), reversed(pres)):
        if layer.activation == "relu":
            g = g * (pre > 0.0)
        g = g @ layer.weights
    return g


def gradient_map(net: Network, region: InputRegion, neuron: int,
                 count: int = DEFAULT_SAMPLES, seed: int = 0) -> GradientMap:
    if not 0 <= neuron < net.penultimate_width:
        raise IndexError(f"neuron {neuron} outside penultimate width {net.penultimate_width}")
    xs = sample_region(region, count, seed)
    grads = batch_gradients(net, xs, neuron)
    return GradientMap(grads.mean(axis=0), neuron, count, seed)


def clip_map(values: np.ndarray, clip_sigma: float = 3.0) -> np.ndarray:
    mu = values.mean()
    sd = values.std()
    return np.clip(values, mu - clip_sigma * sd, mu + clip_sigma * sd)


def to_levels(values: np.ndarray, clip_sigma: float = 3.0) -> np.ndarray:
    """Clip to mean +/- clip_sigma std, then min-max scale to 0..255 (floor)."""
    v = clip_map(np.asarray(values, dtype=np.float64), clip_sigma)
    lo, hi = v.min(), v.max()
    if hi <= lo:
        return np.zeros(v.shape, dtype=np.uint8)
    t = (v - lo) / (hi - lo)
    return np.minimum(np.floor(t * 255.0), 255).astype(np.uint8)


def render_map(gm: GradientMap | np.ndarray, width: int, height: int, clip_sigma: float = 3.0,
               per_channel: bool = False) -> np.ndarray | list[np.ndarray]:
    """Grayscale image(s) of shape (height, width).

    Maps with C * width * height entries are treated as CHW; channels are
    averaged unless ``per_channel`` is set, in which case one image per
    channel is returned.
    """
    values = gm.values if isinstance(gm, GradientMap) else np.asarray(gm, dtype=np.float64)
    plane = width * height
    if plane < 1 or values.size % plane:
        raise ShapeError(f"{values.size} values do not fit a {width}x{height} image")
    channels = values.reshape(values.size // plane, height, width)
    if per_channel:
        return [to_levels(c, clip_sigma) for c in channels]
    return to_levels(channels.mean(axis=0), clip_sigma)


def pgm_bytes(levels: np.ndarray) -> bytes:
    height, width = levels.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + levels.astype(np.uint8).tobytes()


def write_pgm(path, levels: np.ndarray) -> Path:
    path = Path(path)
    path.write_bytes(pgm_bytes(levels))
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    width, height = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(height, width)
