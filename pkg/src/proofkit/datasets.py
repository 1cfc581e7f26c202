"""Dataset files and converters for raw image dumps and ERAN-style networks.

Dataset CSV layout: one image per line, ``label,p0,p1,...`` with pixels in
[0, 1]; blank lines and lines starting with ``#`` are ignored. ``.npz``
files hold ``images`` (N x d) and ``labels`` (N,).
"""

from __future__ import annotations

import ast
import gzip
import logging
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import Layer, Network

log = logging.getLogger(__name__)

_NORM_MEAN = re.compile(r"mean\s*=\s*(\[[^\]]*\])")
_NORM_STD = re.compile(r"std\s*=\s*(\[[^\]]*\])")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.images.shape[1]


def _validated(images, labels) -> Dataset:
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    if images.ndim != 2 or labels.ndim != 1 or images.shape[0] != labels.shape[0]:
        raise DatasetError(f"images {images.shape} and labels {labels.shape} do not line up")
    if images.size and (np.any(images < 0) or np.any(images > 1) or not np.all(np.isfinite(images))):
        raise DatasetError("pixel values must lie in [0, 1]")
    if labels.size and (np.any(labels != np.round(labels)) or np.any(labels < 0)):
        raise DatasetError("labels must be non-negative integers")
    return Dataset(images, labels.astype(np.int64))


def load_dataset(path) -> Dataset:
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as data:
            return _validated(data["images"], data["labels"])
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric entry") from None
    if not rows:
        return Dataset(np.zeros((0, 0)), np.zeros(0, dtype=np.int64))
    if len({len(r) for r in rows}) != 1:
        raise DatasetError(f"{path}: rows have differing lengths")
    arr = np.array(rows)
    return _validated(arr[:, 1:], arr[:, 0])


def save_dataset_csv(path, images, labels) -> None:
    ds = _validated(images, labels)
    with open(path, "w") as fh:
        for x, y in zip(ds.images, ds.labels):
            fh.write(str(int(y)) + "," + ",".join(repr(float(v)) for v in x) + "\n")


def _open_maybe_gz(path):
    path = Path(path)
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def read_idx(path) -> np.ndarray:
    """Read an IDX array (the raw MNIST distribution format)."""
    with _open_maybe_gz(path) as fh:
        head = fh.read(4)
        if len(head) != 4 or head[:2] != b"\x00\x00":
            raise DatasetError(f"{path}: not an IDX file")
        if head[2] != 0x08:
            raise DatasetError(f"{path}: only unsigned-byte IDX data is supported")
        ndim = head[3]
        shape = struct.unpack(">" + "I" * ndim, fh.read(4 * ndim))
        data = np.frombuffer(fh.read(), dtype=np.uint8)
    if data.size != int(np.prod(shape)):
        raise DatasetError(f"{path}: truncated IDX payload")
    return data.reshape(shape)


def convert_idx(images_path, labels_path, out_path, limit: int | None = None) -> int:
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    images = images.reshape(images.shape[0], -1)[:limit] / 255.0
    labels = labels[:limit]
    save_dataset_csv(out_path, images, labels)
    return len(labels)


def parse_eran(text: str, input_shape=None, name: str = "eran") -> Network:
    """Dense ERAN text networks (ReLU/Affine blocks, optional Normalize line).

    Normalization is folded into the first affine layer. A ReLU on the last
    layer is dropped, since the decision layer here is purely affine.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    mean = std = None
    layers = []
    i = 0
    while i < len(lines):
        head = lines[i]
        if head.startswith("Normalize"):
            m, s = _NORM_MEAN.search(head), _NORM_STD.search(head)
            if not (m and s):
                raise DatasetError(f"cannot read normalization from {head!r}")
            mean = np.array(ast.literal_eval(m.group(1)), dtype=np.float64).ravel()
            std = np.array(ast.literal_eval(s.group(1)), dtype=np.float64).ravel()
            i += 1
        elif head in ("ReLU", "Affine"):
            try:
                w = np.array(ast.literal_eval(lines[i + 1]), dtype=np.float64)
                b = np.array(ast.literal_eval(lines[i + 2]), dtype=np.float64)
            except (IndexError, ValueError, SyntaxError) as exc:
                raise DatasetError(f"layer {len(layers)}: bad weights ({exc})") from None
            layers.append(Layer(w, b, "relu" if head == "ReLU" else "none"))
            i += 3
        else:
            raise DatasetError(f"unsupported ERAN block {head.split()[0]!r} at layer {len(layers)}")
    if not layers:
        raise DatasetError("no layers found")
    if mean is not None:
        d = layers[0].in_dim
        reps = d // mean.size
        mu = np.repeat(mean, reps) if mean.size > 1 else np.full(d, mean.item())
        sd = np.repeat(std, reps) if std.size > 1 else np.full(d, std.item())
        first = layers[0]
        w = first.weights / sd
        layers[0] = Layer(w, first.bias - w @ mu, first.activation)
    if layers[-1].activation != "none":
        log.warning("dropping ReLU on the final ERAN layer")
        last = layers[-1]
        layers[-1] = Layer(last.weights, last.bias, "none")
    shape = tuple(input_shape) if input_shape else (layers[0].in_dim,)
    return Network(tuple(layers), name, shape)
