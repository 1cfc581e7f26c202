"""Dense float64 linear algebra used by every other module.

Vectors and matrices are plain numpy arrays; the helpers here only add the
shape and finiteness checks the rest of the package relies on.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when operand dimensions do not chain."""


def as_vector(values, name: str = "vector") -> np.ndarray:
    v = np.array(values, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    m = np.array(values, dtype=np.float64)
    if m.ndim == 1 and m.size == 0:
        m = m.reshape(0, 0)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ShapeError(f"cannot multiply {m.shape} by {v.shape}")
    return m @ v


def affine(m: np.ndarray, v: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = matvec(m, v)
    if b.shape != out.shape:
        raise ShapeError(f"bias shape {b.shape} does not match output {out.shape}")
    return out + b


def dot(a: np.ndarray, b: np.ndarray) -> float:
    if a.ndim != 1 or a.shape != b.shape:
        raise ShapeError(f"cannot dot {a.shape} with {b.shape}")
    return float(a @ b)
