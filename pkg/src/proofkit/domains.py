"""Interval and zonotope abstract domains with affine and ReLU transformers.

A zonotope is stored as a center ``c`` (length d) and a generator matrix
``G`` (d x g); it denotes ``{c + G e : e in [-1, 1]^g}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .numerics import ShapeError, affine


@dataclass(frozen=True)
class IntervalVector:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ShapeError(f"interval bounds {self.lo.shape} and {self.hi.shape} differ")
        if np.any(self.lo > self.hi):
            raise ValueError("interval with lo > hi")

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @classmethod
    def point(cls, x) -> IntervalVector:
        x = np.asarray(x, dtype=np.float64)
        return cls(x.copy(), x.copy())


@dataclass(frozen=True)
class Zonotope:
    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        if self.center.ndim != 1 or self.generators.ndim != 2:
            raise ShapeError("zonotope needs a 1-D center and 2-D generator matrix")
        if self.generators.shape[0] != self.center.shape[0]:
            raise ShapeError(
                f"generators {self.generators.shape} do not match center {self.center.shape}"
            )

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def num_generators(self) -> int:
        return self.generators.shape[1]

    @classmethod
    def point(cls, x) -> Zonotope:
        x = np.asarray(x, dtype=np.float64)
        return cls(x.copy(), np.zeros((x.shape[0], 0)))

    @classmethod
    def from_box(cls, lo, hi) -> Zonotope:
        """One noise symbol per input coordinate, radius (hi - lo) / 2."""
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        return cls((hi + lo) / 2.0, np.diag((hi - lo) / 2.0))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        e = rng.uniform(-1.0, 1.0, size=(count, self.num_generators))
        return self.center + e @ self.generators.T


Element = Union[IntervalVector, Zonotope]


def interval_affine(iv: IntervalVector, m: np.ndarray, b: np.ndarray) -> IntervalVector:
    if m.shape[1] != iv.dim or m.shape[0] != b.shape[0]:
        raise ShapeError(f"cannot apply {m.shape} affine map to a {iv.dim}-D box")
    pos = np.maximum(m, 0.0)
    neg = np.minimum(m, 0.0)
    return IntervalVector(pos @ iv.lo + neg @ iv.hi + b, pos @ iv.hi + neg @ iv.lo + b)


def interval_relu(iv: IntervalVector) -> IntervalVector:
    return IntervalVector(np.maximum(iv.lo, 0.0), np.maximum(iv.hi, 0.0))


def zono_affine(z: Zonotope, m: np.ndarray, b: np.ndarray) -> Zonotope:
    if m.shape[1] != z.dim:
        raise ShapeError(f"cannot apply {m.shape} affine map to a {z.dim}-D zonotope")
    return Zonotope(affine(m, z.center, b), m @ z.generators)


def concretize(z: Zonotope) -> IntervalVector:
    radius = np.abs(z.generators).sum(axis=1)
    return IntervalVector(z.center - radius, z.center + radius)


def zono_relu(z: Zonotope) -> Zonotope:
    """Minimal-area zonotope ReLU; one fresh generator per unstable neuron."""
    box = concretize(z)
    lo, hi = box.lo, box.hi
    inactive = hi <= 0.0
    unstable = (lo < 0.0) & (hi > 0.0)

    slope = np.ones(z.dim)
    slope[inactive] = 0.0
    offset = np.zeros(z.dim)
    u, l = hi[unstable], lo[unstable]
    lam = u / (u - l)
    slope[unstable] = lam
    offset[unstable] = -lam * l / 2.0

    center = slope * z.center + offset
    gens = slope[:, None] * z.generators
    rows = np.flatnonzero(unstable)
    fresh = np.zeros((z.dim, rows.size))
    fresh[rows, np.arange(rows.size)] = offset[rows]
    return Zonotope(center, np.hstack([gens, fresh]))


def min_linear(elem: Element, a: np.ndarray, c: float = 0.0) -> float:
    """Exact minimum of ``a . x + c`` over the concretization of elem."""
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (elem.dim,):
        raise ShapeError(f"coefficient shape {a.shape} for a {elem.dim}-D element")
    if isinstance(elem, Zonotope):
        return float(a @ elem.center + c - np.abs(a @ elem.generators).sum())
    return float(np.minimum(a * elem.lo, a * elem.hi).sum() + c)


def min_linear_rows(elem: Element, coefs: np.ndarray, consts: np.ndarray) -> np.ndarray:
    """Row-wise min_linear for a coefficient matrix (one functional per row)."""
    if coefs.ndim != 2 or coefs.shape[1] != elem.dim:
        raise ShapeError(f"coefficients {coefs.shape} for a {elem.dim}-D element")
    if isinstance(elem, Zonotope):
        return coefs @ elem.center + consts - np.abs(coefs @ elem.generators).sum(axis=1)
    return np.minimum(coefs * elem.lo, coefs * elem.hi).sum(axis=1) + consts


# --------------------------------------------------------------------------
# Domain objects: what the verifier needs from a domain, bundled together.
# --------------------------------------------------------------------------


class IntervalDomain:
    name = "ibp"

    def from_box(self, lo, hi) -> IntervalVector:
        return IntervalVector(np.asarray(lo, dtype=np.float64).copy(),
                              np.asarray(hi, dtype=np.float64).copy())

    def affine(self, elem, m, b):
        return interval_affine(elem, m, b)

    def relu(self, elem):
        return interval_relu(elem)

    def bounds(self, elem) -> IntervalVector:
        return elem


class ZonotopeDomain:
    name = "deepz"

    def from_box(self, lo, hi) -> Zonotope:
        return Zonotope.from_box(lo, hi)

    def affine(self, elem, m, b):
        return zono_affine(elem, m, b)

    def relu(self, elem):
        return zono_relu(elem)

    def bounds(self, elem) -> IntervalVector:
        return concretize(elem)


DOMAINS = {"ibp": IntervalDomain(), "deepz": ZonotopeDomain()}


def get_domain(domain) -> IntervalDomain | ZonotopeDomain:
    """Accept a registered name or any object with the domain methods."""
    if isinstance(domain, str):
        try:
            return DOMAINS[domain]
        except KeyError:
            raise ValueError(f"unknown domain {domain!r}; choose from {sorted(DOMAINS)}") from None
    return domain
