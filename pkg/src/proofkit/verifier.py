"""Run an abstract domain through a network and evaluate the decision layer.

The first l-1 layers are propagated once, and ``analyze`` caches the
resulting penultimate element. ``check_property`` then evaluates the lower
bound for any pruned decision layer from that cache. This gives the same
result as re-running the column-zeroed network, because the final layer is
affine and pruning it does not touch the earlier layers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .domains import Element, IntervalVector, get_domain, min_linear_rows
from .model import Network, check_keep
from .numerics import ShapeError, as_matrix


@dataclass(frozen=True)
class InputRegion:
    """L-infinity ball around ``center`` clipped to the pixel range [0, 1]."""

    center: np.ndarray
    epsilon: float
    lo: np.ndarray
    hi: np.ndarray

    @property
    def dim(self) -> int:
        return self.center.shape[0]


def build_region(image, epsilon: float) -> InputRegion:
    x = np.asarray(image, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("image pixels must lie in [0, 1]")
    if not np.isfinite(epsilon) or epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    lo = np.maximum(x - epsilon, 0.0)
    hi = np.minimum(x + epsilon, 1.0)
    return InputRegion(x, float(epsilon), lo, hi)


@dataclass(frozen=True)
class Property:
    """Conjunction of linear constraints ``c_j . Y >= 0`` on the network output."""

    rows: np.ndarray

    def __post_init__(self):
        rows = as_matrix(self.rows, "property rows")
        if rows.shape[0] < 1:
            raise ShapeError("a property needs at least one row")
        object.__setattr__(self, "rows", rows)

    @property
    def num_rows(self) -> int:
        return self.rows.shape[0]

    def subset(self, idx: Iterable[int]) -> Property:
        return Property(self.rows[list(idx)])


def robustness_property(num_classes: int, label: int) -> Property:
    if not 0 <= label < num_classes:
        raise IndexError(f"label {label} outside [0, {num_classes})")
    rows = []
    for j in range(num_classes):
        if j != label:
            r = np.zeros(num_classes)
            r[label] = 1.0
            r[j] = -1.0
            rows.append(r)
    if not rows:
        raise ValueError("robustness needs at least two classes")
    return Property(np.array(rows))


@dataclass(frozen=True)
class Analysis:
    """Penultimate abstract element plus its per-neuron feature intervals."""

    domain: str
    penultimate: Element
    features: IntervalVector
    layer_bounds: tuple = ()

    @property
    def width(self) -> int:
        return self.features.dim


def analyze(net: Network, region: InputRegion, domain="deepz", keep_layers: bool = False) -> Analysis:
    """Propagate the region through layers 1..l-1 (penultimate ReLU included).

    With ``keep_layers`` the concretized (pre, post) bounds of every feature
    layer are kept, which the soundness checks use.
    """
    if region.dim != net.input_dim:
        raise ShapeError(f"region has {region.dim} inputs, network expects {net.input_dim}")
    dom = get_domain(domain)
    elem = dom.from_box(region.lo, region.hi)
    trail = []
    for layer in net.feature_layers:
        elem = dom.affine(elem, layer.weights, layer.bias)
        pre_box = dom.bounds(elem) if keep_layers else None
        if layer.activation == "relu":
            elem = dom.relu(elem)
        if keep_layers:
            trail.append((pre_box, dom.bounds(elem)))
    return Analysis(getattr(dom, "name", str(domain)), elem, _feature_bounds(dom, elem, net), tuple(trail))


def _feature_bounds(dom, elem, net: Network) -> IntervalVector:
    """Per-neuron intervals, met with [0, inf) after a ReLU.

    Zonotope concretization of an unstable ReLU output reaches below zero;
    the meet is still sound and leaves max(|lo|, |hi|) unchanged.
    """
    box = dom.bounds(elem)
    if net.feature_layers[-1].activation == "relu":
        box = IntervalVector(np.maximum(box.lo, 0.0), box.hi)
    return box


@dataclass(frozen=True)
class VerificationResult:
    verified: bool
    lambda_: float
    per_row_lambda: np.ndarray
    keep: frozenset[int]
    analysis: Analysis = field(repr=False)

    @property
    def penultimate(self) -> Element:
        return self.analysis.penultimate

    @property
    def features(self) -> IntervalVector:
        return self.analysis.features


class DecisionEvaluator:
    """Lower bounds for pruned decision layers from one cached analysis.

    ``C W_l`` and ``C B_l`` are computed once; each call masks columns.
    """

    def __init__(self, analysis: Analysis, net: Network, prop: Property):
        layer = net.decision_layer
        if prop.rows.shape[1] != layer.out_dim:
            raise ShapeError(
                f"property rows have {prop.rows.shape[1]} entries, network has {layer.out_dim} outputs"
            )
        if analysis.width != layer.in_dim:
            raise ShapeError("analysis does not belong to this network")
        self.analysis = analysis
        self.width = layer.in_dim
        self.coef = prop.rows @ layer.weights
        self.const = prop.rows @ layer.bias
        self.calls = 0

    def mask(self, keep: frozenset[int]) -> np.ndarray:
        m = np.zeros(self.width)
        m[sorted(keep)] = 1.0
        return m

    def row_lambdas(self, keep) -> np.ndarray:
        keep = check_keep(keep, self.width)
        self.calls += 1
        return min_linear_rows(self.analysis.penultimate, self.coef * self.mask(keep), self.const)

    def lam(self, keep) -> float:
        return float(self.row_lambdas(keep).min())

    def sufficient(self, keep) -> bool:
        return self.lam(keep) >= 0.0

    def result(self, keep) -> VerificationResult:
        keep = check_keep(keep, self.width)
        rows = self.row_lambdas(keep)
        lam = float(rows.min())
        return VerificationResult(lam >= 0.0, lam, rows, keep, self.analysis)


def check_property(analysis: Analysis, net: Network, prop: Property, keep=None) -> VerificationResult:
    """Evaluate the property with only the ``keep`` columns of W_l (all when None)."""
    if keep is None:
        keep = range(net.penultimate_width)
    return DecisionEvaluator(analysis, net, prop).result(keep)


def verify(net: Network, region: InputRegion, prop: Property, domain="deepz",
           keep=None) -> VerificationResult:
    return check_property(analyze(net, region, domain), net, prop, keep)


def propagate_full(net: Network, region: InputRegion, prop: Property, domain="deepz") -> VerificationResult:
    """Re-analysis through every layer, output element included; no caching."""
    dom = get_domain(domain)
    elem = dom.from_box(region.lo, region.hi)
    for layer in net.feature_layers:
        elem = dom.affine(elem, layer.weights, layer.bias)
        if layer.activation == "relu":
            elem = dom.relu(elem)
    last = net.decision_layer
    rows = []
    for c in prop.rows:
        # fold the property row into the last affine map, then minimize
        out = dom.affine(elem, (c @ last.weights)[None, :], np.array([c @ last.bias]))
        rows.append(float(dom.bounds(out).lo[0]))
    rows = np.array(rows)
    lam = float(rows.min())
    analysis = Analysis(getattr(dom, "name", str(domain)), elem, _feature_bounds(dom, elem, net))
    return VerificationResult(lam >= 0.0, lam, rows, frozenset(range(net.penultimate_width)), analysis)
