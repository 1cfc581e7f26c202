"""Brute-force ground truth for small instances.

These routines enumerate subsets or sample concrete points. They exist to
check the fast paths and are not meant for anything beyond toy widths.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .domains import get_domain
from .model import Network
from .verifier import DecisionEvaluator, InputRegion, Property, analyze


class OracleRefusal(ValueError):
    """Instance too large for exhaustive enumeration."""


def _evaluator(net, region, prop, domain, limit):
    width = net.penultimate_width
    if width > limit:
        raise OracleRefusal(f"penultimate width {width} exceeds oracle limit {limit}")
    return DecisionEvaluator(analyze(net, region, domain), net, prop)


def exhaustive_min_sufficient(net: Network, region: InputRegion, prop: Property,
                              domain="deepz", limit: int = 20) -> frozenset[int] | None:
    """Smallest nonempty sufficient set; lexicographically first among ties."""
    ev = _evaluator(net, region, prop, domain, limit)
    if not ev.sufficient(range(ev.width)):
        return None
    for size in range(1, ev.width + 1):
        for combo in combinations(range(ev.width), size):
            if ev.sufficient(combo):
                return frozenset(combo)
    return None  # unreachable: the full set passed above


def exact_priority(net: Network, region: InputRegion, prop: Property, domain, i: int,
                   limit: int = 12) -> float:
    """max over sufficient S containing i of |Lambda(S) - Lambda(S minus {i})|."""
    ev = _evaluator(net, region, prop, domain, limit)
    if not 0 <= i < ev.width:
        raise IndexError(i)
    others = [j for j in range(ev.width) if j != i]
    best = None
    for size in range(len(others) + 1):
        for combo in combinations(others, size):
            s = frozenset(combo) | {i}
            lam = ev.lam(s)
            if lam >= 0.0:
                d = abs(lam - ev.lam(s - {i}))
                best = d if best is None else max(best, d)
    if best is None:
        raise ValueError(f"no sufficient set contains feature {i}")
    return best


def _batch_trace(net: Network, xs: np.ndarray):
    h = xs
    for layer in net.layers:
        pre = h @ layer.weights.T + layer.bias
        h = np.maximum(pre, 0.0) if layer.activation == "relu" else pre
        yield pre, h


def _excess(values: np.ndarray, box) -> float:
    return float(max((box.lo - values).max(initial=0.0), (values - box.hi).max(initial=0.0)))


def sampling_soundness(net: Network, region: InputRegion, domain="deepz", count: int = 1000,
                       seed: int = 0) -> float:
    """Largest distance by which a sampled activation escapes its abstract bounds.

    Checks pre- and post-activation values of every layer, the output layer
    included. A sound domain gives a value <= 0 up to rounding.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    dom = get_domain(domain)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(region.lo, region.hi, size=(count, region.dim))

    boxes = []
    elem = dom.from_box(region.lo, region.hi)
    for layer in net.layers:
        elem = dom.affine(elem, layer.weights, layer.bias)
        pre_box = dom.bounds(elem)
        if layer.activation == "relu":
            elem = dom.relu(elem)
        boxes.append((pre_box, dom.bounds(elem)))

    worst = max(_excess(xs, dom.bounds(dom.from_box(region.lo, region.hi))), 0.0)
    for (pre, post), (pre_box, post_box) in zip(_batch_trace(net, xs), boxes):
        worst = max(worst, _excess(pre, pre_box), _excess(post, post_box))
    return worst
