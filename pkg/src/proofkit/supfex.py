"""Proof features, their priorities, and the iterative-halving pruning search.

A proof feature is the verifier's interval for one penultimate neuron. Its
priority ``P_ub`` bounds how much removing it can move the property's lower
bound. The search keeps halving the candidate set by priority and spends
one sufficiency check per halving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import Network, check_keep
from .verifier import (
    Analysis,
    DecisionEvaluator,
    InputRegion,
    Property,
    VerificationResult,
    analyze,
)


@dataclass(frozen=True)
class ProofFeature:
    neuron: int
    lo: float
    hi: float
    priority: float


@dataclass(frozen=True)
class ProofFeatureSet:
    features: tuple[ProofFeature, ...]

    def __post_init__(self):
        neurons = [f.neuron for f in self.features]
        if len(set(neurons)) != len(neurons):
            raise ValueError("duplicate neuron in proof feature set")

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    def __getitem__(self, neuron: int) -> ProofFeature:
        for f in self.features:
            if f.neuron == neuron:
                return f
        raise KeyError(neuron)

    @property
    def priorities(self) -> np.ndarray:
        return np.array([f.priority for f in self.features])

    @property
    def neurons(self) -> list[int]:
        return [f.neuron for f in self.features]

    def ranked(self) -> list[int]:
        """Neuron indices by decreasing priority, ties to the lower index."""
        return [f.neuron for f in sorted(self.features, key=lambda f: (-f.priority, f.neuron))]

    def subset(self, neurons: Iterable[int]) -> ProofFeatureSet:
        wanted = set(neurons)
        return ProofFeatureSet(tuple(f for f in self.features if f.neuron in wanted))


def _analysis_of(result) -> Analysis:
    return result.analysis if isinstance(result, VerificationResult) else result


def priority_coefficients(net: Network, prop: Property) -> np.ndarray:
    """max_j |c_j . W_l[:, i]| for every penultimate neuron i."""
    return np.abs(prop.rows @ net.decision_layer.weights).max(axis=0)


def compute_priorities(result, net: Network, prop: Property) -> ProofFeatureSet:
    feats = _analysis_of(result).features
    reach = np.maximum(np.abs(feats.lo), np.abs(feats.hi))
    pri = priority_coefficients(net, prop) * reach
    return ProofFeatureSet(tuple(
        ProofFeature(i, float(feats.lo[i]), float(feats.hi[i]), float(pri[i]))
        for i in range(feats.dim)
    ))


def compute_delta(result, net: Network, prop: Property, s: Iterable[int], i: int) -> float:
    """|Lambda(S) - Lambda(S minus {i})| from the cached penultimate element."""
    ev = DecisionEvaluator(_analysis_of(result), net, prop)
    s = check_keep(s, ev.width)
    if i not in s:
        raise IndexError(f"feature {i} is not in the set")
    return abs(ev.lam(s) - ev.lam(s - {i}))


def delta_set(result, net: Network, prop: Property, s: Iterable[int]) -> float:
    """|Lambda(full) - Lambda(S)|: how far pruning down to S moves the bound."""
    ev = DecisionEvaluator(_analysis_of(result), net, prop)
    return abs(ev.lam(range(ev.width)) - ev.lam(s))


def zero_features(fs: ProofFeatureSet, threshold: float = 0.0) -> frozenset[int]:
    # exact equality unless a threshold is asked for
    if threshold == 0.0:
        return frozenset(f.neuron for f in fs if f.priority == 0.0)
    return frozenset(f.neuron for f in fs if f.priority <= threshold)


def theorem2_bound(fs: ProofFeatureSet, lambda_full: float, threshold: float = 0.0) -> int:
    """Guaranteed upper bound on the size of the set the search keeps.

    ``width - |zero features| - floor(lambda / P_max)``, clamped at 0. When
    every priority is zero the empty set already suffices, so the bound is 0.
    """
    if lambda_full < 0:
        raise ValueError("the bound only applies to verified properties")
    p_max = float(fs.priorities.max()) if len(fs) else 0.0
    if p_max == 0.0:
        return 0
    bound = len(fs) - len(zero_features(fs, threshold)) - math.floor(lambda_full / p_max)
    return max(bound, 0)


def call_budget(width: int) -> int:
    return 2 * math.ceil(math.log2(width)) + 2 if width > 1 else 2


@dataclass(frozen=True)
class SupfexOutcome:
    verified: bool
    domain: str
    width: int
    lambda_full: float
    verifier_calls: int
    kept: tuple[int, ...] = ()
    lambda_kept: float = float("nan")
    bound_thm2: int = 0
    zero_count: int = 0
    features: ProofFeatureSet | None = None

    @property
    def bias_sufficient(self) -> bool:
        return self.verified and not self.kept

    @property
    def kept_set(self) -> frozenset[int]:
        return frozenset(self.kept)

    def kept_features(self) -> list[ProofFeature]:
        """Kept features in decreasing priority order (rank 0 first)."""
        return [self.features[i] for i in self.kept] if self.features else []


def halving_search(order: Sequence[int], sufficient, check_invariant=None) -> tuple[list[int], int]:
    """Core loop: returns (kept indices in priority order, sufficiency checks made).

    ``order`` lists candidates by decreasing priority. When a lone candidate
    remains, the check is on the kept set alone; the candidate is pruned if
    that passes and kept otherwise.
    """
    kept: list[int] = []
    cand = list(order)
    checks = 0
    while cand:
        if check_invariant is not None:
            assert check_invariant(kept + cand), "kept + candidates lost sufficiency"
        half = len(cand) // 2
        top, rest = cand[:half], cand[half:]
        checks += 1
        if sufficient(kept + top):
            cand = top
        elif not top:
            kept += cand
            cand = []
        else:
            kept += top
            cand = rest
    return kept, checks


def supfex_extract(net: Network, region: InputRegion, prop: Property, domain="deepz",
                   zero_threshold: float = 0.0, check_invariant: bool = False) -> SupfexOutcome:
    analysis = analyze(net, region, domain)
    return supfex_from_analysis(analysis, net, prop, zero_threshold, check_invariant)


def supfex_from_analysis(analysis: Analysis, net: Network, prop: Property,
                         zero_threshold: float = 0.0, check_invariant: bool = False) -> SupfexOutcome:
    ev = DecisionEvaluator(analysis, net, prop)
    width = ev.width
    lam_full = ev.lam(range(width))
    if lam_full < 0:
        return SupfexOutcome(False, analysis.domain, width, lam_full, ev.calls)

    fs = compute_priorities(analysis, net, prop)
    inv = None
    if check_invariant:
        probe = DecisionEvaluator(analysis, net, prop)
        inv = probe.sufficient
    kept, _ = halving_search(fs.ranked(), ev.sufficient, inv)
    calls = ev.calls
    lam_kept = DecisionEvaluator(analysis, net, prop).lam(kept)
    return SupfexOutcome(
        verified=True,
        domain=analysis.domain,
        width=width,
        lambda_full=lam_full,
        verifier_calls=calls,
        kept=tuple(kept),
        lambda_kept=lam_kept,
        bound_thm2=theorem2_bound(fs, lam_full, zero_threshold),
        zero_count=len(zero_features(fs, zero_threshold)),
        features=fs,
    )
