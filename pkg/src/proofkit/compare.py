"""Agreement between the proof features that IBP and DeepZ extract."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .model import Network
from .supfex import SupfexOutcome, supfex_extract
from .verifier import InputRegion, Property

TOP_K = 5


@dataclass(frozen=True)
class ProofAgreement:
    same_top1: bool
    same_top5: bool
    same_full_set: bool
    sizes: tuple[int, int]


@dataclass(frozen=True)
class Skipped:
    """At least one verifier failed, so there is nothing to compare."""

    ibp_verified: bool
    deepz_verified: bool


Comparison = Union[ProofAgreement, Skipped]


def agreement(a: SupfexOutcome, b: SupfexOutcome, k: int = TOP_K) -> ProofAgreement:
    # each outcome's kept tuple is already ordered by its own priorities
    top1 = a.kept[:1] == b.kept[:1]
    topk = set(a.kept[:k]) == set(b.kept[:k])
    return ProofAgreement(top1, topk, a.kept_set == b.kept_set, (len(a.kept), len(b.kept)))


def compare_verifiers(net: Network, region: InputRegion, prop: Property) -> Comparison:
    ibp = supfex_extract(net, region, prop, "ibp")
    deepz = supfex_extract(net, region, prop, "deepz")
    if not (ibp.verified and deepz.verified):
        return Skipped(ibp.verified, deepz.verified)
    return agreement(ibp, deepz)


@dataclass(frozen=True)
class AgreementSummary:
    total: int = 0
    comparable: int = 0
    ibp_verified: int = 0
    deepz_verified: int = 0
    pct_same_top1: float | None = None
    pct_same_top5: float | None = None
    pct_same_set: float | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def aggregate_agreement(records: Sequence[Comparison]) -> AgreementSummary:
    if not records:
        return AgreementSummary()
    done = [r for r in records if isinstance(r, ProofAgreement)]
    ibp = sum(1 for r in records if isinstance(r, ProofAgreement) or r.ibp_verified)
    deepz = sum(1 for r in records if isinstance(r, ProofAgreement) or r.deepz_verified)

    def pct(flag):
        return 100.0 * sum(getattr(r, flag) for r in done) / len(done) if done else None

    return AgreementSummary(
        total=len(records),
        comparable=len(done),
        ibp_verified=ibp,
        deepz_verified=deepz,
        pct_same_top1=pct("same_top1"),
        pct_same_top5=pct("same_top5"),
        pct_same_set=pct("same_full_set"),
    )
