"""Sound robustness verification of small ReLU networks and proof feature extraction."""

__version__ = "0.1.0"

from .domains import IntervalVector, Zonotope, concretize, min_linear
from .model import Layer, Network, forward, gradient_wrt_input, load_network, parse_network
from .supfex import ProofFeature, ProofFeatureSet, SupfexOutcome, supfex_extract, theorem2_bound
from .verifier import (
    InputRegion,
    Property,
    VerificationResult,
    analyze,
    build_region,
    check_property,
    robustness_property,
    verify,
)
