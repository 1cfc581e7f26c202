import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from proofkit.model import Layer, Network

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def dense(w, b, act="relu"):
    return Layer(np.array(w, dtype=float), np.array(b, dtype=float), act)


@pytest.fixture
def tiny_net():
    # 2 -> 3 -> 2, hand-picked so that small regions verify
    return Network((
        dense([[1.0, 0.5], [-1.0, 1.0], [0.3, -0.7]], [0.1, 0.0, 0.2]),
        dense([[2.0, -1.0, 0.5], [-1.0, 1.0, 0.0]], [0.0, 0.1], "none"),
    ), name="tiny")
