"""Random (network, region, property) instances for tests and experiment scripts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Network, forward, random_network
from .verifier import InputRegion, Property, build_region, robustness_property, verify


@dataclass(frozen=True)
class InstanceConfig:
    layers: tuple[int, int] = (2, 4)          # total affine layers, inclusive
    width: tuple[int, int] = (2, 32)          # hidden widths, inclusive
    input_dim: tuple[int, int] = (2, 16)
    num_classes: tuple[int, int] = (2, 5)
    log10_eps: tuple[float, float] = (-3.0, -0.7)


@dataclass(frozen=True)
class Instance:
    net: Network
    region: InputRegion
    prop: Property
    label: int


def random_widths(rng: np.random.Generator, cfg: InstanceConfig, penultimate: int | None = None) -> list[int]:
    depth = int(rng.integers(cfg.layers[0], cfg.layers[1] + 1))
    widths = [int(rng.integers(cfg.input_dim[0], cfg.input_dim[1] + 1))]
    widths += [int(rng.integers(cfg.width[0], cfg.width[1] + 1)) for _ in range(depth - 1)]
    if penultimate is not None:
        widths[-1] = penultimate
    widths.append(int(rng.integers(cfg.num_classes[0], cfg.num_classes[1] + 1)))
    return widths


def random_instance(rng: np.random.Generator, cfg: InstanceConfig = InstanceConfig(),
                    net: Network | None = None, penultimate: int | None = None) -> Instance:
    if net is None:
        net = random_network(rng, random_widths(rng, cfg, penultimate))
    x = rng.uniform(0.0, 1.0, size=net.input_dim)
    eps = 10.0 ** rng.uniform(*cfg.log10_eps)
    label = int(np.argmax(forward(net, x)))
    return Instance(net, build_region(x, eps), robustness_property(net.num_classes, label), label)


def verified_instance(rng: np.random.Generator, domain: str = "deepz",
                      cfg: InstanceConfig = InstanceConfig(), penultimate: int | None = None,
                      max_tries: int = 1000) -> Instance:
    """Draw instances until one verifies under ``domain``."""
    for _ in range(max_tries):
        inst = random_instance(rng, cfg, penultimate=penultimate)
        if verify(inst.net, inst.region, inst.prop, domain).verified:
            return inst
    raise RuntimeError(f"no verified instance in {max_tries} tries")
