"""
Distinguished mass-partitions and the distinguished paint-box sampler
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .errors import InvalidInputError
from .partitions import DistinguishedPartition, empirical_frequencies, singleton_fraction

logger = logging.getLogger(__name__)

_MASS_SLACK = 1e-12
_DUST = -1


@dataclass(frozen=True)
class DistinguishedMassPartition:
    """(s0; s1 >= s2 >= ...) with s0 + sum(tail) <= 1; the deficit is the dust"""
    s0: float
    tail: Tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.s0 >= 0.0):
            raise InvalidInputError(f"s0 must be non-negative, got {self.s0}")
        if any(not (s >= 0.0) for s in self.tail):
            raise InvalidInputError(f"Tail masses must be non-negative: {self.tail}")
        if any(self.tail[i] < self.tail[i + 1] for i in range(len(self.tail) - 1)):
            raise InvalidInputError(f"Tail must be non-increasing: {self.tail}")
        if self.s0 + math.fsum(self.tail) > 1.0 + _MASS_SLACK:
            raise InvalidInputError(f"Masses exceed 1: s0={self.s0}, tail={self.tail}")

    @classmethod
    def from_masses(cls, s0: float, masses) -> 'DistinguishedMassPartition':
        """Rank arbitrary non-distinguished masses and drop zeros"""
        ranked = sorted((float(m) for m in masses if m > 0), reverse=True)
        return cls(s0=float(s0), tail=tuple(ranked))

    @classmethod
    def parse(cls, text: str) -> 'DistinguishedMassPartition':
        """Parse 's0;s1,s2,...' (dust implicit)"""
        head, _, rest = text.strip().partition(';')
        try:
            s0 = float(head) if head else 0.0
            tail = tuple(float(item) for item in rest.split(',') if item.strip())
        except ValueError as e:
            raise InvalidInputError(f"Malformed mass-partition {text!r}: {e}")
        return cls(s0=s0, tail=tail)

    def to_text(self) -> str:
        return f"{self.s0!r};" + ','.join(repr(s) for s in self.tail)

    @property
    def dust(self) -> float:
        return max(0.0, 1.0 - self.s0 - math.fsum(self.tail))

    def categorical(self) -> np.ndarray:
        """Label probabilities (s0, s1, ..., sK, dust)"""
        return np.array((self.s0,) + tuple(self.tail) + (self.dust,), dtype=float)


def _labels_to_partition(labels: np.ndarray, dust_index: int) -> DistinguishedPartition:
    labels = np.where(labels == dust_index, _DUST, labels)
    full = np.concatenate(([0], labels)).tolist()
    return DistinguishedPartition.from_labels(full, dust_label=_DUST)


def sample_paintbox(s: DistinguishedMassPartition, n: int,
                    rng: np.random.Generator) -> DistinguishedPartition:
    """s-distinguished paint-box on {0..n} with X_0 = 0 pinned"""
    if n < 0:
        raise InvalidInputError(f"Ground size must be >= 0, got {n}")
    if n == 0:
        return DistinguishedPartition.singletons(0)

    probabilities = s.categorical()
    probabilities = probabilities / probabilities.sum()
    labels = rng.choice(len(probabilities), size=n, p=probabilities)
    return _labels_to_partition(labels, dust_index=len(probabilities) - 1)


def sample_paintbox_intervals(s: DistinguishedMassPartition, n: int,
                              rng: np.random.Generator) -> DistinguishedPartition:
    """Same law as sample_paintbox through the interval representation.

    A_0 = [0, s0), A_i = [s0 + ... + s_{i-1}, s0 + ... + s_i); uniforms beyond
    the last interval fall in the dust.
    """
    if n < 0:
        raise InvalidInputError(f"Ground size must be >= 0, got {n}")
    if n == 0:
        return DistinguishedPartition.singletons(0)

    edges = np.cumsum((s.s0,) + tuple(s.tail))
    uniforms = rng.random(n)
    labels = np.searchsorted(edges, uniforms, side='right')
    return _labels_to_partition(labels, dust_index=len(edges))


def singleton_probability(s: DistinguishedMassPartition, q: int) -> float:
    """P[1, ..., q are singletons] = dust ** q"""
    return s.dust ** q


def zero_singleton_probability(s: DistinguishedMassPartition) -> float:
    """P[0 is a singleton]: 0 when s0 > 0, else 1"""
    return 0.0 if s.s0 > 0 else 1.0


def paintbox_law(s: DistinguishedMassPartition, n: int) -> Dict[DistinguishedPartition, float]:
    """Exact law on partitions of {0..n} by enumerating label assignments"""
    if n < 0 or n > 6:
        raise InvalidInputError("Exact paint-box laws are enumerated for 0 <= n <= 6 only")
    probabilities = s.categorical()
    dust_index = len(probabilities) - 1
    live = [k for k, p in enumerate(probabilities) if p > 0]

    law: Dict[DistinguishedPartition, float] = {}
    for labels in itertools.product(live, repeat=n):
        weight = math.prod(probabilities[k] for k in labels)
        partition = _labels_to_partition(np.array(labels, dtype=int), dust_index)
        law[partition] = law.get(partition, 0.0) + weight
    return law


def mass_partition_from_frequencies(pi: DistinguishedPartition) -> DistinguishedMassPartition:
    """Finite-n estimate of |pi|: block-0 share, ranked non-singleton shares, rest is dust"""
    frequencies = empirical_frequencies(pi)
    s0 = frequencies[0][1]
    masses = [f for rank, f in frequencies[1:] if len(pi.blocks[rank]) > 1]
    estimate = DistinguishedMassPartition.from_masses(s0, masses)
    logger.debug(f"Frequency estimate {estimate.to_text()} "
                 f"(singleton share {singleton_fraction(pi)})")
    return estimate
