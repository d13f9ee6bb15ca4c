"""
Distinguished partitions of {0, 1, ..., n}: coagulation, restriction,
permutation action and block-frequency estimates
"""
import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import InvalidInputError

logger = logging.getLogger(__name__)

MAX_ENUMERATION_SIZE = 8


@dataclass(frozen=True)
class DistinguishedPartition:
    """Partition of {0, ..., n} with blocks ranked by least element.

    The first block always contains 0 and is the distinguished block.
    """
    n: int
    blocks: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 0:
            raise InvalidInputError(f"Ground size must be >= 0, got {self.n}")

        previous_min = -1
        for block in self.blocks:
            if not block:
                raise InvalidInputError("Partitions cannot contain empty blocks")
            if any(block[i] >= block[i + 1] for i in range(len(block) - 1)):
                raise InvalidInputError(f"Block {block} is not strictly increasing")
            if block[0] <= previous_min:
                raise InvalidInputError("Blocks must be ranked by their least element")
            previous_min = block[0]

        elements = sorted(itertools.chain.from_iterable(self.blocks))
        if elements != list(range(self.n + 1)):
            raise InvalidInputError(f"Blocks do not partition {{0, ..., {self.n}}}")

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]],
                    n: Optional[int] = None) -> 'DistinguishedPartition':
        """Build from blocks in any order; empty blocks are dropped"""
        cleaned = [tuple(sorted(block)) for block in blocks]
        cleaned = [block for block in cleaned if block]
        cleaned.sort(key=lambda block: block[0])
        if n is None:
            n = max((block[-1] for block in cleaned), default=0)
        return cls(n=n, blocks=tuple(cleaned))

    @classmethod
    def singletons(cls, n: int) -> 'DistinguishedPartition':
        return cls(n=n, blocks=tuple((i,) for i in range(n + 1)))

    @classmethod
    def whole(cls, n: int) -> 'DistinguishedPartition':
        return cls(n=n, blocks=(tuple(range(n + 1)),))

    @classmethod
    def from_labels(cls, labels: Sequence[Hashable],
                    dust_label: Hashable = None) -> 'DistinguishedPartition':
        """Group i and j together iff labels[i] == labels[j] != dust_label.

        Elements carrying dust_label become singletons.
        """
        groups: Dict[Hashable, List[int]] = {}
        blocks: List[List[int]] = []
        for element, label in enumerate(labels):
            if label == dust_label:
                blocks.append([element])
                continue
            if label not in groups:
                groups[label] = []
                blocks.append(groups[label])
            groups[label].append(element)
        return cls.from_blocks(blocks, n=len(labels) - 1)

    @classmethod
    def parse(cls, text: str) -> 'DistinguishedPartition':
        """Parse the canonical text form, e.g. '0,1|2|3,4'"""
        try:
            blocks = [[int(item) for item in chunk.split(',')] for chunk in text.strip().split('|')]
        except ValueError as e:
            raise InvalidInputError(f"Malformed partition text {text!r}: {e}")
        return cls.from_blocks(blocks)

    def to_text(self) -> str:
        return '|'.join(','.join(str(i) for i in block) for block in self.blocks)

    def __str__(self) -> str:
        return self.to_text()

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def non_distinguished_count(self) -> int:
        """Number of blocks not containing 0"""
        return len(self.blocks) - 1

    @property
    def distinguished(self) -> Tuple[int, ...]:
        return self.blocks[0]

    @property
    def is_whole(self) -> bool:
        return len(self.blocks) == 1

    def block_sizes(self) -> List[int]:
        return [len(block) for block in self.blocks]

    def block_index(self) -> List[int]:
        """index[i] is the rank of the block holding element i"""
        index = [0] * (self.n + 1)
        for rank, block in enumerate(self.blocks):
            for element in block:
                index[element] = rank
        return index


@dataclass(frozen=True)
class Permutation:
    """Bijection of {0, ..., n} fixing 0; mapping[i] is sigma(i)"""
    n: int
    mapping: Tuple[int, ...]

    def __post_init__(self):
        if len(self.mapping) != self.n + 1 or sorted(self.mapping) != list(range(self.n + 1)):
            raise InvalidInputError(f"{self.mapping} is not a bijection of {{0, ..., {self.n}}}")
        if self.mapping[0] != 0:
            raise InvalidInputError("Permutations acting on distinguished partitions must fix 0")

    @classmethod
    def identity(cls, n: int) -> 'Permutation':
        return cls(n=n, mapping=tuple(range(n + 1)))

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> 'Permutation':
        mapping = list(range(n + 1))
        mapping[i], mapping[j] = mapping[j], mapping[i]
        return cls(n=n, mapping=tuple(mapping))

    def inverse(self) -> 'Permutation':
        inverse = [0] * (self.n + 1)
        for i, image in enumerate(self.mapping):
            inverse[image] = i
        return Permutation(n=self.n, mapping=tuple(inverse))


def coag(pi: DistinguishedPartition, pi_prime: DistinguishedPartition) -> DistinguishedPartition:
    """Merge the blocks of pi according to pi_prime, a partition of pi's block ranks"""
    if pi_prime.n != pi.num_blocks - 1:
        raise InvalidInputError(
            f"Coagulator acts on {{0, ..., {pi_prime.n}}} but pi has {pi.num_blocks} blocks"
        )
    merged = [
        itertools.chain.from_iterable(pi.blocks[rank] for rank in group)
        for group in pi_prime.blocks
    ]
    return DistinguishedPartition.from_blocks(merged, n=pi.n)


def restrict(pi: DistinguishedPartition, m: int) -> DistinguishedPartition:
    """Restriction of pi to {0, ..., m}"""
    if m < 0 or m > pi.n:
        raise InvalidInputError(f"Cannot restrict a partition of {{0, ..., {pi.n}}} to size {m}")
    if m == pi.n:
        return pi
    return DistinguishedPartition.from_blocks(
        ([i for i in block if i <= m] for block in pi.blocks), n=m
    )


def compatibility_check(pi_m: DistinguishedPartition, pi_n: DistinguishedPartition) -> bool:
    """True iff pi_m is the restriction of pi_n"""
    if pi_m.n > pi_n.n:
        return False
    return restrict(pi_n, pi_m.n) == pi_m


def apply_permutation(sigma: Permutation, pi: DistinguishedPartition) -> DistinguishedPartition:
    """sigma.pi, defined by i ~ j iff sigma(i) ~ sigma(j) under pi"""
    if sigma.n != pi.n:
        raise InvalidInputError(f"Permutation of size {sigma.n} cannot act on size {pi.n}")
    rank = pi.block_index()
    groups: Dict[int, List[int]] = {}
    for i in range(pi.n + 1):
        groups.setdefault(rank[sigma.mapping[i]], []).append(i)
    return DistinguishedPartition.from_blocks(groups.values(), n=pi.n)


def empirical_frequencies(pi: DistinguishedPartition) -> List[Tuple[int, float]]:
    """Estimate #(B ∩ {1..n}) / n for every block, distinguished block first"""
    if pi.n == 0:
        raise InvalidInputError("Frequencies need at least one non-distinguished element")
    return [
        (rank, sum(1 for i in block if i > 0) / pi.n)
        for rank, block in enumerate(pi.blocks)
    ]


def singleton_fraction(pi: DistinguishedPartition) -> float:
    """Share of {1..n} sitting in singleton blocks other than block 0"""
    if pi.n == 0:
        raise InvalidInputError("Frequencies need at least one non-distinguished element")
    return sum(1 for block in pi.blocks[1:] if len(block) == 1) / pi.n


def simple_coagulator(size: int, subset: Iterable[int],
                      into_distinguished: bool) -> DistinguishedPartition:
    """Partition of {0..size} merging the ranks in subset (and 0 if requested)"""
    merged = set(subset)
    if into_distinguished:
        merged.add(0)
    blocks = [sorted(merged)] + [[i] for i in range(size + 1) if i not in merged]
    return DistinguishedPartition.from_blocks(blocks, n=size)


def merge_blocks(pi: DistinguishedPartition, ranks: Iterable[int],
                 into_distinguished: bool) -> DistinguishedPartition:
    """Merge the non-distinguished blocks with the given ranks, optionally into block 0"""
    return coag(pi, simple_coagulator(pi.num_blocks - 1, ranks, into_distinguished))


def enumerate_partitions(n: int) -> Iterator[DistinguishedPartition]:
    """Every distinguished partition of {0, ..., n} (Bell(n + 1) of them)"""
    if n < 0 or n > MAX_ENUMERATION_SIZE:
        raise InvalidInputError(f"Enumeration is limited to 0 <= n <= {MAX_ENUMERATION_SIZE}")

    def grow(element: int, blocks: List[List[int]]):
        if element > n:
            yield DistinguishedPartition.from_blocks(blocks, n=n)
            return
        for block in blocks:
            block.append(element)
            yield from grow(element + 1, blocks)
            block.pop()
        blocks.append([element])
        yield from grow(element + 1, blocks)
        blocks.pop()

    yield from grow(1, [[0]])


def empirical_law(samples: Iterable[DistinguishedPartition]) -> Dict[DistinguishedPartition, float]:
    counts = Counter(samples)
    total = sum(counts.values())
    return {partition: count / total for partition, count in counts.items()}


def total_variation(law_a: Dict[DistinguishedPartition, float],
                    law_b: Dict[DistinguishedPartition, float]) -> float:
    support = set(law_a) | set(law_b)
    return 0.5 * sum(abs(law_a.get(p, 0.0) - law_b.get(p, 0.0)) for p in support)
