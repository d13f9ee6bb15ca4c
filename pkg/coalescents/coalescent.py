"""
Exact simulation of restricted distinguished coalescents and their generator
"""
import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from .data_models import CoalescentTrajectory, TerminalState
from .errors import ConfigurationError, InvalidInputError
from .measures import MParams, lambda_rate, nu_measure, r_rate
from .paintbox import DistinguishedMassPartition, sample_paintbox
from .partitions import DistinguishedPartition, coag, merge_blocks

logger = logging.getLogger(__name__)

MAX_GENERATOR_BLOCKS = 12

MERGE = 0  # k non-distinguished blocks merge into one new block
JOIN = 1   # k non-distinguished blocks merge into block 0

PartitionFunction = Union[Mapping[DistinguishedPartition, float],
                          Callable[[DistinguishedPartition], float]]


@dataclass(frozen=True)
class GeneralCoagulationSpec:
    """c0 * (singleton absorption) + c1 * (pairwise merging) + a finite paint-box mixture"""
    c0: float = 0.0
    c1: float = 0.0
    mixture: Tuple[Tuple[DistinguishedMassPartition, float], ...] = ()

    def __post_init__(self):
        if not (0.0 <= self.c0 < math.inf and 0.0 <= self.c1 < math.inf):
            raise InvalidInputError(f"c0 and c1 must be finite and >= 0, got {self.c0}, {self.c1}")
        for s, weight in self.mixture:
            if not isinstance(s, DistinguishedMassPartition):
                raise InvalidInputError(f"Mixture atoms must be mass-partitions, got {s!r}")
            if not (0.0 < weight < math.inf):
                raise InvalidInputError(f"Mixture weights must be finite and > 0, got {weight}")

    @classmethod
    def parse(cls, c0: float = 0.0, c1: float = 0.0, mixture: str = '') -> 'GeneralCoagulationSpec':
        """mixture text: 's0;s1,...@w' terms joined with '+', e.g. '0.2;0.3@1'"""
        atoms = []
        for chunk in filter(None, (c.strip() for c in mixture.split('+'))):
            text, sep, weight = chunk.rpartition('@')
            if not sep:
                raise InvalidInputError(f"Mixture term {chunk!r} needs an '@weight' suffix")
            try:
                atoms.append((DistinguishedMassPartition.parse(text), float(weight)))
            except ValueError as e:
                raise InvalidInputError(f"Malformed mixture term {chunk!r}: {e}")
        return cls(c0=float(c0), c1=float(c1), mixture=tuple(atoms))

    @property
    def total_weight(self) -> float:
        return math.fsum(weight for _, weight in self.mixture)

    def to_dict(self):
        return {
            'c0': self.c0,
            'c1': self.c1,
            'mixture': [{'s': s.to_text(), 'weight': w} for s, w in self.mixture],
        }


@dataclass(frozen=True)
class JumpTerms:
    """Aggregated jump terms C(b,k) lambda_{b,k} and C(b,k) r_{b,k} out of a state with b blocks"""
    kinds: np.ndarray
    sizes: np.ndarray
    cumulative: np.ndarray

    @property
    def total(self) -> float:
        return float(self.cumulative[-1]) if len(self.cumulative) else 0.0


@lru_cache(maxsize=4096)
def jump_terms(M: MParams, b: int) -> JumpTerms:
    kinds, sizes, rates = [], [], []
    for k in range(2, b + 1):
        kinds.append(MERGE)
        sizes.append(k)
        rates.append(math.comb(b, k) * lambda_rate(b, k, M.lambda1))
    for k in range(1, b + 1):
        kinds.append(JOIN)
        sizes.append(k)
        rates.append(math.comb(b, k) * r_rate(b, k, M.lambda0))
    return JumpTerms(np.array(kinds, dtype=int), np.array(sizes, dtype=int),
                     np.cumsum(np.array(rates, dtype=float)))


def rate_table(M: MParams, b_max: int) -> List[Dict[str, float]]:
    """Rows (b, kind, k, rate, aggregate) for 1 <= b <= b_max"""
    rows = []
    for b in range(1, b_max + 1):
        for k in range(2, b + 1):
            rate = lambda_rate(b, k, M.lambda1)
            rows.append({'b': b, 'kind': 'lambda', 'k': k, 'rate': rate,
                         'aggregate': math.comb(b, k) * rate})
        for k in range(1, b + 1):
            rate = r_rate(b, k, M.lambda0)
            rows.append({'b': b, 'kind': 'r', 'k': k, 'rate': rate,
                         'aggregate': math.comb(b, k) * rate})
    return rows


def holding_time(total: float, rng: np.random.Generator) -> float:
    """Exp(total) by inverse CDF from one uniform"""
    return -math.log1p(-rng.random()) / total


def _start_state(n: int, start: Optional[DistinguishedPartition]) -> DistinguishedPartition:
    if n < 0:
        raise InvalidInputError(f"Ground size must be >= 0, got {n}")
    if start is None:
        return DistinguishedPartition.singletons(n)
    if start.n != n:
        raise InvalidInputError(f"Start partition lives on {{0..{start.n}}}, expected {{0..{n}}}")
    return start


def simulate_m_coalescent(M: MParams, n: int, rng: np.random.Generator,
                          start: Optional[DistinguishedPartition] = None,
                          horizon: float = math.inf,
                          seed: Optional[int] = None) -> CoalescentTrajectory:
    """Gillespie simulation of the M-coalescent restricted to {0..n}"""
    state = _start_state(n, start)
    initial = state
    events: List[Tuple[float, DistinguishedPartition]] = []
    t = 0.0

    while True:
        if state.is_whole:
            terminal = TerminalState.ABSORBED
            break
        b = state.non_distinguished_count
        terms = jump_terms(M, b)
        total = terms.total
        if not math.isfinite(total):
            raise ConfigurationError(f"Total jump rate out of {b} blocks is {total}")
        if total <= 0.0:
            terminal = TerminalState.STALLED
            break

        tau = holding_time(total, rng)
        if t + tau > horizon:
            terminal = TerminalState.HORIZON
            break
        t += tau

        index = int(np.searchsorted(terms.cumulative, rng.random() * total, side='right'))
        index = min(index, len(terms.cumulative) - 1)
        k = int(terms.sizes[index])
        ranks = rng.choice(b, size=k, replace=False) + 1
        state = merge_blocks(state, ranks.tolist(), into_distinguished=terms.kinds[index] == JOIN)
        events.append((t, state))

    logger.debug(f"M-coalescent on n={n}: {len(events)} events, {terminal.value}")
    return CoalescentTrajectory(n=n, initial=initial, events=events, terminal=terminal,
                                horizon=horizon, seed=seed)


def _general_active_rate(spec: GeneralCoagulationSpec, b: int) -> float:
    """Rate of events that can change a state with b non-distinguished blocks"""
    rate = spec.c0 * b + spec.c1 * math.comb(b, 2)
    for s, weight in spec.mixture:
        if s.s0 > 0 or (b >= 2 and any(x > 0 for x in s.tail)):
            rate += weight
    return rate


def simulate_general_coalescent(spec: GeneralCoagulationSpec, n: int, rng: np.random.Generator,
                                start: Optional[DistinguishedPartition] = None,
                                horizon: float = math.inf,
                                seed: Optional[int] = None) -> CoalescentTrajectory:
    """Kingman absorption (c0), Kingman pair merging (c1) and paint-box atoms"""
    state = _start_state(n, start)
    initial = state
    events: List[Tuple[float, DistinguishedPartition]] = []
    weights = np.array([w for _, w in spec.mixture], dtype=float)
    mixture_weight = float(weights.sum()) if len(weights) else 0.0
    t = 0.0

    while True:
        if state.is_whole:
            terminal = TerminalState.ABSORBED
            break
        b = state.non_distinguished_count
        if _general_active_rate(spec, b) <= 0.0:
            terminal = TerminalState.STALLED
            break

        absorb_rate = spec.c0 * b
        pair_rate = spec.c1 * math.comb(b, 2)
        total = absorb_rate + pair_rate + mixture_weight
        tau = holding_time(total, rng)
        if t + tau > horizon:
            terminal = TerminalState.HORIZON
            break
        t += tau

        u = rng.random() * total
        if u < absorb_rate:
            rank = int(rng.integers(b)) + 1
            new_state = merge_blocks(state, [rank], into_distinguished=True)
        elif u < absorb_rate + pair_rate:
            ranks = rng.choice(b, size=2, replace=False) + 1
            new_state = merge_blocks(state, ranks.tolist(), into_distinguished=False)
        else:
            atom = rng.choice(len(weights), p=weights / mixture_weight)
            coagulator = sample_paintbox(spec.mixture[atom][0], b, rng)
            new_state = coag(state, coagulator)

        if new_state != state:
            state = new_state
            events.append((t, state))

    logger.debug(f"General coalescent on n={n}: {len(events)} events, {terminal.value}")
    return CoalescentTrajectory(n=n, initial=initial, events=events, terminal=terminal,
                                horizon=horizon, seed=seed)


def simulate_poissonian(spec: GeneralCoagulationSpec, n: int, rng: np.random.Generator,
                        start: Optional[DistinguishedPartition] = None,
                        horizon: float = math.inf,
                        seed: Optional[int] = None) -> CoalescentTrajectory:
    """Coalescent driven by a Poisson stream of paint-box coagulations only"""
    if spec.c0 != 0.0 or spec.c1 != 0.0:
        raise InvalidInputError("The Poissonian construction needs c0 = c1 = 0")
    return simulate_general_coalescent(spec, n, rng, start=start, horizon=horizon, seed=seed)


def simulate_simple_poissonian(M: MParams, n: int, rng: np.random.Generator,
                               start: Optional[DistinguishedPartition] = None,
                               horizon: float = math.inf,
                               seed: Optional[int] = None) -> CoalescentTrajectory:
    """Coin-flipping construction from the finite measures nu0 and nu1.

    At a nu1-atom x every non-distinguished block flips heads with probability
    x and the heads merge into one block; at a nu0-atom the heads join block 0.
    """
    nu0 = nu_measure(M.lambda0, 1)
    nu1 = nu_measure(M.lambda1, 2)
    nu0.require_finite("nu0")
    nu1.require_finite("nu1")
    m0, m1 = nu0.total_mass, nu1.total_mass

    state = _start_state(n, start)
    initial = state
    events: List[Tuple[float, DistinguishedPartition]] = []
    t = 0.0

    while True:
        if state.is_whole:
            terminal = TerminalState.ABSORBED
            break
        b = state.non_distinguished_count
        if m0 + (m1 if b >= 2 else 0.0) <= 0.0:
            terminal = TerminalState.STALLED
            break

        tau = holding_time(m0 + m1, rng)
        if t + tau > horizon:
            terminal = TerminalState.HORIZON
            break
        t += tau

        into_distinguished = rng.random() * (m0 + m1) < m0
        x = (nu0 if into_distinguished else nu1).sample(rng)
        heads = (np.flatnonzero(rng.random(b) < x) + 1).tolist()
        if len(heads) >= (1 if into_distinguished else 2):
            state = merge_blocks(state, heads, into_distinguished=into_distinguished)
            events.append((t, state))

    logger.debug(f"Simple Poissonian coalescent on n={n}: {len(events)} events, {terminal.value}")
    return CoalescentTrajectory(n=n, initial=initial, events=events, terminal=terminal,
                                horizon=horizon, seed=seed)


def _evaluate(F: PartitionFunction, pi: DistinguishedPartition) -> float:
    if callable(F):
        return float(F(pi))
    try:
        return float(F[pi])
    except KeyError:
        raise InvalidInputError(f"Function table has no value for {pi}")


def generator_apply(F: PartitionFunction, pi: DistinguishedPartition, M: MParams) -> float:
    """L*F(pi) by exact enumeration of every merging subset"""
    b = pi.non_distinguished_count
    if b > MAX_GENERATOR_BLOCKS:
        raise InvalidInputError(
            f"Generator enumeration is capped at {MAX_GENERATOR_BLOCKS} blocks, got {b}"
        )
    here = _evaluate(F, pi)
    total = 0.0
    ranks = range(1, b + 1)
    for k in range(1, b + 1):
        merge = lambda_rate(b, k, M.lambda1) if k >= 2 else 0.0
        join = r_rate(b, k, M.lambda0)
        for subset in itertools.combinations(ranks, k):
            if merge:
                total += merge * (_evaluate(F, merge_blocks(pi, subset, False)) - here)
            if join:
                total += join * (_evaluate(F, merge_blocks(pi, subset, True)) - here)
    return total


def block_count_path(traj: CoalescentTrajectory) -> List[Tuple[float, int]]:
    """(time, number of blocks not containing 0) at the start and after each jump"""
    path = [(0.0, traj.initial.non_distinguished_count)]
    path.extend((t, p.non_distinguished_count) for t, p in traj.events)
    return path


def fixation_time(traj: CoalescentTrajectory) -> Optional[float]:
    """First time block 0 holds everything, None if that never happened"""
    if traj.initial.is_whole:
        return 0.0
    for t, partition in traj.events:
        if partition.is_whole:
            return t
    return None


def martingale_residual(traj: CoalescentTrajectory, F: PartitionFunction,
                        M: MParams, t: float) -> float:
    """F(X_t) - F(X_0) - integral_0^t L*F(X_s) ds along one path"""
    cache: Dict[DistinguishedPartition, float] = {}

    def drift(pi: DistinguishedPartition) -> float:
        if pi not in cache:
            cache[pi] = generator_apply(F, pi, M)
        return cache[pi]

    integral = 0.0
    state, since = traj.initial, 0.0
    for time, partition in traj.events:
        if time > t:
            break
        integral += drift(state) * (time - since)
        state, since = partition, time
    integral += drift(state) * (t - since)
    return _evaluate(F, state) - _evaluate(F, traj.initial) - integral
