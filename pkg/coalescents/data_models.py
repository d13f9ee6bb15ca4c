"""
Result records shared by the simulators, the numerics and the CLI
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from .partitions import DistinguishedPartition


class TerminalState(Enum):
    ABSORBED = "absorbed"
    HORIZON = "horizon"
    STALLED = "stalled"  # no jump possible and block 0 is not everything


class Verdict(Enum):
    COMES_DOWN = "ComesDown"
    DOES_NOT_COME_DOWN = "DoesNotComeDown"
    UNDECIDED = "Undecided"


class EventKind(Enum):
    REPRODUCTION = "repro"
    IMMIGRATION = "immig"


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return value


def _law_to_dict(law: Dict[DistinguishedPartition, float]) -> Dict[str, float]:
    return {p.to_text(): law[p] for p in sorted(law, key=lambda p: p.to_text())}


@dataclass
class CoalescentTrajectory:
    """Piecewise-constant path of a restricted distinguished coalescent"""
    n: int
    initial: DistinguishedPartition
    events: List[Tuple[float, DistinguishedPartition]]
    terminal: TerminalState
    horizon: float = math.inf
    seed: Optional[int] = None

    @property
    def final(self) -> DistinguishedPartition:
        return self.events[-1][1] if self.events else self.initial

    @property
    def absorbed(self) -> bool:
        return self.terminal == TerminalState.ABSORBED

    def state_at(self, t: float) -> DistinguishedPartition:
        state = self.initial
        for time, partition in self.events:
            if time > t:
                break
            state = partition
        return state

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'seed': self.seed,
            'initial': self.initial.to_text(),
            'events': [{'t': t, 'partition': p.to_text()} for t, p in self.events],
            'absorbed': self.absorbed,
            'terminal': self.terminal.value,
            'horizon': _finite_or_none(self.horizon),
        }


@dataclass
class GfviEvent:
    t: float
    kind: EventKind
    size: float
    parent_loc: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        record = {'t': self.t, 'kind': self.kind.value, 'size': self.size}
        if self.parent_loc is not None:
            record['parent_loc'] = self.parent_loc
        return record


@dataclass
class CdiVerdict:
    verdict: Verdict
    evidence: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {'verdict': self.verdict.value, 'evidence': self.evidence}


@dataclass
class FixationBound:
    """Upper bounds on the expected fixation time"""
    depth: int
    partial_sum: float
    tail_bound: Optional[float] = None
    atom_bound: Optional[float] = None

    @property
    def tail_controlled(self) -> bool:
        return self.tail_bound is not None

    @property
    def bound(self) -> Optional[float]:
        candidates = []
        if self.tail_bound is not None:
            candidates.append(self.partial_sum + self.tail_bound)
        if self.atom_bound is not None:
            candidates.append(self.atom_bound)
        return min(candidates) if candidates else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'depth': self.depth,
            'partial_sum': self.partial_sum,
            'tail_bound': self.tail_bound,
            'atom_bound': self.atom_bound,
            'tail_controlled': self.tail_controlled,
            'bound': self.bound,
        }


@dataclass
class DualityReport:
    p: int
    t: float
    replicas: int
    lhs_mean: float
    lhs_se: float
    rhs_mean: float
    rhs_se: float
    seed: Optional[int] = None

    @property
    def z_score(self) -> float:
        spread = math.hypot(self.lhs_se, self.rhs_se)
        difference = self.lhs_mean - self.rhs_mean
        if spread == 0.0:
            return 0.0 if difference == 0.0 else math.inf
        return abs(difference) / spread

    def to_dict(self) -> Dict[str, Any]:
        return {
            'p': self.p,
            't': self.t,
            'replicas': self.replicas,
            'seed': self.seed,
            'lhs': {'mean': self.lhs_mean, 'se': self.lhs_se},
            'rhs': {'mean': self.rhs_mean, 'se': self.rhs_se},
            'z_score': _finite_or_none(self.z_score),
        }


@dataclass
class ComposeCheckReport:
    """Empirical laws of the composed-bridge partition and of the coagulated pair"""
    n: int
    replicas: int
    bridge_law: Dict[DistinguishedPartition, float]
    coag_law: Dict[DistinguishedPartition, float]
    distance: float
    exact_law: Optional[Dict[DistinguishedPartition, float]] = None
    bridge_exact_distance: Optional[float] = None
    coag_exact_distance: Optional[float] = None
    mismatches: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'replicas': self.replicas,
            'distance': self.distance,
            'bridge_law': _law_to_dict(self.bridge_law),
            'coag_law': _law_to_dict(self.coag_law),
            'exact_law': _law_to_dict(self.exact_law) if self.exact_law is not None else None,
            'bridge_exact_distance': self.bridge_exact_distance,
            'coag_exact_distance': self.coag_exact_distance,
            'mismatches': self.mismatches,
        }
