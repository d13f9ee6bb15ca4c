"""
Distinguished bridges and their flows, the generalized Fleming-Viot process
with immigration, its generator, and the duality harness
"""
import functools
import logging
import math
import operator
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from .coalescent import generator_apply, holding_time, simulate_m_coalescent
from .data_models import ComposeCheckReport, DualityReport, EventKind, GfviEvent
from .errors import InvalidInputError
from .measures import BoundedMeasure, MParams, nu_measure
from .paintbox import DistinguishedMassPartition, paintbox_law
from .partitions import (DistinguishedPartition, coag, empirical_frequencies, empirical_law,
                         singleton_fraction, total_variation)

logger = logging.getLogger(__name__)

MAX_FUNCTIONAL_ARITY = 4
MAX_COMPOSE_SIZE = 5
DEFAULT_NODES = 16
COMPACTION_THRESHOLD = 1e-15
MASS_TOLERANCE = 1e-12

_EDGE_SLACK = 1e-12

# replica index -> its own random stream
ReplicaStreams = Callable[[int], np.random.Generator]


def _one(*xs):
    return 1.0


def _identity(*xs):
    return xs[0]


def _product(*xs):
    return functools.reduce(operator.mul, xs)


def _sum(*xs):
    return functools.reduce(operator.add, xs)


# test functions on [0,1]^p; every one accepts broadcastable numpy arrays
TEST_FUNCTIONS: Dict[str, Callable] = {
    'one': _one,
    'id': _identity,
    'prod': _product,
    'sum': _sum,
}


@dataclass(frozen=True)
class DistinguishedBridge:
    """b(r) = y + x 1{v <= r} + r (1 - x - y)"""
    y: float = 0.0
    x: float = 0.0
    v: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.y <= 1.0 and 0.0 <= self.x <= 1.0 and 0.0 <= self.v <= 1.0):
            raise InvalidInputError(f"Bridge parameters must lie in [0, 1]: {self}")
        if self.x + self.y > 1.0 + _EDGE_SLACK:
            raise InvalidInputError(f"Bridge needs x + y <= 1, got x={self.x}, y={self.y}")

    @property
    def slope(self) -> float:
        return max(0.0, 1.0 - self.x - self.y)

    @property
    def zero_plateau_end(self) -> float:
        """b^{-1} = 0 on [0, zero_plateau_end)"""
        if self.x > 0 and self.v == 0.0:
            return self.y + self.x
        return self.y

    @property
    def jump_plateau(self) -> Optional[Tuple[float, float]]:
        """b^{-1} = v on this interval"""
        if self.x <= 0 or self.v == 0.0:
            return None
        lo = self.y + self.slope * self.v
        return lo, lo + self.x

    def with_location(self, v: float) -> 'DistinguishedBridge':
        return replace(self, v=v)

    def eval(self, r: float) -> float:
        if r >= 1.0:
            return 1.0
        return self.y + self.x * (self.v <= r) + r * self.slope

    def plateau(self, u: float) -> Optional[int]:
        """0 for the zero plateau, 1 for the jump plateau, None off the plateaus"""
        if u < self.zero_plateau_end:
            return 0
        jump = self.jump_plateau
        if jump is not None and jump[0] <= u < jump[1]:
            return 1
        return None

    def inverse(self, u: float) -> float:
        """inf{r : b(r) > u}"""
        if u >= 1.0:
            return 1.0
        if u < self.zero_plateau_end:
            return 0.0
        jump = self.jump_plateau
        if jump is not None and jump[0] <= u < jump[1]:
            return self.v
        if self.slope == 0.0:
            return 1.0
        offset = self.y
        if self.x > 0 and (jump is None or u >= jump[1]):
            offset += self.x
        return min(1.0, max(0.0, (u - offset) / self.slope))


@dataclass(frozen=True)
class CompositeBridge:
    """factors[0] o factors[1] o ... with factors[0] the earliest event"""
    factors: Tuple[DistinguishedBridge, ...] = ()
    times: Tuple[float, ...] = ()

    def eval(self, r: float) -> float:
        for factor in reversed(self.factors):
            r = factor.eval(r)
        return r

    def inverse(self, u: float) -> float:
        for factor in self.factors:
            u = factor.inverse(u)
        return u


Bridge = Union[DistinguishedBridge, CompositeBridge]


def _factors(bridge: Bridge) -> Tuple[DistinguishedBridge, ...]:
    if isinstance(bridge, CompositeBridge):
        return bridge.factors
    return (bridge,)


def bridge_eval(bridge: Bridge, r: float) -> float:
    return bridge.eval(r)


def bridge_inverse(bridge: Bridge, u: float) -> float:
    return bridge.inverse(u)


def partition_from_bridge(bridge: Bridge, n: int,
                          rng: np.random.Generator) -> DistinguishedPartition:
    """i ~ j iff B^{-1}(U_i) = B^{-1}(U_j), with U_0 = 0.

    Classes are tracked through every factor by plateau membership, so two
    uniforms are merged exactly when they fall on a common plateau.
    """
    if n < 0:
        raise InvalidInputError(f"Ground size must be >= 0, got {n}")
    return partition_from_uniforms(bridge, rng.random(n))


def partition_from_uniforms(bridge: Bridge, uniforms: Sequence[float]) -> DistinguishedPartition:
    """The bridge partition of {0..len(uniforms)} for fixed U_1, U_2, ..."""
    classes: List[Tuple[float, List[int]]] = [(0.0, [0])]
    classes += [(float(u), [i]) for i, u in enumerate(uniforms, start=1)]

    for factor in _factors(bridge):
        merged: Dict[int, List[int]] = {0: []}
        survivors = []
        for index, (value, members) in enumerate(classes):
            key = 0 if index == 0 else factor.plateau(value)
            if key is None:
                survivors.append((factor.inverse(value), members))
            else:
                merged.setdefault(key, []).extend(members)
        classes = [(0.0, merged[0])]
        if 1 in merged:
            classes.append((factor.v, merged[1]))
        classes += survivors

    return DistinguishedPartition.from_blocks((members for _, members in classes),
                                              n=len(uniforms))


def bridge_partition_law(bridge: DistinguishedBridge,
                         n: int) -> Dict[DistinguishedPartition, float]:
    """Exact law for a bridge with uniform jump location: the (y; x) paint-box"""
    return paintbox_law(DistinguishedMassPartition.from_masses(bridge.y, [bridge.x]), n)


def composed_partition_law(b1: DistinguishedBridge, b2: DistinguishedBridge,
                           n: int) -> Dict[DistinguishedPartition, float]:
    """Exact law of Coag(pi, pi') with pi from b1 and pi' from b2"""
    law: Dict[DistinguishedPartition, float] = {}
    for pi, p in bridge_partition_law(b1, n).items():
        for pi_prime, q in bridge_partition_law(b2, pi.num_blocks - 1).items():
            result = coag(pi, pi_prime)
            law[result] = law.get(result, 0.0) + p * q
    return law


def _fresh(bridge: DistinguishedBridge, rng: np.random.Generator) -> DistinguishedBridge:
    return bridge.with_location(float(rng.random())) if bridge.x > 0 else bridge


def compose_pair(b1: DistinguishedBridge, b2: DistinguishedBridge, uniforms: Sequence[float]
                 ) -> Tuple[DistinguishedPartition, DistinguishedPartition]:
    """(partition of the composite b1 o b2, Coag(pi, pi')) on one set of uniforms.

    pi comes from b1 and U; pi' comes from b2 and U'_k = b1^{-1}(U_i), i the
    least element of the k-th non-distinguished block of pi.
    """
    composed = partition_from_uniforms(CompositeBridge((b1, b2)), uniforms)
    pi = partition_from_uniforms(b1, uniforms)
    moved = [bridge_inverse(b1, float(uniforms[block[0] - 1])) for block in pi.blocks[1:]]
    return composed, coag(pi, partition_from_uniforms(b2, moved))


def compose_check(b1: DistinguishedBridge, b2: DistinguishedBridge, n: int, replicas: int,
                  rng: np.random.Generator, show_progress: bool = False,
                  streams: Optional[ReplicaStreams] = None) -> ComposeCheckReport:
    """Compare the partition of the composite bridge with Coag of the two factor partitions"""
    if not (0 <= n <= MAX_COMPOSE_SIZE):
        raise InvalidInputError(f"compose_check runs on 0 <= n <= {MAX_COMPOSE_SIZE}, got {n}")
    if replicas < 1:
        raise InvalidInputError(f"replicas must be >= 1, got {replicas}")

    bridge_samples, coag_samples = [], []
    mismatches = 0
    for i in tqdm(range(replicas), desc="Bridge replicas", disable=not show_progress):
        stream = streams(i) if streams is not None else rng
        first, second = _fresh(b1, stream), _fresh(b2, stream)
        composed, coagulated = compose_pair(first, second, stream.random(n))
        bridge_samples.append(composed)
        coag_samples.append(coagulated)
        mismatches += composed != coagulated

    if mismatches:
        logger.warning(f"compose_check n={n}: {mismatches} of {replicas} pairs disagree")
    bridge_law = empirical_law(bridge_samples)
    coag_law = empirical_law(coag_samples)
    exact = composed_partition_law(b1, b2, n)
    report = ComposeCheckReport(
        n=n, replicas=replicas, bridge_law=bridge_law, coag_law=coag_law,
        distance=total_variation(bridge_law, coag_law), exact_law=exact, mismatches=mismatches,
        bridge_exact_distance=total_variation(bridge_law, exact),
        coag_exact_distance=total_variation(coag_law, exact),
    )
    logger.debug(f"compose_check n={n}: distance {report.distance:.4f}")
    return report


def simulate_flow(nu0: BoundedMeasure, nu1: BoundedMeasure, t: float,
                  rng: np.random.Generator) -> CompositeBridge:
    """B_{0,t} from Poisson atoms of nu0 (jumps at 0) and nu1 (interior jumps)"""
    nu0.require_finite("nu0")
    nu1.require_finite("nu1")
    m0, m1 = nu0.total_mass, nu1.total_mass
    total = m0 + m1
    if t <= 0 or total == 0.0:
        return CompositeBridge()

    count = int(rng.poisson(total * t))
    times = np.sort(rng.random(count) * t)
    factors = []
    for _ in range(count):
        if rng.random() * total < m0:
            factors.append(DistinguishedBridge(y=nu0.sample(rng)))
        else:
            factors.append(DistinguishedBridge(x=nu1.sample(rng), v=float(rng.random())))
    return CompositeBridge(tuple(factors), tuple(times.tolist()))


@functools.lru_cache(maxsize=16)
def _gauss_legendre(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    points, weights = np.polynomial.legendre.leggauss(nodes)
    return (points + 1.0) / 2.0, weights / 2.0


@dataclass(frozen=True, eq=False)
class AtomicProbabilityMeasure:
    """w0 at 0, finitely many atoms in (0,1), and a uniform remainder"""
    w0: float
    locations: np.ndarray = field(default_factory=lambda: np.empty(0))
    weights: np.ndarray = field(default_factory=lambda: np.empty(0))
    lebesgue: float = 0.0

    def __post_init__(self):
        locations = np.asarray(self.locations, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        object.__setattr__(self, 'locations', locations)
        object.__setattr__(self, 'weights', weights)

        if len(locations) != len(weights):
            raise InvalidInputError("Each atom needs one location and one weight")
        if self.w0 < 0 or self.lebesgue < 0 or np.any(weights < 0):
            raise InvalidInputError("Weights must be non-negative")
        if np.any((locations <= 0.0) | (locations >= 1.0)):
            raise InvalidInputError("Atom locations must lie in (0, 1)")
        if len(np.unique(locations)) != len(locations):
            raise InvalidInputError("Atom locations must be distinct")
        if abs(self.total - 1.0) > MASS_TOLERANCE:
            raise InvalidInputError(f"Weights sum to {self.total}, not 1")

    @classmethod
    def from_atoms(cls, w0: float, atoms: Sequence[Tuple[float, float]] = (),
                   lebesgue: float = 0.0) -> 'AtomicProbabilityMeasure':
        locations = [loc for loc, _ in atoms]
        weights = [w for _, w in atoms]
        return cls(w0=w0, locations=np.array(locations), weights=np.array(weights),
                   lebesgue=lebesgue)

    @classmethod
    def lebesgue_measure(cls) -> 'AtomicProbabilityMeasure':
        return cls(w0=0.0, lebesgue=1.0)

    @classmethod
    def dirac_zero(cls) -> 'AtomicProbabilityMeasure':
        return cls(w0=1.0)

    @property
    def atoms(self) -> List[Tuple[float, float]]:
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    @property
    def total(self) -> float:
        return math.fsum((self.w0, self.lebesgue, *self.weights.tolist()))

    def mean(self) -> float:
        """integral of x"""
        return float(self.locations @ self.weights) + self.lebesgue / 2.0

    def discretize(self, nodes: int = DEFAULT_NODES) -> Tuple[np.ndarray, np.ndarray]:
        """Points and weights integrating polynomials exactly, Gauss-Legendre on the uniform part"""
        points = [np.array([0.0]), self.locations]
        weights = [np.array([self.w0]), self.weights]
        if self.lebesgue > 0:
            gl_points, gl_weights = _gauss_legendre(nodes)
            points.append(gl_points)
            weights.append(self.lebesgue * gl_weights)
        z, w = np.concatenate(points), np.concatenate(weights)
        keep = w > 0
        return z[keep], w[keep]

    def sample_parent(self, rng: np.random.Generator) -> float:
        """Location of a parent drawn from the measure; a uniform draw is a fresh location"""
        probabilities = np.concatenate(([self.w0], self.weights, [self.lebesgue]))
        probabilities = probabilities / probabilities.sum()
        index = int(rng.choice(len(probabilities), p=probabilities))
        if index == 0:
            return 0.0
        if index <= len(self.weights):
            return float(self.locations[index - 1])
        return float(rng.random())

    def to_dict(self):
        return {'w0': self.w0, 'atoms': [[loc, w] for loc, w in self.atoms],
                'lebesgue': self.lebesgue}


@dataclass(frozen=True)
class Reproduction:
    x: float
    parent: Optional[float] = None


@dataclass(frozen=True)
class Immigration:
    y: float


def _mix(z: AtomicProbabilityMeasure, size: float, location: float) -> AtomicProbabilityMeasure:
    """(1 - size) z + size * delta_location"""
    keep = 1.0 - size
    w0 = z.w0 * keep
    locations = z.locations
    weights = z.weights * keep
    lebesgue = z.lebesgue * keep

    if location == 0.0:
        w0 += size
    else:
        hit = np.flatnonzero(locations == location)
        if hit.size:
            weights[hit[0]] += size
        else:
            locations = np.append(locations, location)
            weights = np.append(weights, size)

    small = weights < COMPACTION_THRESHOLD
    if small.any():
        residual = float(weights[small].sum())
        locations, weights = locations[~small], weights[~small]
        target = np.flatnonzero(locations == location) if location != 0.0 else np.empty(0)
        if target.size:
            weights[target[0]] += residual
        else:
            w0 += residual
    # renormalise
    total = math.fsum((w0, lebesgue, *weights.tolist()))
    return AtomicProbabilityMeasure(w0=w0 / total, locations=locations, weights=weights / total,
                                    lebesgue=lebesgue / total)


def gfvi_step(z: AtomicProbabilityMeasure, event: Union[Reproduction, Immigration],
              rng: Optional[np.random.Generator] = None) -> AtomicProbabilityMeasure:
    """Apply one reproduction or immigration event"""
    if isinstance(event, Immigration):
        if not 0.0 <= event.y <= 1.0:
            raise InvalidInputError(f"Immigration size must lie in [0, 1], got {event.y}")
        return _mix(z, event.y, 0.0)

    if not 0.0 <= event.x <= 1.0:
        raise InvalidInputError(f"Reproduction size must lie in [0, 1], got {event.x}")
    parent = event.parent
    if parent is None:
        if rng is None:
            raise InvalidInputError("A reproduction without a parent needs an rng to sample one")
        parent = z.sample_parent(rng)
    return _mix(z, event.x, parent)


@dataclass
class GfviTrajectory:
    initial: AtomicProbabilityMeasure
    final: AtomicProbabilityMeasure
    horizon: float
    events: List[GfviEvent]
    samples: List[Tuple[float, AtomicProbabilityMeasure]] = field(default_factory=list)
    path: Optional[List[Tuple[float, AtomicProbabilityMeasure]]] = None

    def to_dict(self):
        return {
            'horizon': self.horizon,
            'events': [event.to_dict() for event in self.events],
            'states': [dict(t=t, **state.to_dict()) for t, state in self.samples],
            'final': self.final.to_dict(),
        }


def simulate_gfvi(nu0: BoundedMeasure, nu1: BoundedMeasure, z0: AtomicProbabilityMeasure,
                  t: float, rng: np.random.Generator, sample_times: Sequence[float] = (),
                  keep_path: bool = False) -> GfviTrajectory:
    """Forward process: reproduction at nu1-atoms, immigration at nu0-atoms"""
    nu0.require_finite("nu0")
    nu1.require_finite("nu1")
    m0, m1 = nu0.total_mass, nu1.total_mass
    total = m0 + m1

    state, now = z0, 0.0
    events: List[GfviEvent] = []
    samples: List[Tuple[float, AtomicProbabilityMeasure]] = []
    path = [(0.0, z0)] if keep_path else None
    pending = sorted(s for s in sample_times if 0.0 <= s <= t)

    while True:
        next_time = now + holding_time(total, rng) if total > 0 else math.inf
        while pending and pending[0] < next_time:
            samples.append((pending.pop(0), state))
        if next_time > t:
            break
        now = next_time

        if rng.random() * total < m1:
            size = nu1.sample(rng)
            parent = state.sample_parent(rng)
            state = gfvi_step(state, Reproduction(size, parent))
            events.append(GfviEvent(now, EventKind.REPRODUCTION, size, parent))
        else:
            size = nu0.sample(rng)
            state = gfvi_step(state, Immigration(size))
            events.append(GfviEvent(now, EventKind.IMMIGRATION, size))
        if keep_path:
            path.append((now, state))

    return GfviTrajectory(initial=z0, final=state, horizon=t, events=events,
                          samples=samples, path=path)


def _check_arity(p: int):
    if not 1 <= p <= MAX_FUNCTIONAL_ARITY:
        raise InvalidInputError(
            f"Test functions take 1 <= p <= {MAX_FUNCTIONAL_ARITY} arguments, got {p}")


def phi_functional(f: Callable, rho: AtomicProbabilityMeasure, pi: DistinguishedPartition,
                   nodes: int = DEFAULT_NODES) -> float:
    """integral of f(Y) with one rho-distributed variable per non-distinguished block.

    Coordinate j of Y is the variable of the block holding j, and 0 for block 0;
    with block 0 alone the value is f(0, ..., 0).
    """
    p = pi.n
    m = pi.num_blocks - 1
    rank = pi.block_index()
    if m == 0:
        return float(f(*[0.0] * p))

    z, w = rho.discretize(nodes)
    coords = []
    for j in range(1, p + 1):
        if rank[j] == 0:
            coords.append(np.zeros((1,) * m))
        else:
            shape = [1] * m
            shape[rank[j] - 1] = len(z)
            coords.append(z.reshape(shape))
    values = np.broadcast_to(np.asarray(f(*coords), dtype=float), (len(z),) * m)
    weights = functools.reduce(np.multiply.outer, [w] * m)
    return float(np.sum(values * weights))


def moment_functional(f: Callable, p: int, rho: AtomicProbabilityMeasure,
                      nodes: int = DEFAULT_NODES) -> float:
    """G_f(rho) = <f, rho^p>"""
    return phi_functional(f, rho, DistinguishedPartition.singletons(p), nodes)


def gfvi_generator_apply(f: Callable, p: int, rho: AtomicProbabilityMeasure,
                         nu0: BoundedMeasure, nu1: BoundedMeasure,
                         nodes: int = DEFAULT_NODES) -> float:
    """L G_f(rho) from its jump form, integrating over nu1(dx) rho(da) and nu0(dy)"""
    _check_arity(p)
    nu0.require_finite("nu0")
    nu1.require_finite("nu1")
    base = moment_functional(f, p, rho, nodes)
    points, weights = rho.discretize(nodes)

    def reproduction_gain(x: float) -> float:
        if x == 0.0:
            return 0.0
        after = [moment_functional(f, p, _mix(rho, x, float(a)), nodes) for a in points]
        return float(np.dot(weights, after)) - base

    def immigration_gain(y: float) -> float:
        return moment_functional(f, p, _mix(rho, y, 0.0), nodes) - base

    return nu1.integrate(reproduction_gain) + nu0.integrate(immigration_gain)


def dual_generator_apply(f: Callable, p: int, rho: AtomicProbabilityMeasure, M: MParams,
                         nodes: int = DEFAULT_NODES) -> float:
    """Coalescent generator applied to pi -> Phi_f(rho, pi) at the singletons of {0..p}"""
    _check_arity(p)
    return generator_apply(lambda pi: phi_functional(f, rho, pi, nodes),
                           DistinguishedPartition.singletons(p), M)


def gfvi_martingale_residual(traj: GfviTrajectory, f: Callable, p: int,
                             nu0: BoundedMeasure, nu1: BoundedMeasure,
                             t: Optional[float] = None, nodes: int = DEFAULT_NODES) -> float:
    """G_f(Z_t) - G_f(Z_0) - integral_0^t L G_f(Z_s) ds along one simulated path"""
    if traj.path is None:
        raise InvalidInputError("Martingale residuals need a trajectory simulated with keep_path")
    t = traj.horizon if t is None else t
    integral = 0.0
    state, since = traj.initial, 0.0
    for time, after in traj.path[1:]:
        if time > t:
            break
        integral += gfvi_generator_apply(f, p, state, nu0, nu1, nodes) * (time - since)
        state, since = after, time
    integral += gfvi_generator_apply(f, p, state, nu0, nu1, nodes) * (t - since)
    return (moment_functional(f, p, state, nodes)
            - moment_functional(f, p, traj.initial, nodes) - integral)


def reconstruct_from_partition(pi: DistinguishedPartition,
                               rng: np.random.Generator) -> AtomicProbabilityMeasure:
    """|pi_0| delta_0 + sum |pi_i| delta_{W_i} + (singleton share) Lebesgue"""
    frequencies = empirical_frequencies(pi)
    atoms = [(float(rng.random()), share) for rank, share in frequencies[1:]
             if len(pi.blocks[rank]) > 1]
    return AtomicProbabilityMeasure.from_atoms(frequencies[0][1], atoms, singleton_fraction(pi))


def duality_check(M: MParams, p: int, f: Callable, t: float, replicas: int,
                  rng: np.random.Generator, nodes: int = DEFAULT_NODES,
                  show_progress: bool = False, seed: Optional[int] = None,
                  streams: Optional[ReplicaStreams] = None) -> DualityReport:
    """Estimate E[Phi_f(Lebesgue, Pi(t))] and E[Phi_f(Z_t, singletons)] side by side"""
    _check_arity(p)
    if replicas < 2:
        raise InvalidInputError(f"Duality needs at least 2 replicas, got {replicas}")
    nu0 = nu_measure(M.lambda0, 1)
    nu1 = nu_measure(M.lambda1, 2)
    nu0.require_finite("nu0")
    nu1.require_finite("nu1")

    lebesgue = AtomicProbabilityMeasure.lebesgue_measure()
    singletons = DistinguishedPartition.singletons(p)
    lhs_cache: Dict[DistinguishedPartition, float] = {}
    lhs = np.empty(replicas)
    rhs = np.empty(replicas)

    for i in tqdm(range(replicas), desc="Duality replicas", disable=not show_progress):
        stream = streams(i) if streams is not None else rng
        partition = simulate_m_coalescent(M, p, stream, horizon=t).final
        if partition not in lhs_cache:
            lhs_cache[partition] = phi_functional(f, lebesgue, partition, nodes)
        lhs[i] = lhs_cache[partition]

        z_t = simulate_gfvi(nu0, nu1, lebesgue, t, stream).final
        rhs[i] = phi_functional(f, z_t, singletons, nodes)

    report = DualityReport(
        p=p, t=t, replicas=replicas, seed=seed,
        lhs_mean=float(lhs.mean()), lhs_se=float(lhs.std(ddof=1) / math.sqrt(replicas)),
        rhs_mean=float(rhs.mean()), rhs_se=float(rhs.std(ddof=1) / math.sqrt(replicas)),
    )
    logger.info(f"Duality p={p}, t={t}: lhs {report.lhs_mean:.5f} ± {report.lhs_se:.5f}, "
                f"rhs {report.rhs_mean:.5f} ± {report.rhs_se:.5f}, z={report.z_score:.2f}")
    return report
