"""
Coming down from infinity: phi1, phi, psi, the classification heuristic,
the fixation-time bound and the dust subordinator
"""
import logging
import math
from functools import lru_cache
from typing import Iterable, Tuple

import numpy as np
from scipy import special

from .coalescent import GeneralCoagulationSpec
from .data_models import CdiVerdict, FixationBound, Verdict
from .errors import ConfigurationError, InvalidInputError
from .measures import BoundedMeasure, MParams, lambda_rate, r_rate
from .paintbox import DistinguishedMassPartition
from .quadrature import adaptive_quad

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 10_000
DEFAULT_QMAX = 1e6
DEFAULT_WINDOWS = 20
DEFAULT_RATIO_THRESHOLD = 0.99
DEFAULT_DECISIVE_WINDOWS = 5

_WINDOW_TOLERANCE = 1e-8


@lru_cache(maxsize=64)
def phi1_table(lambda1: BoundedMeasure, depth: int) -> np.ndarray:
    """phi1(n) for n = 0..depth"""
    logger.debug(f"Building phi1 table for {lambda1} up to n={depth}")
    table = lambda1.phi1_table(depth)
    table.setflags(write=False)
    return table


def phi1(n: int, lambda1: BoundedMeasure) -> float:
    """sum_{k=2}^{n} (k-1) C(n,k) lambda_{n,k}"""
    return lambda1.phi1(n)


def phi1_by_summation(n: int, lambda1: BoundedMeasure) -> float:
    return math.fsum((k - 1) * math.comb(n, k) * lambda_rate(n, k, lambda1)
                     for k in range(2, n + 1))


def phi(n: int, M: MParams) -> float:
    """phi1(n) + Lambda0([0,1]) n"""
    if n < 1:
        raise InvalidInputError(f"phi needs n >= 1, got {n}")
    return phi1(n, M.lambda1) + M.lambda0.total_mass * n


def phi2_by_summation(n: int, lambda0: BoundedMeasure) -> float:
    """sum_{k=1}^{n} k C(n,k) r_{n,k}, which collapses to Lambda0([0,1]) n"""
    return math.fsum(k * math.comb(n, k) * r_rate(n, k, lambda0) for k in range(1, n + 1))


def psi(q: float, lambda1: BoundedMeasure) -> float:
    """integral of (e^{-qx} - 1 + qx) x^{-2} Lambda1(dx)"""
    return lambda1.psi(q)


def psi_window_increments(lambda1: BoundedMeasure, qmax: float, windows: int) -> np.ndarray:
    """integral of dq / psi(q) over equal log-width windows of [1, qmax]"""
    edges = np.geomspace(1.0, qmax, windows + 1)
    increments = [
        adaptive_quad(lambda u: math.exp(u) / psi(math.exp(u), lambda1),
                      math.log(lo), math.log(hi), tolerance=_WINDOW_TOLERANCE)
        for lo, hi in zip(edges[:-1], edges[1:])
    ]
    return np.array(increments)


def classify_cdi(M: MParams, depth: int = DEFAULT_DEPTH, qmax: float = DEFAULT_QMAX,
                 windows: int = DEFAULT_WINDOWS,
                 ratio_threshold: float = DEFAULT_RATIO_THRESHOLD,
                 decisive_windows: int = DEFAULT_DECISIVE_WINDOWS) -> CdiVerdict:
    """Heuristic verdict on whether sum 1/phi1(n) converges.

    Window increments I_j of the psi integral are weighted as g_j = (j+1) I_j,
    so harmonic decay (the borderline case) gives ratios g_{j+1}/g_j near 1.
    """
    if depth < 2 or not (qmax > 1.0) or windows < 2:
        raise InvalidInputError(f"Need depth >= 2, qmax > 1 and windows >= 2; got "
                                f"{depth}, {qmax}, {windows}")
    decisive_windows = min(decisive_windows, windows - 1)
    lambda1 = M.lambda1
    evidence = {
        'mass_at_one': False,
        'depth': depth,
        'qmax': qmax,
        'windows': windows,
        'ratio_threshold': ratio_threshold,
    }

    if M.lambda0.mass_at_one + lambda1.mass_at_one > 0:
        evidence['mass_at_one'] = True
        logger.info("Mass at 1: every block merges in an exponential time")
        return CdiVerdict(Verdict.COMES_DOWN, evidence)

    if lambda1.is_zero:
        evidence['lambda1_zero'] = True
        evidence['lambda0_mass'] = M.lambda0.total_mass
        logger.info("Lambda1 = 0: blocks only disappear by joining block 0")
        return CdiVerdict(Verdict.DOES_NOT_COME_DOWN, evidence)

    values = phi1_table(lambda1, depth)[2:]
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        bad = int(np.argmax((values <= 0) | ~np.isfinite(values))) + 2
        raise ConfigurationError(f"phi1({bad}) = {values[bad - 2]} for a non-zero Lambda1")
    evidence['partial_sum'] = math.fsum(1.0 / values)

    increments = psi_window_increments(lambda1, qmax, windows)
    weighted = increments * np.arange(1, windows + 1)
    ratios = weighted[1:] / weighted[:-1]
    decisive = ratios[-decisive_windows:]
    evidence['psi_integral'] = math.fsum(increments)
    evidence['increments'] = increments.tolist()
    evidence['ratios'] = ratios.tolist()

    if np.all(decisive < ratio_threshold):
        verdict = Verdict.COMES_DOWN
    elif np.all(decisive >= ratio_threshold):
        verdict = Verdict.DOES_NOT_COME_DOWN
    else:
        verdict = Verdict.UNDECIDED
    logger.info(f"CDI verdict {verdict.value} (S_N={evidence['partial_sum']:.6g}, "
                f"last ratios {np.round(decisive, 4).tolist()})")
    return CdiVerdict(verdict, evidence)


def fixation_bound(M: MParams, depth: int = DEFAULT_DEPTH) -> FixationBound:
    """Bounds on E[zeta] from sum 1/phi(n) and from an atom of Lambda0 at 1"""
    m0 = M.lambda0.total_mass
    if m0 <= 0:
        raise InvalidInputError("Lambda0 = 0: block 0 never absorbs anything, so no fixation")
    if depth < 0:
        raise InvalidInputError(f"depth must be >= 0, got {depth}")

    ns = np.arange(1, depth + 1, dtype=float)
    phis = phi1_table(M.lambda1, depth)[1:] + m0 * ns
    partial_sum = math.fsum(1.0 / phis)

    # phi(n) >= a n (n + c) with a = c1 / 2, c = (m0 - a) / a
    tail_bound = None
    c1 = M.c1
    if c1 > 0:
        a = c1 / 2.0
        c = (m0 - a) / a
        start = depth + 1.0
        if c == 0:
            tail_bound = float(special.polygamma(1, start)) / a
        else:
            tail_bound = float(special.digamma(start + c) - special.digamma(start)) / (a * c)

    at_one = M.lambda0.mass_at_one
    atom_bound = 1.0 / at_one if at_one > 0 else None

    result = FixationBound(depth=depth, partial_sum=partial_sum,
                           tail_bound=tail_bound, atom_bound=atom_bound)
    if result.bound is None:
        logger.info(f"Fixation tail not controlled; partial sum to N={depth} is {partial_sum:.6g}")
    return result


def dust_laplace_exponent(q: float, c0: float,
                          mixture: Iterable[Tuple[DistinguishedMassPartition, float]]) -> float:
    """c0 q + sum_i w_i (1 - dust(s_i)^q)"""
    if q < 0:
        raise InvalidInputError(f"Laplace exponent needs q >= 0, got {q}")
    return c0 * q + math.fsum(w * (1.0 - s.dust ** q) for s, w in mixture)


def simulate_dust(spec: GeneralCoagulationSpec, t: float, rng: np.random.Generator) -> float:
    """Dust D0(t): e^{-c0 t} times the dust of every paint-box atom up to t"""
    if t < 0:
        raise InvalidInputError(f"t must be >= 0, got {t}")
    if t == 0:
        return 1.0
    if spec.c1 > 0:
        return 0.0

    weights = np.array([w for _, w in spec.mixture], dtype=float)
    total = float(weights.sum()) if len(weights) else 0.0
    value = math.exp(-spec.c0 * t)
    if total == 0.0:
        return value

    count = int(rng.poisson(total * t))
    if count:
        atoms = rng.choice(len(weights), size=count, p=weights / total)
        dusts = np.array([s.dust for s, _ in spec.mixture])
        value *= float(np.prod(dusts[atoms]))
    return value
