"""
Finite measures on [0, 1] as sums of tagged components, and the rate
integrals lambda_{b,k}, r_{b,k} built from them
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Tuple, Union

import numpy as np
from scipy import special

from .errors import InvalidInputError
from .quadrature import adaptive_quad

logger = logging.getLogger(__name__)

EULER_GAMMA = float(np.euler_gamma)

# closed forms are used for Beta(a, b) unless a sits this close to a pole
_POLE_GUARD = 1e-3
_SERIES_CUTOFF = 0.05


def _fmt(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith('.0') else text


def _check_weight(weight: float):
    if not (0.0 <= weight < math.inf):
        raise InvalidInputError(f"Component weights must be finite and >= 0, got {weight}")


def _psi_kernel(q: float, x: float) -> float:
    """(e^{-qx} - 1 + qx) / x^2, with its limit q^2/2 at x = 0"""
    if x == 0.0:
        return 0.5 * q * q
    qx = q * x
    if qx < 1e-4:
        return q * q * (0.5 - qx / 6.0 + qx * qx / 24.0)
    return (math.expm1(-qx) + qx) / (x * x)


def _phi1_kernel(n: np.ndarray, x: float) -> np.ndarray:
    """sum_{k>=2} (k-1) C(n,k) x^{k-2} (1-x)^{n-k} = (nx - 1 + (1-x)^n) / x^2"""
    n = np.asarray(n, dtype=float)
    if x == 0.0:
        return n * (n - 1.0) / 2.0
    if x == 1.0:
        return np.maximum(n - 1.0, 0.0)

    with np.errstate(invalid="ignore", over="ignore"):
        direct = (n * x + np.expm1(n * math.log1p(-x))) / (x * x)

        # alternating binomial series sum_{j>=2} (-1)^j C(n,j) x^{j-2} for small nx
        term = n * (n - 1.0) / 2.0
        series = term.copy()
        for j in range(2, 12):
            term = term * (n - j) / (j + 1) * x
            series = series + (-1) ** (j + 1) * term

    return np.where(n * x < _SERIES_CUTOFF, series, direct)


def _signed_beta(alpha, beta):
    """Euler Beta function continued to negative non-integer arguments"""
    sign = special.gammasgn(alpha) * special.gammasgn(beta) * special.gammasgn(alpha + beta)
    return sign * np.exp(special.betaln(alpha, beta))


@dataclass(frozen=True)
class DiracAtZero:
    weight: float

    def __post_init__(self):
        _check_weight(self.weight)

    @property
    def mass(self) -> float:
        return self.weight

    def moment(self, p: float, q: float) -> float:
        """0^0 = 1, so only p = 0 sees the atom"""
        return self.weight if p == 0 else 0.0

    quadrature_moment = moment

    def psi(self, q: float) -> float:
        return self.weight * 0.5 * q * q

    def phi1(self, n: np.ndarray) -> np.ndarray:
        return self.weight * _phi1_kernel(n, 0.0)

    def integrate(self, func: Callable[[float], float]) -> float:
        return self.weight * func(0.0) if self.weight else 0.0

    def sample(self, rng: np.random.Generator) -> float:
        return 0.0

    def to_spec(self) -> str:
        return f"dirac0:{_fmt(self.weight)}"


@dataclass(frozen=True)
class Dirac:
    location: float
    weight: float

    def __post_init__(self):
        _check_weight(self.weight)
        if not (0.0 < self.location <= 1.0):
            raise InvalidInputError(f"Dirac location must lie in (0, 1], got {self.location}")

    @property
    def mass(self) -> float:
        return self.weight

    def moment(self, p: float, q: float) -> float:
        x = self.location
        return self.weight * x ** p * (1.0 - x) ** q

    quadrature_moment = moment

    def psi(self, q: float) -> float:
        return self.weight * _psi_kernel(q, self.location)

    def phi1(self, n: np.ndarray) -> np.ndarray:
        return self.weight * _phi1_kernel(n, self.location)

    def integrate(self, func: Callable[[float], float]) -> float:
        return self.weight * func(self.location) if self.weight else 0.0

    def sample(self, rng: np.random.Generator) -> float:
        return self.location

    def to_spec(self) -> str:
        return f"dirac:{_fmt(self.location)}:{_fmt(self.weight)}"


@dataclass(frozen=True)
class Uniform:
    weight: float

    def __post_init__(self):
        _check_weight(self.weight)

    @property
    def mass(self) -> float:
        return self.weight

    def moment(self, p: float, q: float) -> float:
        return self.weight * math.exp(special.betaln(p + 1, q + 1))

    def quadrature_moment(self, p: float, q: float) -> float:
        return self.weight * adaptive_quad(lambda x: 1.0, 0.0, 1.0, weight_exponents=(p, q))

    def psi(self, q: float) -> float:
        """Closed form q(E1(q) + ln q + gamma) - q + 1 - e^{-q}"""
        if q < 1e-3:
            return self.weight * q * q * (0.5 - q / 12.0 + q * q / 72.0)
        ein = special.exp1(q) + math.log(q) + EULER_GAMMA
        return self.weight * (q * ein - q - math.expm1(-q))

    def phi1(self, n: np.ndarray) -> np.ndarray:
        """Each k-term equals n/k, so phi1(n) = n (H_n - 1)"""
        n = np.asarray(n, dtype=float)
        harmonic = special.digamma(n + 1.0) + EULER_GAMMA
        return self.weight * np.where(n >= 2, n * (harmonic - 1.0), 0.0)

    def integrate(self, func: Callable[[float], float]) -> float:
        return self.weight * adaptive_quad(func, 0.0, 1.0)

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.random())

    def to_spec(self) -> str:
        return f"uniform:{_fmt(self.weight)}"


@dataclass(frozen=True)
class BetaDensity:
    """weight times the normalised Beta(a, b) density on (0, 1)"""
    a: float
    b: float
    weight: float

    def __post_init__(self):
        _check_weight(self.weight)
        if not (self.a > 0 and self.b > 0):
            raise InvalidInputError(f"Beta parameters must be positive, got a={self.a}, b={self.b}")

    @property
    def mass(self) -> float:
        return self.weight

    @property
    def _norm(self) -> float:
        return math.exp(-special.betaln(self.a, self.b))

    def moment(self, p: float, q: float) -> float:
        return self.weight * math.exp(special.betaln(self.a + p, self.b + q)
                                      - special.betaln(self.a, self.b))

    def quadrature_moment(self, p: float, q: float) -> float:
        scale = self.weight * self._norm
        return scale * adaptive_quad(lambda x: 1.0, 0.0, 1.0,
                                     weight_exponents=(self.a - 1 + p, self.b - 1 + q))

    def _density_integral(self, kernel, split: float) -> float:
        """Integrate kernel(x) against the density, splitting at the kernel's scale"""
        a, b = self.a, self.b
        scale = self.weight * self._norm
        c = min(split, 0.5)

        head = adaptive_quad(lambda x: kernel(x) * (1.0 - x) ** (b - 1), 0.0, c,
                             weight_exponents=(a - 1, 0.0))
        middle = 0.0
        if c < 0.5:
            middle = adaptive_quad(
                lambda u: kernel(math.exp(u)) * math.exp(a * u) * (-math.expm1(u)) ** (b - 1),
                math.log(c), math.log(0.5),
            )
        tail = adaptive_quad(lambda x: kernel(x) * x ** (a - 1), 0.5, 1.0,
                             weight_exponents=(0.0, b - 1))
        return scale * (head + middle + tail)

    def psi(self, q: float) -> float:
        if self.a == 1.0 and self.b == 1.0:
            return Uniform(self.weight).psi(q)
        return self._density_integral(lambda x: _psi_kernel(q, x), 1.0 / q)

    def phi1(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        a, b = self.a, self.b
        if a == 1.0 and b == 1.0:
            return Uniform(self.weight).phi1(n)

        if abs(a - 1.0) > _POLE_GUARD and abs(a - 2.0) > _POLE_GUARD:
            # analytic continuation of n B(a-1,b) - B(a-2,b) + B(a-2,b+n)
            bracket = (n * _signed_beta(a - 1, b) - _signed_beta(a - 2, b)
                       + _signed_beta(a - 2, b + n))
            values = self.weight * self._norm * bracket
        else:
            values = np.array([
                self._density_integral(lambda x, m=m: float(_phi1_kernel(m, x)), 1.0 / max(m, 1.0))
                for m in np.atleast_1d(n)
            ]).reshape(n.shape)
        return np.where(n >= 2, values, 0.0)

    def integrate(self, func: Callable[[float], float]) -> float:
        return self.weight * self._norm * adaptive_quad(
            func, 0.0, 1.0, weight_exponents=(self.a - 1, self.b - 1))

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.beta(self.a, self.b))

    def to_spec(self) -> str:
        return f"beta:{_fmt(self.a)}:{_fmt(self.b)}:{_fmt(self.weight)}"


@dataclass(frozen=True)
class PiecewiseConstantDensity:
    """Density heights[i] * x^(-power) on [breakpoints[i], breakpoints[i+1])"""
    breakpoints: Tuple[float, ...]
    heights: Tuple[float, ...]
    power: float = 0.0

    def __post_init__(self):
        bp, h = self.breakpoints, self.heights
        if len(bp) < 2 or len(h) != len(bp) - 1:
            raise InvalidInputError("Piecewise density needs n+1 breakpoints for n heights")
        if bp[0] < 0.0 or bp[-1] > 1.0 or any(bp[i] >= bp[i + 1] for i in range(len(bp) - 1)):
            raise InvalidInputError(f"Breakpoints must increase strictly inside [0, 1]: {bp}")
        for height in h:
            _check_weight(height)

    def _pieces(self):
        for i, height in enumerate(self.heights):
            if height > 0:
                yield self.breakpoints[i], self.breakpoints[i + 1], height

    def _piece_mass(self, u: float, v: float, height: float) -> float:
        p = self.power
        if p == 0:
            return height * (v - u)
        if u == 0.0 and p >= 1.0:
            return math.inf
        if p == 1.0:
            return height * math.log(v / u)
        return height * (v ** (1 - p) - u ** (1 - p)) / (1 - p)

    @property
    def mass(self) -> float:
        return math.fsum(self._piece_mass(u, v, h) for u, v, h in self._pieces())

    def _integrate(self, kernel, split: float = None, extra_power: float = 0.0) -> float:
        """Integrate kernel(x) x^extra_power against the density"""
        exponent = extra_power - self.power
        total = 0.0
        for u, v, height in self._pieces():
            edges = [u, v]
            if split is not None and u < split < v:
                edges = [u, split, v]
            for lo, hi in zip(edges, edges[1:]):
                if lo == 0.0:
                    if exponent <= -1.0:
                        return math.inf
                    total += height * adaptive_quad(kernel, lo, hi,
                                                    weight_exponents=(exponent, 0.0))
                else:
                    total += height * adaptive_quad(lambda x: kernel(x) * x ** exponent, lo, hi)
        return total

    def moment(self, p: float, q: float) -> float:
        """Incomplete Beta differences per piece; quadrature when x^(p - power) is not integrable"""
        a = p - self.power + 1.0
        if a <= 0:
            return self.quadrature_moment(p, q)
        scale = math.exp(special.betaln(a, q + 1.0))
        return math.fsum(
            height * scale * (special.betainc(a, q + 1.0, v) - special.betainc(a, q + 1.0, u))
            for u, v, height in self._pieces()
        )

    def quadrature_moment(self, p: float, q: float) -> float:
        return self._integrate(lambda x: (1.0 - x) ** q, extra_power=p)

    def psi(self, q: float) -> float:
        return self._integrate(lambda x: _psi_kernel(q, x), split=1.0 / q)

    def phi1(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        values = np.array([
            self._integrate(lambda x, m=m: float(_phi1_kernel(m, x)), split=1.0 / max(m, 1.0))
            for m in np.atleast_1d(n)
        ]).reshape(n.shape)
        return np.where(n >= 2, values, 0.0)

    def integrate(self, func: Callable[[float], float]) -> float:
        return self._integrate(func)

    def sample(self, rng: np.random.Generator) -> float:
        pieces = list(self._pieces())
        masses = np.array([self._piece_mass(u, v, h) for u, v, h in pieces])
        u, v, _ = pieces[rng.choice(len(pieces), p=masses / masses.sum())]
        r = rng.random()
        p = self.power
        if p == 0:
            return u + r * (v - u)
        if p == 1.0:
            return u * (v / u) ** r
        e = 1.0 - p
        return (u ** e + r * (v ** e - u ** e)) ** (1.0 / e)

    def to_spec(self) -> str:
        if self.power != 0:
            raise InvalidInputError("Only unweighted piecewise densities have a text form")
        values = []
        for x, h in zip(self.breakpoints, self.heights):
            values += [_fmt(x), _fmt(h)]
        values.append(_fmt(self.breakpoints[-1]))
        return 'pwc:' + ','.join(values)


@dataclass(frozen=True)
class PowerScaled:
    """x^(-power) times a base component whose result has infinite mass"""
    base: Union[Dirac, Uniform, BetaDensity]
    power: float

    @property
    def mass(self) -> float:
        return math.inf

    def moment(self, p: float, q: float) -> float:
        a = getattr(self.base, 'a', 1.0)
        if a + p - self.power <= 0:
            return math.inf
        return self.base.moment(p - self.power, q)

    def quadrature_moment(self, p: float, q: float) -> float:
        return self.base.quadrature_moment(p - self.power, q)

    def psi(self, q: float) -> float:
        raise InvalidInputError("psi is defined for finite measures only")

    def phi1(self, n: np.ndarray) -> np.ndarray:
        raise InvalidInputError("phi1 is defined for finite measures only")

    def integrate(self, func: Callable[[float], float]) -> float:
        raise InvalidInputError("Cannot integrate against an infinite-mass measure")

    def sample(self, rng: np.random.Generator) -> float:
        raise InvalidInputError("Cannot sample from an infinite-mass measure")

    def to_spec(self) -> str:
        raise InvalidInputError("Infinite-mass measures have no text form")


Component = Union[DiracAtZero, Dirac, Uniform, BetaDensity, PiecewiseConstantDensity, PowerScaled]


def _parse_component(text: str) -> Component:
    kind, _, rest = text.strip().partition(':')
    args = rest.split(':') if rest else []
    try:
        if kind == 'dirac0' and len(args) == 1:
            return DiracAtZero(float(args[0]))
        if kind == 'dirac' and len(args) == 2:
            return Dirac(float(args[0]), float(args[1]))
        if kind == 'beta' and len(args) == 3:
            return BetaDensity(float(args[0]), float(args[1]), float(args[2]))
        if kind == 'uniform' and len(args) == 1:
            return Uniform(float(args[0]))
        if kind == 'pwc' and len(args) == 1:
            values = [float(v) for v in args[0].split(',')]
            if len(values) < 3 or len(values) % 2 == 0:
                raise InvalidInputError(f"pwc needs x0,h0,...,xn, got {args[0]!r}")
            return PiecewiseConstantDensity(tuple(values[0::2]), tuple(values[1::2]))
    except ValueError as e:
        if isinstance(e, InvalidInputError):
            raise
        raise InvalidInputError(f"Malformed measure component {text!r}: {e}")
    raise InvalidInputError(f"Unknown measure component {text!r}")


@dataclass(frozen=True)
class BoundedMeasure:
    """A measure on [0, 1] given by its components"""
    components: Tuple[Component, ...] = field(default_factory=tuple)

    @classmethod
    def zero(cls) -> 'BoundedMeasure':
        return cls(())

    @classmethod
    def parse(cls, text: str) -> 'BoundedMeasure':
        """Parse e.g. 'dirac0:1+beta:0.5:1.5:2'; '0' or '' is the zero measure"""
        text = text.strip()
        if text in ('', '0'):
            return cls.zero()
        return cls(tuple(_parse_component(chunk) for chunk in text.split('+')))

    def to_spec(self) -> str:
        if not self.components:
            return '0'
        return '+'.join(c.to_spec() for c in self.components)

    def __str__(self) -> str:
        try:
            return self.to_spec()
        except InvalidInputError:
            return f"BoundedMeasure({self.components})"

    @property
    def infinite_mass(self) -> bool:
        return any(math.isinf(c.mass) for c in self.components)

    @property
    def total_mass(self) -> float:
        return math.fsum(c.mass for c in self.components)

    @property
    def is_zero(self) -> bool:
        return self.total_mass == 0.0

    @property
    def atom_at_zero(self) -> float:
        return math.fsum(c.weight for c in self.components if isinstance(c, DiracAtZero))

    @property
    def mass_at_one(self) -> float:
        return math.fsum(c.weight for c in self.components
                         if isinstance(c, Dirac) and c.location == 1.0)

    def require_finite(self, what: str = "measure"):
        if self.infinite_mass:
            raise InvalidInputError(f"{what} has infinite mass; a finite intensity is required")

    def moment(self, p: float, q: float) -> float:
        """integral of x^p (1-x)^q, with 0^0 = 1"""
        return math.fsum(c.moment(p, q) for c in self.components)

    def quadrature_moment(self, p: float, q: float) -> float:
        return math.fsum(c.quadrature_moment(p, q) for c in self.components)

    def psi(self, q: float) -> float:
        if q <= 0:
            raise InvalidInputError(f"psi needs q > 0, got {q}")
        return math.fsum(c.psi(q) for c in self.components)

    def phi1(self, n: int) -> float:
        """phi1(n) = sum_{k=2}^{n} (k-1) C(n,k) lambda_{n,k}"""
        if n < 2:
            return 0.0
        return math.fsum(float(c.phi1(np.array([n]))[0]) for c in self.components)

    def phi1_table(self, n_max: int) -> np.ndarray:
        """phi1(n) for n = 0..n_max (zero for n < 2)"""
        ns = np.arange(n_max + 1)
        table = np.zeros(n_max + 1)
        for component in self.components:
            table += component.phi1(ns)
        return table

    def integrate(self, func: Callable[[float], float]) -> float:
        """integral of func against the measure (finite measures only)"""
        self.require_finite()
        return math.fsum(c.integrate(func) for c in self.components)

    def sample(self, rng: np.random.Generator) -> float:
        """Draw from the normalised measure"""
        self.require_finite()
        masses = np.array([c.mass for c in self.components])
        if masses.sum() <= 0:
            raise InvalidInputError("Cannot sample from the zero measure")
        index = rng.choice(len(masses), p=masses / masses.sum())
        return self.components[index].sample(rng)


@dataclass(frozen=True)
class MParams:
    """M = (Lambda0, Lambda1)"""
    lambda0: BoundedMeasure
    lambda1: BoundedMeasure

    def __post_init__(self):
        self.lambda0.require_finite("Lambda0")
        self.lambda1.require_finite("Lambda1")

    @classmethod
    def parse(cls, lambda0: str, lambda1: str) -> 'MParams':
        return cls(BoundedMeasure.parse(lambda0), BoundedMeasure.parse(lambda1))

    @property
    def c0(self) -> float:
        return self.lambda0.atom_at_zero

    @property
    def c1(self) -> float:
        return self.lambda1.atom_at_zero

    def to_dict(self):
        return {'lambda0': self.lambda0.to_spec(), 'lambda1': self.lambda1.to_spec()}


def total_mass(measure: BoundedMeasure) -> float:
    return measure.total_mass


def lambda_rate(b: int, k: int, lambda1: BoundedMeasure) -> float:
    """lambda_{b,k} = integral of x^{k-2} (1-x)^{b-k} Lambda1(dx)"""
    if not (2 <= k <= b):
        raise InvalidInputError(f"lambda_rate needs 2 <= k <= b, got b={b}, k={k}")
    return lambda1.moment(k - 2, b - k)


def r_rate(b: int, k: int, lambda0: BoundedMeasure) -> float:
    """r_{b,k} = integral of y^{k-1} (1-y)^{b-k} Lambda0(dy)"""
    if not (1 <= k <= b):
        raise InvalidInputError(f"r_rate needs 1 <= k <= b, got b={b}, k={k}")
    return lambda0.moment(k - 1, b - k)


def _scale_component(component: Component, power: float) -> Component:
    """Component of x^(-power) times component"""
    if isinstance(component, Dirac):
        return Dirac(component.location, component.weight * component.location ** -power)
    if isinstance(component, PiecewiseConstantDensity):
        return PiecewiseConstantDensity(component.breakpoints, component.heights,
                                        component.power + power)
    if isinstance(component, PowerScaled):
        remaining = component.power + power
        if remaining == 0:
            return component.base
        return _scale_component(component.base, remaining)
    if isinstance(component, Uniform):
        component = BetaDensity(1.0, 1.0, component.weight)
    if isinstance(component, BetaDensity):
        a = component.a - power
        if a <= 0:
            return PowerScaled(component, power)
        weight = component.weight * math.exp(special.betaln(a, component.b)
                                             - special.betaln(component.a, component.b))
        if a == 1.0 and component.b == 1.0:
            return Uniform(weight)
        return BetaDensity(a, component.b, weight)
    raise InvalidInputError(f"Cannot rescale component {component!r}")


def nu_measure(measure: BoundedMeasure, power: int) -> BoundedMeasure:
    """nu(dx) = x^(-power) Lambda(dx); infinite results carry infinite_mass"""
    if power not in (1, 2):
        raise InvalidInputError(f"power must be 1 or 2, got {power}")
    if measure.atom_at_zero > 0:
        raise InvalidInputError("Lambda({0}) > 0: the density transform is singular at 0")
    components = tuple(_scale_component(c, power) for c in measure.components
                       if not isinstance(c, DiracAtZero))
    result = BoundedMeasure(components)
    if result.infinite_mass:
        logger.debug(f"nu transform of {measure} with power {power} has infinite mass")
    return result


def lambda_from_nu(nu: BoundedMeasure, power: int) -> BoundedMeasure:
    """Lambda(dx) = x^power nu(dx), the inverse of nu_measure"""
    if power not in (1, 2):
        raise InvalidInputError(f"power must be 1 or 2, got {power}")
    if nu.atom_at_zero > 0:
        raise InvalidInputError("A nu measure cannot charge 0")
    return BoundedMeasure(tuple(_scale_component(c, -power) for c in nu.components))
