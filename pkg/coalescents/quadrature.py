"""
Adaptive quadrature with a hard subdivision cap
"""
import logging
from typing import Callable, Optional, Tuple

from scipy import integrate

from .errors import NumericalCapExceeded

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
MAX_SUBDIVISIONS = 10**6

# QUADPACK starts here and escalates tenfold until MAX_SUBDIVISIONS
_INITIAL_SUBDIVISIONS = 200
_ACCEPTABLE_EARLY_STOP = 1e-8

_limits = {'tolerance': DEFAULT_TOLERANCE, 'max_subdivisions': MAX_SUBDIVISIONS}


def set_limits(tolerance: Optional[float] = None, max_subdivisions: Optional[int] = None):
    """Override the process-wide tolerance and subdivision cap"""
    if tolerance is not None:
        _limits['tolerance'] = float(tolerance)
    if max_subdivisions is not None:
        _limits['max_subdivisions'] = int(max_subdivisions)


def get_limits() -> Tuple[float, int]:
    return _limits['tolerance'], _limits['max_subdivisions']


def adaptive_quad(func: Callable[[float], float], a: float, b: float,
                  weight_exponents: Optional[Tuple[float, float]] = None,
                  tolerance: Optional[float] = None) -> float:
    """Integrate func over [a, b].

    With weight_exponents=(alpha, beta) the integrand is
    func(x) * (x - a)**alpha * (b - x)**beta, handled by QUADPACK's algebraic
    endpoint rule so Beta-type singularities cost nothing extra.
    """
    if b <= a:
        return 0.0

    default_tolerance, max_subdivisions = get_limits()
    tolerance = default_tolerance if tolerance is None else tolerance
    limit = min(_INITIAL_SUBDIVISIONS, max_subdivisions)

    while True:
        kwargs = dict(epsabs=tolerance, epsrel=tolerance, limit=limit, full_output=1)
        if weight_exponents is not None:
            kwargs.update(weight='alg', wvar=tuple(weight_exponents))

        result = integrate.quad(func, a, b, **kwargs)
        value, abserr = float(result[0]), float(result[1])
        if len(result) < 4:
            return value

        message = str(result[3])
        if 'maximum number of subdivisions' in message:
            if limit >= max_subdivisions:
                raise NumericalCapExceeded(
                    f"Quadrature on [{a}, {b}] needs more than {max_subdivisions} subdivisions"
                )
            limit = min(limit * 10, max_subdivisions)
            logger.debug(f"Escalating quadrature on [{a}, {b}] to {limit} subdivisions")
            continue

        if abserr <= _ACCEPTABLE_EARLY_STOP * max(1.0, abs(value)):
            logger.debug(f"Quadrature on [{a}, {b}] stopped at error {abserr:.2e}: {message}")
            return value

        raise NumericalCapExceeded(f"Quadrature on [{a}, {b}] failed: {message}")
