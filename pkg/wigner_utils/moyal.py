import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.signal import convolve
from scipy.special import comb

from .gaussian_engine import BlockGaussian, CoefficientFunctional, DiracDelta
from .log_scalar import LogScalar
from .mode_space import FieldFunction, check_compatible
from .states import WignerState, coherent_wigner, displacement_wigner

logger = logging.getLogger(__name__)

# exp(2 alpha_1*⋄alpha_2 - 2 alpha_2*⋄alpha_1) over (alpha, alpha_1, alpha_2)
STAR_KERNEL = [
    [0, 0, 0],
    [0, 0, -2],
    [0, 2, 0],
]
# exp(alpha*⋄alpha_b - alpha_a*⋄alpha_b - alpha_b*⋄alpha + alpha_b*⋄alpha_a) over (alpha, alpha_a, alpha_b)
STAR3_KERNEL = [
    [0, 0, -1],
    [0, 0, 1],
    [1, -1, 0],
]


@dataclass(frozen=True, eq=False)
class StarResult:
    """
    Wigner functional of an operator product, with the inputs and the blocks
    that were integrated to produce it
    """

    representation: CoefficientFunctional
    operation: str
    inputs: Tuple[str, ...]
    integrated_blocks: Tuple[int, ...]

    @property
    def grid(self):
        return self.representation.grid

    def evaluate(self, alpha: FieldFunction) -> LogScalar:
        return self.representation.evaluate(alpha)

    def trace(self) -> LogScalar:
        return self.representation.integrate(strict=True)

    def as_state(self) -> WignerState:
        return WignerState(self.representation, "custom", {"product": "·".join(self.inputs)}, False)


def _embedded(state: WignerState, small_map) -> CoefficientFunctional:
    return state.representation.mapped(lambda g: g.substitute(small_map=[small_map]))


def _reduce(representation: CoefficientFunctional, kernel, prefactor: LogScalar, drop) -> CoefficientFunctional:
    coupling = BlockGaussian.coupling(representation.grid, kernel).scaled(prefactor)
    result = representation.functional.multiply(coupling).integrate_blocks(drop)
    if isinstance(result, DiracDelta):
        raise BlockGaussian.DivergenceException(
            f"Product integral over blocks {tuple(drop)} is a Dirac delta", blocks=tuple(drop)
        )
    return CoefficientFunctional(result, representation.terms)


def star(first: WignerState, second: WignerState) -> StarResult:
    """
    W_AB[alpha] = 2^(2N) integral of W_A[alpha - alpha_1] W_B[alpha - alpha_2]
    exp(2 alpha_1*⋄alpha_2 - 2 alpha_2*⋄alpha_1) over D°[alpha_1, alpha_2]
    """

    check_compatible(first.grid, second.grid)
    logger.info(f">> Star product {first.description} * {second.description}")
    product = _embedded(first, [1, -1, 0]).multiply(_embedded(second, [1, 0, -1]))
    prefactor = LogScalar.omega(first.grid.mode_count, two=2)
    representation = _reduce(product, STAR_KERNEL, prefactor, [1, 2])
    return StarResult(representation, "star", (first.description, second.description), (1, 2))


def _star3_integrand(first: WignerState, second: WignerState, third: WignerState) -> CoefficientFunctional:
    check_compatible(first.grid, second.grid, third.grid)
    half = Fraction(1, 2)
    return (
        _embedded(first, [half, half, half])
        .multiply(_embedded(second, [0, 1, 0]))
        .multiply(_embedded(third, [half, half, -half]))
    )


def star3(first: WignerState, second: WignerState, third: WignerState) -> StarResult:
    """
    W_ABC[alpha] = integral of exp((alpha - alpha_a)*⋄alpha_b - alpha_b*⋄(alpha - alpha_a))
    W_A[(alpha_a + alpha_b + alpha)/2] W_B[alpha_a] W_C[(alpha_a - alpha_b + alpha)/2] over D°[alpha_a, alpha_b]
    """

    logger.info(f">> Triple product {first.description} * {second.description} * {third.description}")
    integrand = _star3_integrand(first, second, third)
    representation = _reduce(integrand, STAR3_KERNEL, LogScalar.one(first.grid.mode_count), [1, 2])
    return StarResult(
        representation, "star3", (first.description, second.description, third.description), (1, 2)
    )


def displace_state(state: WignerState, alpha0: FieldFunction) -> WignerState:
    """
    W[alpha - alpha0], the Wigner functional of D(alpha0) rho D(alpha0)^dagger
    """

    check_compatible(state.grid, alpha0.grid)
    if state.kind == "coherent":
        return coherent_wigner(state.parameters["alpha0"] + alpha0)
    shift = -alpha0.balanced
    representation = state.representation.mapped(lambda g: g.substitute(small_map=[[1]], shift=shift))
    closed_form = None
    if state.closed_form is not None:
        inner = state.closed_form
        closed_form = lambda alpha: inner(alpha - alpha0)  # noqa: E731
    parameters = dict(state.parameters)
    parameters["displaced_by"] = alpha0
    return WignerState(representation, "custom", parameters, state.is_density, closed_form)


def displace_by_delta(state: WignerState, alpha0: FieldFunction) -> WignerState:
    """
    Displacement through the triple product with D(alpha0) and D(alpha0)^dagger,
    integrating alpha_b first: that integral is the Dirac delta
    delta[alpha - alpha_a - alpha0], which is then resolved over alpha_a
    """

    check_compatible(state.grid, alpha0.grid)
    integrand = _star3_integrand(displacement_wigner(alpha0), state, displacement_wigner(-alpha0))
    coupling = BlockGaussian.coupling(state.grid, STAR3_KERNEL)
    delta = integrand.functional.multiply(coupling).integrate_blocks([2])
    if not isinstance(delta, DiracDelta):
        raise BlockGaussian.DivergenceException("The alpha_b integral of the displacement product is not a Dirac delta")
    logger.debug(f">> Resolving delta with offset {delta.offset}")
    functional = delta.integrate_out([1])
    representation = CoefficientFunctional(functional, integrand.terms)
    parameters = dict(state.parameters)
    parameters["displaced_by"] = alpha0
    return WignerState(representation, "custom", parameters, state.is_density)


def star_series(first: np.ndarray, second: np.ndarray, order: int) -> np.ndarray:
    """
    Bidifferential star product of two single-mode polynomials sum c[j, k] alpha^j alpha*^k,
    truncated after `order` derivative pairs. For polynomials the series terminates,
    so a large enough order is exact.
    """

    first = np.atleast_2d(np.asarray(first, dtype=complex))
    second = np.atleast_2d(np.asarray(second, dtype=complex))
    shape = (first.shape[0] + second.shape[0] - 1, first.shape[1] + second.shape[1] - 1)
    result = np.zeros(shape, dtype=complex)
    for n in range(order + 1):
        scale = 0.5 ** n / math.factorial(n)
        for k in range(n + 1):
            left = _derivative(first, k, n - k)
            right = _derivative(second, n - k, k)
            term = convolve(left, right, mode="full", method="direct")
            weight = scale * comb(n, k, exact=True) * (-1) ** (n - k)
            result[: term.shape[0], : term.shape[1]] += weight * term
    return result


def _derivative(coefficients: np.ndarray, analytic: int, conjugate: int) -> np.ndarray:
    """
    d^analytic/d alpha d^conjugate/d alpha* of a coefficient array over (alpha, alpha*)
    """

    result = coefficients
    if analytic:
        result = P.polyder(result, analytic, axis=0)
    if conjugate:
        result = P.polyder(result, conjugate, axis=1)
    return np.atleast_2d(result)


def evaluate_series(coefficients: np.ndarray, alpha: complex) -> complex:
    return complex(P.polyval2d(alpha, np.conj(alpha), coefficients))
