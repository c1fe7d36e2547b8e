import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Union

import numpy as np
from scipy.special import eval_laguerre

from .gaussian_engine import (
    BlockGaussian,
    CoefficientFunctional,
    DiracDelta,
    GaussianFunctional,
    GeneratingFunctional,
    RealGaussianForm,
    as_coefficient_functional,
    to_real_form,
)
from .generating import MAX_EXTRACTION_ORDER, ParameterPolynomial, fresh_name
from .kernel_algebra import Kernel, det, identity_kernel, zero_kernel
from .log_scalar import LogScalar
from .mode_space import FieldFunction, ModeGrid, check_compatible, inner_product, norm_sq

logger = logging.getLogger(__name__)

STATE_KINDS = ["coherent", "fock", "number_op", "displacement", "custom"]
MAX_MOMENT_ORDER = 4
SPECTRUM_TOLERANCE = 1e-12

# Kernel of the coherent-state-assisted integrand over the blocks (alpha, alpha_1, alpha_2)
ASSISTED_KERNEL = [
    [2, -2, 0],
    [0, Fraction(1, 2), 0],
    [-2, 1, Fraction(1, 2)],
]
# exp(eta*⋄alpha - alpha*⋄eta) over (eta, alpha) and exp(alpha*⋄eta - eta*⋄alpha) over (alpha, eta)
FOURIER_KERNEL = [[0, -1], [1, 0]]


@dataclass(frozen=True, eq=False)
class WignerState:
    """
    Wigner functional of an operator, held as a (generating) Gaussian with an
    extraction recipe, plus its kind tag.

    `closed_form`, when set, is the pointwise formula used by evaluate(); both
    routes describe the same functional.
    """

    representation: CoefficientFunctional
    kind: str = "custom"
    parameters: Mapping = field(default_factory=dict)
    is_density: bool = True
    closed_form: Optional[Callable[[FieldFunction], LogScalar]] = field(default=None, repr=False)

    class UnsupportedStateException(Exception):
        """
        Exception raised when a state has no representation suitable for an operation
        """

        pass

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise ValueError(f"Unknown state kind {self.kind}. Expected one of {STATE_KINDS}")
        representation = as_coefficient_functional(self.representation)
        if representation.functional.blocks != 1:
            raise ValueError("A Wigner state is a functional over a single copy of the grid")
        object.__setattr__(self, "representation", representation)
        object.__setattr__(self, "parameters", dict(self.parameters))

    @property
    def grid(self) -> ModeGrid:
        return self.representation.grid

    @property
    def description(self) -> str:
        details = ", ".join(f"{key}={value}" for key, value in self.parameters.items() if not isinstance(value, FieldFunction))
        return f"{self.kind}({details})" if details else self.kind

    def evaluate(self, alpha: FieldFunction) -> LogScalar:
        if self.closed_form is not None:
            check_compatible(self.grid, alpha.grid)
            return self.closed_form(alpha)
        return self.representation.evaluate(alpha)

    def evaluate_functional(self, alpha: FieldFunction) -> LogScalar:
        """
        Evaluates through the Gaussian representation, ignoring any closed form
        """

        return self.representation.evaluate(alpha)

    def trace_norm(self) -> LogScalar:
        return trace_norm(self)


def trace_norm(state: WignerState) -> LogScalar:
    """
    Integral of the Wigner functional over D°[alpha], the trace of the operator
    """

    return state.representation.integrate(strict=True)


def coherent_wigner(alpha0: FieldFunction) -> WignerState:
    grid = alpha0.grid
    n = grid.mode_count
    functional = GaussianFunctional.create(
        identity_kernel(grid, 2),
        xi=-2 * alpha0,
        zeta=-2 * alpha0,
        c=-2 * norm_sq(alpha0),
        prefactor=LogScalar.omega(n, two=1),
    )

    def closed_form(alpha: FieldFunction) -> LogScalar:
        return LogScalar.omega(n, two=1) * LogScalar.exp(-2 * norm_sq(alpha - alpha0), n)

    return WignerState(functional, "coherent", {"alpha0": alpha0}, True, closed_form)


def vacuum_wigner(grid: ModeGrid) -> WignerState:
    return coherent_wigner(FieldFunction.zeros(grid))


def validate_spectrum(spectrum: FieldFunction, tol: float = SPECTRUM_TOLERANCE):
    measured = norm_sq(spectrum)
    if abs(measured - 1.0) > tol:
        raise FieldFunction.FieldException(f"Spectrum must be normalized, measured norm_sq = {measured!r}")


def fock_generating(spectrum: FieldFunction, tol: float = SPECTRUM_TOLERANCE) -> GeneratingFunctional:
    """
    Generating functional 2^N exp(-2|alpha|^2 + 2 eta1 alpha*⋄F + 2 eta2 F*⋄alpha - eta1 eta2)
    """

    validate_spectrum(spectrum, tol)
    grid = spectrum.grid
    constant = ParameterPolynomial(("eta1", "eta2"), 0j, None, [[0, -0.5], [-0.5, 0]])
    return GeneratingFunctional.create_generating(
        identity_kernel(grid, 2),
        constant,
        xi_terms={"eta1": -2 * spectrum},
        zeta_terms={"eta2": -2 * spectrum},
        prefactor=LogScalar.omega(grid.mode_count, two=1),
    )


def fock_laguerre(n: int, spectrum: FieldFunction, alpha: FieldFunction) -> LogScalar:
    """
    (-1)^n 2^N L_n(4|<F, alpha>|^2) exp(-2|alpha|^2)
    """

    check_compatible(spectrum.grid, alpha.grid)
    modes = alpha.grid.mode_count
    overlap = abs(inner_product(spectrum, alpha)) ** 2
    polynomial = (-1) ** n * eval_laguerre(n, 4 * overlap)
    return LogScalar.omega(modes, two=1) * LogScalar.from_complex(polynomial, modes) * LogScalar.exp(-2 * norm_sq(alpha), modes)


def fock_wigner(n: int, spectrum: FieldFunction, tol: float = SPECTRUM_TOLERANCE) -> WignerState:
    if n < 0 or int(n) != n:
        raise ValueError(f"Photon number must be a non-negative integer. Got {n}")
    if n > MAX_EXTRACTION_ORDER:
        raise BlockGaussian.UnsupportedOrderException(
            f"Fock states above n={MAX_EXTRACTION_ORDER} are beyond the supported extraction order"
        )
    generating = fock_generating(spectrum, tol)
    representation = CoefficientFunctional(generating, ((1 / math.factorial(n), {"eta1": n, "eta2": n}),))
    return WignerState(
        representation,
        "fock",
        {"n": n, "spectrum": spectrum},
        True,
        lambda alpha: fock_laguerre(n, spectrum, alpha),
    )


def _mode_sources(grid: ModeGrid, analytic: str, conjugate: str):
    """
    Parameter names s_i (multiplying alpha~_i*) and u_i (multiplying alpha~_i)
    """

    n = grid.mode_count
    conjugate_names = tuple(f"{conjugate}{i}" for i in range(n))
    analytic_names = tuple(f"{analytic}{i}" for i in range(n))
    return conjugate_names, analytic_names


def number_polynomial(alpha: FieldFunction) -> LogScalar:
    """
    alpha*⋄alpha - N/2
    """

    n = alpha.grid.mode_count
    return LogScalar.from_complex(norm_sq(alpha) - n / 2, n)


def number_wigner(grid: ModeGrid) -> WignerState:
    """
    Number operator alpha*⋄alpha - N/2, represented as sum_i d_s_i d_u_i of
    exp(s_i alpha~_i* + u_i alpha~_i) minus N/2
    """

    n = grid.mode_count
    s_names, u_names = _mode_sources(grid, "u", "s")
    identity = np.eye(n, dtype=complex)
    zeros = np.zeros((n, n), dtype=complex)
    functional = BlockGaussian.unit(grid).replace(
        constant=ParameterPolynomial(s_names + u_names),
        xi_terms=np.vstack([-identity, zeros]),
        row_terms=np.vstack([zeros, -identity]),
    )
    terms = tuple((1.0, {s: 1, u: 1}) for s, u in zip(s_names, u_names)) + ((-n / 2, ()),)
    return WignerState(CoefficientFunctional(functional, terms), "number_op", {}, False, number_polynomial)


def number_generating(grid: ModeGrid, J: float) -> GaussianFunctional:
    """
    Closed form of the Wigner functional of J^n: (2/(1+J))^N exp(-2(1-J)/(1+J)|alpha|^2)
    """

    if J == -1:
        raise ValueError("J = -1 is a pole of the number-operator generating functional")
    n = grid.mode_count
    return GaussianFunctional.create(
        identity_kernel(grid, 2 * (1 - J) / (1 + J)),
        prefactor=LogScalar.power_of(2 / (1 + J), n),
    )


def displacement_wigner(alpha0: FieldFunction) -> WignerState:
    """
    exp(alpha*⋄alpha0 - alpha0*⋄alpha); unit modulus everywhere
    """

    grid = alpha0.grid
    functional = GaussianFunctional.create(zero_kernel(grid), xi=-alpha0, zeta=alpha0)

    def closed_form(alpha: FieldFunction) -> LogScalar:
        return LogScalar.exp(inner_product(alpha, alpha0) - inner_product(alpha0, alpha), grid.mode_count)

    return WignerState(functional, "displacement", {"alpha0": alpha0}, False, closed_form)


def identity_wigner(grid: ModeGrid) -> WignerState:
    return WignerState(BlockGaussian.unit(grid), "custom", {"operator": "identity"}, False)


def gaussian_state(kernel: Kernel, center: Optional[FieldFunction] = None, normalized: bool = True) -> WignerState:
    """
    det{K} exp(-(alpha - beta)*⋄K⋄(alpha - beta)), a unit-trace Gaussian centred at beta
    """

    grid = kernel.grid
    center = FieldFunction.zeros(grid) if center is None else center
    check_compatible(grid, center.grid)
    beta = center.balanced
    K = kernel.balanced
    prefactor = det(kernel) if normalized else LogScalar.one(grid.mode_count)
    functional = GaussianFunctional.create(kernel, prefactor=prefactor).replace(
        xi=-K @ beta,
        row=-np.conj(beta) @ K,
        constant=ParameterPolynomial.constant_only(-np.conj(beta) @ K @ beta),
    )
    return WignerState(functional, "custom", {"center": center}, kernel.is_hermitian())


def quadrature_wigner(grid: ModeGrid, mode: int, which: str = "q") -> WignerState:
    """
    Wigner functional of the raw quadrature q_mode or p_mode, a linear form in alpha
    """

    if which not in ("q", "p"):
        raise ValueError(f"Quadrature must be 'q' or 'p'. Got {which}")
    n = grid.mode_count
    unit = np.zeros(n, dtype=complex)
    unit[mode] = 1.0
    # q~ = (a + a*)/sqrt(2), p~ = -i (a - a*)/sqrt(2)
    conjugate_coefficient = 1 / math.sqrt(2) if which == "q" else 1j / math.sqrt(2)
    analytic_coefficient = 1 / math.sqrt(2) if which == "q" else -1j / math.sqrt(2)
    functional = BlockGaussian.unit(grid).replace(
        constant=ParameterPolynomial(("t",)),
        xi_terms=[-conjugate_coefficient * unit],
        row_terms=[-analytic_coefficient * unit],
    )
    weight = 1 / math.sqrt(grid.weights[mode])
    return WignerState(
        CoefficientFunctional(functional, ((weight, {"t": 1}),)), "custom", {"quadrature": f"{which}{mode}"}, False
    )


def polynomial_wigner(grid: ModeGrid, coefficients: np.ndarray, mode: int = 0) -> WignerState:
    """
    Wigner functional sum_jk c[j, k] alpha~^j alpha~*^k in the balanced amplitude of one mode
    """

    coefficients = np.asarray(coefficients, dtype=complex)
    n = grid.mode_count
    unit = np.zeros(n, dtype=complex)
    unit[mode] = 1.0
    functional = BlockGaussian.unit(grid).replace(
        constant=ParameterPolynomial(("a", "b")),
        xi_terms=[np.zeros(n), -unit],
        row_terms=[-unit, np.zeros(n)],
    )
    terms = tuple(
        (coefficients[j, k], {"a": j, "b": k})
        for j in range(coefficients.shape[0])
        for k in range(coefficients.shape[1])
        if coefficients[j, k] != 0
    )
    return WignerState(CoefficientFunctional(functional, terms or ((0.0, ()),)), "custom", {"polynomial": True}, False)


def coherent_overlap(alpha: FieldFunction, beta: FieldFunction) -> LogScalar:
    """
    <alpha_F|beta_G> = exp(-|alpha|^2/2 - |beta|^2/2 + alpha*⋄beta)
    """

    check_compatible(alpha.grid, beta.grid)
    exponent = -0.5 * norm_sq(alpha) - 0.5 * norm_sq(beta) + inner_product(alpha, beta)
    return LogScalar.exp(exponent, alpha.grid.mode_count)


def fock_overlap(m: int, first: FieldFunction, n: int, second: FieldFunction) -> complex:
    """
    <m_F|n_G> = delta_mn <F, G>^n
    """

    if m != n:
        return 0j
    return inner_product(first, second) ** n


def quadrature_overlap(q: FieldFunction, alpha0: FieldFunction) -> LogScalar:
    """
    <q|alpha_F> = pi^(-N/4) exp(-q⋄q/2 + sqrt(2) q⋄alpha0 - alpha0⋄alpha0/2 - |alpha0|^2/2)
    """

    check_compatible(q.grid, alpha0.grid)
    if not q.is_real:
        raise FieldFunction.FieldException("Quadrature eigenvalues must be real")
    q_b, a_b = q.balanced.real, alpha0.balanced
    exponent = -0.5 * q_b @ q_b + math.sqrt(2) * q_b @ a_b - 0.5 * a_b @ a_b - 0.5 * norm_sq(alpha0)
    n = q.grid.mode_count
    return LogScalar.omega(n, pi=Fraction(-1, 4)) * LogScalar.exp(exponent, n)


def vacuum_overlap(grid: ModeGrid, J=1) -> BlockGaussian:
    """
    <alpha_1|J^n|alpha_2> = exp(-|alpha_1|^2/2 - |alpha_2|^2/2 + J alpha_1*⋄alpha_2) over (alpha_1, alpha_2)
    """

    return BlockGaussian.coupling(grid, [[Fraction(1, 2), -J], [0, Fraction(1, 2)]])


def fock_overlap_generating(spectrum: FieldFunction, tol: float = SPECTRUM_TOLERANCE) -> BlockGaussian:
    """
    exp(-|alpha_1|^2/2 - |alpha_2|^2/2 + eta1 alpha_1*⋄F + eta2 F*⋄alpha_2); the
    (1/n!) d^n_eta1 d^n_eta2 coefficient is <alpha_1|n_F><n_F|alpha_2>
    """

    validate_spectrum(spectrum, tol)
    grid = spectrum.grid
    n = grid.mode_count
    zeros = np.zeros(n, dtype=complex)
    return vacuum_overlap(grid, 0).replace(
        constant=ParameterPolynomial(("eta1", "eta2")),
        xi_terms=[np.concatenate([-spectrum.balanced, zeros]), np.zeros(2 * n)],
        row_terms=[np.zeros(2 * n), np.concatenate([zeros, -np.conj(spectrum.balanced)])],
    )


def number_overlap_derivative(grid: ModeGrid) -> CoefficientFunctional:
    """
    d/dJ <alpha_1|J^n|alpha_2> at J = 1, i.e. (alpha_1*⋄alpha_2) <alpha_1|alpha_2>
    """

    n = grid.mode_count
    s_names, u_names = _mode_sources(grid, "u", "s")
    identity = np.eye(n, dtype=complex)
    zeros = np.zeros((n, n), dtype=complex)
    functional = vacuum_overlap(grid, 1).replace(
        constant=ParameterPolynomial(s_names + u_names),
        xi_terms=np.vstack([np.hstack([-identity, zeros]), np.zeros((n, 2 * n))]),
        row_terms=np.vstack([np.zeros((n, 2 * n)), np.hstack([zeros, -identity])]),
    )
    terms = tuple((1.0, {s: 1, u: 1}) for s, u in zip(s_names, u_names))
    return CoefficientFunctional(functional, terms)


def displacement_overlap(alpha0: FieldFunction) -> BlockGaussian:
    """
    <alpha_1|D(alpha0)|alpha_2>
    """

    grid = alpha0.grid
    a = alpha0.balanced
    zeros = np.zeros(grid.mode_count, dtype=complex)
    return vacuum_overlap(grid, 1).replace(
        xi=np.concatenate([-a, zeros]),
        row=np.concatenate([zeros, np.conj(a)]),
        constant=ParameterPolynomial.constant_only(-0.5 * norm_sq(alpha0)),
    )


def coherent_assisted(overlap) -> CoefficientFunctional:
    """
    Wigner functional of an operator A from its coherent-state matrix elements
    <alpha_1|A|alpha_2> given as a two-block (generating) Gaussian
    """

    overlap = as_coefficient_functional(overlap)
    if overlap.functional.blocks != 2:
        raise ValueError("Coherent-state matrix elements are functionals of two blocks")
    grid = overlap.grid
    base = BlockGaussian.coupling(grid, ASSISTED_KERNEL).scaled(LogScalar.omega(grid.mode_count, two=1))
    logger.debug(">> Assembling coherent-state-assisted integrand")
    return overlap.mapped(
        lambda g: g.substitute(small_map=[[0, 1, 0], [0, 0, 1]]).multiply(base).integrate_blocks([1, 2])
    )


def number_from_generating(grid: ModeGrid) -> CoefficientFunctional:
    """
    Number operator through the J-derivative of the coherent-assisted J^n family
    """

    return coherent_assisted(number_overlap_derivative(grid))


def expectation(rho: WignerState, observable: WignerState) -> LogScalar:
    """
    tr{rho O} as the integral of W_rho W_O over D°[alpha]
    """

    check_compatible(rho.grid, observable.grid)
    return rho.representation.multiply(observable.representation).integrate(strict=True)


@dataclass(frozen=True, eq=False)
class CharacteristicFunctional:
    """
    chi[xi, zeta] as a functional of eta = (zeta + i xi)/sqrt(2)
    """

    representation: Union[CoefficientFunctional, DiracDelta]

    @property
    def is_distributional(self) -> bool:
        return isinstance(self.representation, DiracDelta)

    @property
    def grid(self) -> ModeGrid:
        if self.is_distributional:
            return self.representation.weight.grid
        return self.representation.grid

    def _functional(self) -> CoefficientFunctional:
        if self.is_distributional:
            raise WignerState.UnsupportedStateException("The characteristic functional is a Dirac delta")
        return self.representation

    def at_eta(self, eta: FieldFunction) -> LogScalar:
        return self._functional().evaluate(eta)

    def value(self, xi: FieldFunction, zeta: FieldFunction) -> LogScalar:
        if not (xi.is_real and zeta.is_real):
            raise FieldFunction.FieldException("Characteristic sources must be real")
        return self.at_eta((zeta + 1j * xi) / math.sqrt(2))

    def multiply(self, functional: BlockGaussian) -> "CharacteristicFunctional":
        return CharacteristicFunctional(self._functional().multiply(as_coefficient_functional(functional)))


def characteristic(state: WignerState) -> CharacteristicFunctional:
    """
    chi(eta) = integral of exp(eta*⋄alpha - alpha*⋄eta) W[alpha] over D°[alpha]
    """

    grid = state.grid
    coupling = BlockGaussian.coupling(grid, FOURIER_KERNEL)
    representation = state.representation
    functional = representation.functional.substitute(small_map=[[0, 1]]).multiply(coupling).integrate_blocks([1])
    if isinstance(functional, DiracDelta):
        if not representation.is_plain:
            raise WignerState.UnsupportedStateException(
                f"Characteristic functional of {state.description} is a derivative of a Dirac delta"
            )
        return CharacteristicFunctional(functional)
    return CharacteristicFunctional(CoefficientFunctional(functional, representation.terms))


def inverse_characteristic(chi: CharacteristicFunctional, kind: str = "custom", is_density: bool = True):
    """
    W[alpha] = integral of exp(alpha*⋄eta - eta*⋄alpha) chi(eta) over D°[eta]; a
    pure-phase chi gives a DiracDelta
    """

    representation = chi._functional()
    coupling = BlockGaussian.coupling(chi.grid, FOURIER_KERNEL)
    functional = representation.functional.substitute(small_map=[[0, 1]]).multiply(coupling).integrate_blocks([1])
    if isinstance(functional, DiracDelta):
        return functional
    return WignerState(CoefficientFunctional(functional, representation.terms), kind, {}, is_density)


def moments(chi: CharacteristicFunctional, m: int, n: int) -> np.ndarray:
    """
    Symmetrized moments <q_i1..q_im p_j1..p_jn> in raw coordinates, as a tensor
    with m q-indices followed by n p-indices
    """

    if m < 0 or n < 0:
        raise ValueError("Moment orders must be non-negative")
    if m + n > MAX_MOMENT_ORDER:
        raise BlockGaussian.UnsupportedOrderException(
            f"Moments of total order {m + n} exceed the supported order {MAX_MOMENT_ORDER}"
        )
    representation = chi._functional()
    functional = representation.functional
    grid = chi.grid
    modes = grid.mode_count
    root = grid.sqrt_weights / math.sqrt(2)
    names = []
    for a in range(m + n):
        names.append(fresh_name(f"_d{a}", set(functional.parameters) | set(names)))
    extra = tuple((name, 1) for name in names)
    phase = (1j) ** m * (-1j) ** n

    result = np.zeros((modes,) * (m + n), dtype=complex)
    origin = np.zeros(modes, dtype=complex)
    for index in itertools.product(range(modes), repeat=m + n):
        directions = np.zeros((m + n, modes), dtype=complex)
        for slot, mode in enumerate(index):
            # d eta~/d xi_i = i sqrt(w_i/2), d eta~/d zeta_j = sqrt(w_j/2)
            directions[slot, mode] = (1j if slot < m else 1.0) * root[mode]
        line = functional.evaluate_line(origin, directions, names)
        value = LogScalar.sum(line.derivative(orders + extra) * weight for weight, orders in representation.terms)
        scale = phase / np.prod([grid.weights[mode] for mode in index])
        result[index] = value.value() * scale
    return result


@dataclass(frozen=True, eq=False)
class MarginalDistribution:
    """
    Probability functional over q (or p) obtained by integrating out the other quadrature
    """

    form: RealGaussianForm
    terms: tuple
    basis: str

    @property
    def grid(self) -> ModeGrid:
        return self.form.grid

    def evaluate(self, x: FieldFunction) -> LogScalar:
        check_compatible(self.grid, x.grid)
        if not x.is_real:
            raise FieldFunction.FieldException("Marginal arguments must be real")
        scalar = self.form.evaluate(x.balanced.real)
        return LogScalar.sum(scalar.derivative(orders) * weight for weight, orders in self.terms)

    def total_mass(self) -> LogScalar:
        scalar = self.form.integrate_blocks([0], strict=True)
        return LogScalar.sum(scalar.derivative(orders) * weight for weight, orders in self.terms)


def _marginal(state: WignerState, basis: str) -> MarginalDistribution:
    real = to_real_form(state.representation.functional)
    drop = 1 if basis == "q" else 0
    form = real.integrate_blocks([drop], strict=True)
    if isinstance(form, DiracDelta):
        raise WignerState.UnsupportedStateException(f"The {basis} marginal of {state.description} is a Dirac delta")
    return MarginalDistribution(form, state.representation.terms, basis)


def marginal_q(state: WignerState) -> MarginalDistribution:
    """
    rho[q, q] = integral of W over D°[p]
    """

    return _marginal(state, "q")


def marginal_p(state: WignerState) -> MarginalDistribution:
    """
    rho[p, p] = integral of W over D[q]
    """

    return _marginal(state, "p")


def weyl_density(state: WignerState, x: FieldFunction, x_prime: FieldFunction, basis: str = "q") -> LogScalar:
    """
    Density matrix element rho[x, x'] in the q basis (or p basis) from the Wigner functional
    """

    if basis not in ("q", "p"):
        raise ValueError(f"Basis must be 'q' or 'p'. Got {basis}")
    check_compatible(state.grid, x.grid, x_prime.grid)
    if not (x.is_real and x_prime.is_real):
        raise FieldFunction.FieldException("Density matrix arguments must be real")
    n = state.grid.mode_count
    identity, zeros = np.eye(n), np.zeros((n, n))
    real = to_real_form(state.representation.functional)

    extra = np.zeros((3 * n, 3 * n), dtype=complex)
    if basis == "q":
        # new blocks (q, q', p): old q = (q + q')/2; adds i p⋄(q - q')
        full_map = np.block([[0.5 * identity, 0.5 * identity, zeros], [zeros, zeros, identity]])
        kinds = ("q", "q", "p")
        coefficient = -0.5j
    else:
        # new blocks (p, p', q): old p = (p + p')/2; adds -i q⋄(p - p')
        full_map = np.block([[zeros, zeros, identity], [0.5 * identity, 0.5 * identity, zeros]])
        kinds = ("p", "p", "q")
        coefficient = 0.5j
    extra[2 * n:, :n] = coefficient * identity
    extra[2 * n:, n:2 * n] = -coefficient * identity
    extra = extra + extra.T

    form = real.substitute(full_map, kinds).add_exponent(matrix=extra).integrate_blocks([2], strict=False)
    point = np.concatenate([x.balanced.real, x_prime.balanced.real])
    scalar = form.evaluate(point)
    return LogScalar.sum(scalar.derivative(orders) * weight for weight, orders in state.representation.terms)


@dataclass(frozen=True)
class SOrderParameter:
    """
    s = 1 is the P distribution, s = 0 the Wigner functional, s = -1 the Q distribution
    """

    s: float

    def __post_init__(self):
        if not -1.0 <= self.s <= 1.0:
            raise ValueError(f"The ordering parameter s must lie in [-1, 1]. Got {self.s}")


@dataclass(frozen=True)
class DistributionalResult:
    """
    Tag returned when a quasi-distribution exists only as a distribution that
    has no representation here
    """

    state: str
    s: float
    reason: str
    is_distributional: bool = True


def s_transform(state: WignerState, s) -> Union[WignerState, DiracDelta, DistributionalResult]:
    """
    s-ordered quasi-distribution: chi is multiplied by exp(s|eta|^2/2) and
    transformed back. s = -1 gives the Husimi Q functional <alpha|rho|alpha>.
    """

    order = s if isinstance(s, SOrderParameter) else SOrderParameter(float(s))
    if order.s == 0:
        return state
    logger.info(f">> s-ordering {state.description} with s={order.s}")
    chi = characteristic(state)
    if chi.is_distributional:
        return DistributionalResult(state.description, order.s, "characteristic functional is a Dirac delta")
    smoothing = BlockGaussian.coupling(state.grid, [[-Fraction(order.s) / 2]])
    try:
        return inverse_characteristic(chi.multiply(smoothing), "custom", state.is_density)
    except BlockGaussian.DivergenceException as e:
        logger.info(f">> s={order.s} distribution of {state.description} is distributional: {e}")
        return DistributionalResult(state.description, order.s, str(e))


def husimi_q(state: WignerState) -> WignerState:
    return s_transform(state, -1.0)
