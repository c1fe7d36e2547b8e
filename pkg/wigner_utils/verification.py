"""
Named identity and oracle checks run by `wigner-utils verify`.

Every suite draws its random inputs from a generator seeded by the context seed
and the suite name, so repeated runs report identical errors.
"""
import logging
import math
import zlib
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
from scipy.integrate import dblquad

from . import fock_oracle
from .gaussian_engine import BlockGaussian, GaussianFunctional, integrate
from .kernel_algebra import Kernel, det, identity_kernel, kernel_log, trace
from .log_scalar import LogScalar
from .mode_space import FieldFunction, ModeGrid, norm_sq
from .moyal import displace_by_delta, displace_state, star, star3
from .states import (
    WignerState,
    characteristic,
    coherent_wigner,
    displacement_wigner,
    expectation,
    fock_laguerre,
    fock_wigner,
    gaussian_state,
    inverse_characteristic,
    marginal_q,
    moments,
    number_from_generating,
    number_polynomial,
    number_wigner,
    quadrature_overlap,
    s_transform,
    trace_norm,
    vacuum_wigner,
    weyl_density,
)

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240917
LATTICE_EXTENT = 2.0
LATTICE_STEPS = 9

DIVERGENCE_EXCEPTIONS = (
    BlockGaussian.DivergenceException,
    Kernel.SingularKernelException,
    Kernel.BranchCutException,
    fock_oracle.TruncatedState.TruncationException,
)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    check: str
    error: float
    tolerance: float
    samples: int = 1
    flag: str = ""
    note: str = ""

    @property
    def passed(self) -> bool:
        return not self.flag and math.isfinite(self.error) and self.error <= self.tolerance

    @property
    def diverged(self) -> bool:
        return self.flag == "divergence"


@dataclass
class VerificationContext:
    """
    Seed, tolerance overrides and oracle settings shared by all suites
    """

    seed: int = DEFAULT_SEED
    tolerances: Mapping[str, float] = field(default_factory=dict)
    oracle: bool = False
    cutoff: int = fock_oracle.MAX_CUTOFF

    def rng(self, suite: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, zlib.crc32(suite.encode())])

    def tolerance(self, check: str, builtin: float) -> float:
        if check in self.tolerances:
            return float(self.tolerances[check])
        return float(self.tolerances.get("default", builtin))


class _Recorder:
    def __init__(self, suite: str, context: VerificationContext):
        self.suite = suite
        self.context = context
        self.results: List[CheckResult] = []

    def record(self, check: str, errors: Sequence[float], builtin: float, note: str = ""):
        errors = [float(e) for e in errors]
        worst = max(errors) if errors else 0.0
        result = CheckResult(self.suite, check, worst, self.context.tolerance(check, builtin), len(errors), "", note)
        logger.debug(f">> {self.suite}/{check}: max error {worst:.3e} over {len(errors)} samples")
        self.results.append(result)


def relative_error(value, reference, scale: Optional[float] = None) -> float:
    """
    |value - reference| over max(|reference|, scale)
    """

    value = complex(value.value() if isinstance(value, LogScalar) else value)
    reference = complex(reference.value() if isinstance(reference, LogScalar) else reference)
    denominator = max(abs(reference), scale or 0.0)
    if denominator == 0:
        return abs(value - reference)
    return abs(value - reference) / denominator


def random_grid(rng: np.random.Generator, mode_count: int) -> ModeGrid:
    return ModeGrid.random(mode_count, rng)


def random_field(grid: ModeGrid, rng: np.random.Generator, scale: float = 0.5) -> FieldFunction:
    return FieldFunction.from_balanced(grid, scale * (rng.normal(size=grid.mode_count) + 1j * rng.normal(size=grid.mode_count)))


def random_spectrum(grid: ModeGrid, rng: np.random.Generator) -> FieldFunction:
    f = random_field(grid, rng, 1.0)
    return f / math.sqrt(norm_sq(f))


def random_real_field(grid: ModeGrid, rng: np.random.Generator, scale: float = 0.7) -> FieldFunction:
    return FieldFunction.from_balanced(grid, scale * rng.normal(size=grid.mode_count))


def random_gaussian_state(grid: ModeGrid, rng: np.random.Generator) -> WignerState:
    """
    Normalized Gaussian with a Hermitian kernel whose spectrum lies in [0.5, 1.8]
    """

    n = grid.mode_count
    raw = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    unitary, _ = np.linalg.qr(raw)
    balanced = unitary @ np.diag(rng.uniform(0.5, 1.8, size=n)) @ unitary.conj().T
    return gaussian_state(Kernel.from_balanced(grid, balanced), random_field(grid, rng, 0.4))


def lattice(grid: ModeGrid, mode: int = 0, extent: float = LATTICE_EXTENT, steps: int = LATTICE_STEPS) -> List[FieldFunction]:
    """
    steps x steps points of the balanced amplitude of one mode, other modes at zero
    """

    axis = np.linspace(-extent, extent, steps)
    points = []
    for re in axis:
        for im in axis:
            balanced = np.zeros(grid.mode_count, dtype=complex)
            balanced[mode] = complex(re, im)
            points.append(FieldFunction.from_balanced(grid, balanced))
    return points


def real_line(grid: ModeGrid, mode: int = 0, extent: float = LATTICE_EXTENT, steps: int = LATTICE_STEPS) -> List[FieldFunction]:
    points = []
    for x in np.linspace(-extent, extent, steps):
        balanced = np.zeros(grid.mode_count)
        balanced[mode] = x
        points.append(FieldFunction.from_balanced(grid, balanced))
    return points


def gaussian_integral_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("gaussian_integral", context)
    rng = context.rng(rec.suite)
    grid = random_grid(rng, 1)
    errors = []
    for _ in range(20):
        k = complex(rng.uniform(0.8, 2.0), rng.uniform(-0.5, 0.5))
        xi, zeta = random_field(grid, rng, 0.3), random_field(grid, rng, 0.3)
        c = complex(rng.normal(scale=0.2), rng.normal(scale=0.2))
        G = GaussianFunctional.create(identity_kernel(grid, k), xi, zeta, c)
        exact = integrate(G)
        numeric = cubature(G)
        errors.append(relative_error(numeric, exact))
    rec.record("cubature", errors, 1e-6)
    return rec.results


def cubature(G: GaussianFunctional) -> complex:
    """
    Adaptive 2-D quadrature of a single-mode functional against d²alpha~/pi
    """

    k, xi, row = G.kernel[0, 0], G.xi[0], G.row[0]
    c = G.constant.constant
    scale = G.prefactor.value()
    radius = 3.0 + 10.0 / math.sqrt(k.real)

    def integrand(y, x, part):
        z = complex(x, y)
        value = scale * np.exp(-k * abs(z) ** 2 - np.conj(z) * xi - row * z + c) / math.pi
        return value.real if part == 0 else value.imag

    real, _ = dblquad(integrand, -radius, radius, -radius, radius, args=(0,), epsabs=1e-13, epsrel=1e-11)
    imag, _ = dblquad(integrand, -radius, radius, -radius, radius, args=(1,), epsabs=1e-13, epsrel=1e-11)
    return complex(real, imag)


def determinant_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("determinant", context)
    rng = context.rng(rec.suite)
    via_log, via_eigen = [], []
    for _ in range(50):
        n = int(rng.choice([1, 2, 4, 8]))
        grid = random_grid(rng, n)
        perturbation = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        kernel = Kernel.from_balanced(grid, np.eye(n) + 0.3 * perturbation / math.sqrt(n))
        direct = np.linalg.det(kernel.weighted)
        from_trace = LogScalar.exp(trace(kernel_log(kernel)), n)
        via_log.append(relative_error(from_trace, direct))
        via_eigen.append(relative_error(det(kernel), direct))
    rec.record("exp_trace_log", via_log, 1e-9)
    rec.record("eigenvalue_log_det", via_eigen, 1e-9)
    return rec.results


def _omega_error(value: LogScalar) -> float:
    return 0.0 if value.has_zero_omega else math.inf


def normalization_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("normalization", context)
    rng = context.rng(rec.suite)
    finite, omega = [], []
    for n in (1, 2, 4, 8):
        grid = random_grid(rng, n)
        norm = trace_norm(coherent_wigner(random_field(grid, rng)))
        finite.append(abs(norm.finite_part() - 1))
        omega.append(_omega_error(norm))
    rec.record("coherent_trace", finite, 1e-9)
    rec.record("coherent_omega", omega, 0.0, "symbolic 2^N factors cancel exactly")

    finite, omega = [], []
    for n in range(7):
        for modes in (1, 2, 4):
            grid = random_grid(rng, modes)
            norm = trace_norm(fock_wigner(n, random_spectrum(grid, rng)))
            finite.append(abs(norm.finite_part() - 1))
            omega.append(_omega_error(norm))
    rec.record("fock_trace", finite, 1e-9)
    rec.record("fock_omega", omega, 0.0)
    return rec.results


def fock_laguerre_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("fock_laguerre", context)
    rng = context.rng(rec.suite)
    errors = []
    for modes in (1, 2, 4):
        grid = random_grid(rng, modes)
        spectrum = random_spectrum(grid, rng)
        states = [fock_wigner(n, spectrum) for n in range(7)]
        for _ in range(25):
            alpha = random_field(grid, rng, 0.6)
            envelope = 2.0 ** modes * math.exp(-2 * norm_sq(alpha))
            for n, state in enumerate(states):
                errors.append(
                    relative_error(state.evaluate_functional(alpha), fock_laguerre(n, spectrum, alpha), envelope)
                )
    rec.record("extraction_vs_laguerre", errors, 1e-9, "relative to the Gaussian envelope")
    return rec.results


def number_operator_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("number_operator", context)
    rng = context.rng(rec.suite)
    grid = random_grid(rng, 2)
    from_generating = number_from_generating(grid)
    direct = number_wigner(grid)
    generating_errors, direct_errors = [], []
    for _ in range(10):
        alpha = random_field(grid, rng, 0.8)
        exact = number_polynomial(alpha)
        generating_errors.append(relative_error(from_generating.evaluate(alpha), exact, 1.0))
        direct_errors.append(relative_error(direct.evaluate_functional(alpha), exact, 1.0))
    rec.record("derivative_route", generating_errors, 1e-10)
    rec.record("source_route", direct_errors, 1e-10)

    coherent_errors = []
    for _ in range(5):
        alpha0 = random_field(grid, rng, 0.8)
        coherent_errors.append(relative_error(expectation(coherent_wigner(alpha0), direct), norm_sq(alpha0), 1.0))
    rec.record("coherent_mean_number", coherent_errors, 1e-9)

    spectrum = random_spectrum(grid, rng)
    fock_errors = [relative_error(expectation(fock_wigner(n, spectrum), direct), n, 1.0) for n in range(5)]
    rec.record("fock_mean_number", fock_errors, 1e-9)
    return rec.results


def displacement_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("displacement", context)
    rng = context.rng(rec.suite)
    triple_errors, delta_errors = [], []
    for modes in (1, 2):
        grid = random_grid(rng, modes)
        alpha0 = random_field(grid, rng, 0.5)
        envelope = 2.0 ** modes
        for state in (coherent_wigner(random_field(grid, rng, 0.5)), fock_wigner(1, random_spectrum(grid, rng))):
            expected = displace_state(state, alpha0)
            triple = star3(displacement_wigner(alpha0), state, displacement_wigner(-alpha0))
            by_delta = displace_by_delta(state, alpha0)
            for _ in range(10):
                alpha = random_field(grid, rng, 0.7)
                reference = expected.evaluate(alpha)
                triple_errors.append(relative_error(triple.evaluate(alpha), reference, envelope))
                delta_errors.append(relative_error(by_delta.evaluate(alpha), reference, envelope))
    rec.record("triple_product_shift", triple_errors, 1e-9)
    rec.record("delta_route_shift", delta_errors, 1e-9)
    return rec.results


def star_product_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("star_product", context)
    rng = context.rng(rec.suite)
    trace_errors, associativity_errors = [], []
    for index in range(20):
        grid = random_grid(rng, 1 + index % 2)
        first, second = random_gaussian_state(grid, rng), random_gaussian_state(grid, rng)
        trace_errors.append(relative_error(star(first, second).trace(), expectation(first, second)))
        if index < 5:
            third = random_gaussian_state(grid, rng)
            triple = star3(first, second, third)
            iterated = star(star(first, second).as_state(), third)
            for _ in range(4):
                alpha = random_field(grid, rng, 0.5)
                associativity_errors.append(
                    relative_error(triple.evaluate(alpha), iterated.evaluate(alpha), 2.0 ** grid.mode_count)
                )
    rec.record("trace_equals_expectation", trace_errors, 1e-9)
    rec.record("star3_equals_iterated_star", associativity_errors, 1e-9)
    return rec.results


def overlap_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("overlap", context)
    rng = context.rng(rec.suite)
    errors = []
    for modes in (1, 2, 4, 8):
        grid = random_grid(rng, modes)
        for _ in range(3):
            alpha0, beta0 = random_field(grid, rng), random_field(grid, rng)
            exact = math.exp(-norm_sq(alpha0 - beta0))
            errors.append(relative_error(expectation(coherent_wigner(alpha0), coherent_wigner(beta0)), exact))
    rec.record("coherent_overlap", errors, 1e-9)
    return rec.results


def oracle_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("oracle", context)
    if not context.oracle:
        return rec.results
    grid = ModeGrid.uniform(1)
    spectrum = FieldFunction.basis(grid, 0)
    cutoff = context.cutoff
    alpha0 = FieldFunction(grid, [0.6 - 0.4j])
    shift = FieldFunction(grid, [0.5 + 0.3j])
    cases = [("coherent", coherent_wigner(alpha0), fock_oracle.build_coherent([0.6 - 0.4j], cutoff))]
    for n in range(4):
        cases.append((f"fock_{n}", fock_wigner(n, spectrum), fock_oracle.build_fock(n, cutoff)))
    cases.append(
        ("displaced_fock_1", displace_state(fock_wigner(1, spectrum), shift),
         fock_oracle.build_fock(1, cutoff).displaced([0.5 + 0.3j]))
    )
    points = lattice(grid)
    for name, state, reference in cases:
        errors = [
            abs(state.evaluate_functional(alpha).value() - fock_oracle.displaced_parity_wigner(reference, alpha.balanced))
            for alpha in points
        ]
        rec.record(f"{name}_parity_wigner", errors, 1e-6)
    return rec.results


def characteristic_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("characteristic", context)
    rng = context.rng(rec.suite)
    errors = []
    for modes in (1, 2):
        grid = random_grid(rng, modes)
        for state in (
            coherent_wigner(random_field(grid, rng)),
            fock_wigner(2, random_spectrum(grid, rng)),
            random_gaussian_state(grid, rng),
        ):
            recovered = inverse_characteristic(characteristic(state))
            for _ in range(5):
                alpha = random_field(grid, rng, 0.6)
                errors.append(
                    relative_error(recovered.evaluate(alpha), state.evaluate_functional(alpha), 2.0 ** modes)
                )
    rec.record("round_trip", errors, 1e-10)

    grid = ModeGrid.uniform(1)
    a = complex(rng.normal(scale=0.5), rng.normal(scale=0.5))
    coherent_chi = characteristic(coherent_wigner(FieldFunction(grid, [a])))
    vacuum_chi = characteristic(vacuum_wigner(grid))
    first = [moments(coherent_chi, 1, 0)[0], moments(coherent_chi, 0, 1)[0]]
    second = [moments(vacuum_chi, 2, 0)[0, 0], moments(vacuum_chi, 1, 1)[0, 0], moments(vacuum_chi, 0, 2)[0, 0]]
    analytic_first = [math.sqrt(2) * a.real, math.sqrt(2) * a.imag]
    analytic_second = [0.5, 0.0, 0.5]
    rec.record(
        "moments_closed_form",
        [abs(x - y) for x, y in zip(first + second, analytic_first + analytic_second)],
        1e-8,
        "raw coordinates, vacuum variance 1/(2w)",
    )
    if context.oracle:
        coherent = fock_oracle.build_coherent([a], context.cutoff)
        vacuum = fock_oracle.build_coherent([0], context.cutoff)
        oracle_first = [fock_oracle.oracle_expectation(coherent, "q0"), fock_oracle.oracle_expectation(coherent, "p0")]
        oracle_second = [
            fock_oracle.oracle_expectation(vacuum, ("q0", "q0")),
            fock_oracle.oracle_expectation(vacuum, ("q0", "p0")),
            fock_oracle.oracle_expectation(vacuum, ("p0", "p0")),
        ]
        rec.record(
            "moments_oracle",
            [abs(x - y) for x, y in zip(first + second, oracle_first + oracle_second)],
            1e-8,
        )
    return rec.results


def marginals_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("marginals", context)
    rng = context.rng(rec.suite)
    mass, overlap, diagonal = [], [], []
    for modes in (1, 2):
        grid = random_grid(rng, modes)
        alpha0 = random_field(grid, rng)
        state = coherent_wigner(alpha0)
        marginal = marginal_q(state)
        mass.append(abs(marginal.total_mass().value() - 1))
        peak = math.pi ** (-modes / 2)
        for _ in range(8):
            q = random_real_field(grid, rng)
            value = marginal.evaluate(q)
            exact = abs(quadrature_overlap(q, alpha0).value()) ** 2
            overlap.append(relative_error(value, exact, peak))
            diagonal.append(relative_error(weyl_density(state, q, q), value, peak))
    rec.record("total_mass", mass, 1e-10)
    rec.record("squared_overlap", overlap, 1e-9)
    rec.record("weyl_diagonal", diagonal, 1e-9)
    return rec.results


def s_ordering_suite(context: VerificationContext) -> List[CheckResult]:
    rec = _Recorder("s_ordering", context)
    rng = context.rng(rec.suite)
    errors = []
    for modes in (1, 2):
        grid = random_grid(rng, modes)
        alpha0 = random_field(grid, rng)
        q_function = s_transform(coherent_wigner(alpha0), -1.0)
        for _ in range(8):
            alpha = random_field(grid, rng, 0.8)
            errors.append(relative_error(q_function.evaluate(alpha), math.exp(-norm_sq(alpha - alpha0)), 1.0))
    rec.record("coherent_husimi", errors, 1e-9)

    grid = ModeGrid.uniform(1)
    husimi = s_transform(fock_wigner(1, FieldFunction.basis(grid, 0)), -1.0)
    points = lattice(grid)
    values = [husimi.evaluate(alpha).value() for alpha in points]
    rec.record("fock_husimi_positive", [max(0.0, -v.real) for v in values], 1e-12)
    closed = [abs(alpha.values[0]) ** 2 * math.exp(-abs(alpha.values[0]) ** 2) for alpha in points]
    rec.record("fock_husimi_closed_form", [abs(v - c) for v, c in zip(values, closed)], 1e-9)
    if context.oracle:
        reference = fock_oracle.build_fock(1, context.cutoff)
        oracle_errors = [abs(v - fock_oracle.husimi_q(reference, alpha.balanced)) for v, alpha in zip(values, points)]
        rec.record("fock_husimi_oracle", oracle_errors, 1e-6)
    return rec.results


SUITES: Dict[str, Callable[[VerificationContext], List[CheckResult]]] = {
    "gaussian_integral": gaussian_integral_suite,
    "determinant": determinant_suite,
    "normalization": normalization_suite,
    "fock_laguerre": fock_laguerre_suite,
    "number_operator": number_operator_suite,
    "displacement": displacement_suite,
    "star_product": star_product_suite,
    "overlap": overlap_suite,
    "oracle": oracle_suite,
    "characteristic": characteristic_suite,
    "marginals": marginals_suite,
    "s_ordering": s_ordering_suite,
}


def run_suites(names: Optional[Sequence[str]], context: VerificationContext) -> List[CheckResult]:
    """
    Runs the named suites (all by default) in a fixed order
    """

    names = list(SUITES) if not names else list(names)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ValueError(f"Unknown verification suites {unknown}. Available: {list(SUITES)}")
    results = []
    for name in names:
        logger.info(f">> Running suite {name}")
        try:
            results.extend(SUITES[name](context))
        except DIVERGENCE_EXCEPTIONS as e:
            logger.warning(f"Suite {name} stopped on {type(e).__name__}: {e}")
            results.append(CheckResult(name, type(e).__name__, math.inf, 0.0, 0, "divergence", str(e)))
    return results
