import math

import numpy as np
import pytest

from wigner_utils import BlockGaussian, CoefficientFunctional, DiracDelta, FieldFunction, ModeGrid, WignerState
from wigner_utils.kernel_algebra import Kernel
from wigner_utils.mode_space import inner_product, norm_sq
from wigner_utils.states import (
    DistributionalResult,
    SOrderParameter,
    characteristic,
    coherent_assisted,
    coherent_overlap,
    coherent_wigner,
    displacement_overlap,
    displacement_wigner,
    expectation,
    fock_laguerre,
    fock_overlap,
    fock_overlap_generating,
    fock_wigner,
    gaussian_state,
    husimi_q,
    inverse_characteristic,
    marginal_p,
    marginal_q,
    moments,
    number_from_generating,
    number_generating,
    number_polynomial,
    number_wigner,
    quadrature_overlap,
    quadrature_wigner,
    s_transform,
    trace_norm,
    vacuum_wigner,
    weyl_density,
)
from tests.conftest import get_random_field, get_random_spectrum


def test_coherent_trace_is_exactly_one(random_grid, rng):
    value = trace_norm(coherent_wigner(get_random_field(random_grid, rng)))
    assert value.has_zero_omega
    assert value.finite_part() == pytest.approx(1, rel=1e-10)


def test_coherent_closed_form_matches_functional(random_grid, rng):
    state = coherent_wigner(get_random_field(random_grid, rng))
    alpha = get_random_field(random_grid, rng)
    assert state.evaluate(alpha).value() == pytest.approx(state.evaluate_functional(alpha).value(), rel=1e-10)


@pytest.mark.parametrize("n", [0, 1, 2, 4])
def test_fock_extraction_matches_laguerre(n, two_mode_grid, rng):
    spectrum = get_random_spectrum(two_mode_grid, rng)
    state = fock_wigner(n, spectrum)
    for _ in range(3):
        alpha = get_random_field(two_mode_grid, rng)
        expected = fock_laguerre(n, spectrum, alpha).value()
        assert state.evaluate_functional(alpha).value() == pytest.approx(expected, rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("n", [0, 1, 3])
def test_fock_trace_is_one(n, random_grid, rng):
    value = trace_norm(fock_wigner(n, get_random_spectrum(random_grid, rng)))
    assert value.has_zero_omega
    assert value.finite_part() == pytest.approx(1, rel=1e-9)


def test_invalid_fock_states(two_mode_grid, rng):
    spectrum = get_random_spectrum(two_mode_grid, rng)
    with pytest.raises(ValueError):
        fock_wigner(-1, spectrum)
    with pytest.raises(BlockGaussian.UnsupportedOrderException):
        fock_wigner(11, spectrum)
    with pytest.raises(FieldFunction.FieldException):
        fock_wigner(1, 2 * spectrum)


def test_number_operator_routes_agree(two_mode_grid, rng):
    derivative_route = number_wigner(two_mode_grid)
    source_route = number_from_generating(two_mode_grid)
    for _ in range(3):
        alpha = get_random_field(two_mode_grid, rng)
        expected = number_polynomial(alpha).value()
        assert derivative_route.evaluate_functional(alpha).value() == pytest.approx(expected, rel=1e-10, abs=1e-12)
        assert source_route.evaluate(alpha).value() == pytest.approx(expected, rel=1e-10, abs=1e-12)


def test_mean_photon_number(random_grid, rng):
    alpha0 = get_random_field(random_grid, rng)
    observable = number_wigner(random_grid)
    assert expectation(coherent_wigner(alpha0), observable).value() == pytest.approx(norm_sq(alpha0), rel=1e-9)
    spectrum = get_random_spectrum(random_grid, rng)
    for n in range(4):
        assert expectation(fock_wigner(n, spectrum), observable).value() == pytest.approx(n, abs=1e-9)


def test_number_generating(single_mode_grid):
    alpha = FieldFunction(single_mode_grid, [0.4 - 0.3j])
    identity = number_generating(single_mode_grid, 1)
    assert identity.evaluate_line(alpha.balanced).value().value() == pytest.approx(1.0)
    vacuum = number_generating(single_mode_grid, 0)
    expected = vacuum_wigner(single_mode_grid).evaluate(alpha).value()
    assert vacuum.evaluate_line(alpha.balanced).value().value() == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        number_generating(single_mode_grid, -1)


def test_displacement_has_unit_modulus(random_grid, rng):
    state = displacement_wigner(get_random_field(random_grid, rng))
    alpha = get_random_field(random_grid, rng, 2.0)
    assert abs(state.evaluate(alpha).value()) == pytest.approx(1.0)
    assert not state.is_density


def test_coherent_assisted_displacement(two_mode_grid, rng):
    alpha0 = get_random_field(two_mode_grid, rng)
    assisted = coherent_assisted(displacement_overlap(alpha0))
    state = displacement_wigner(alpha0)
    alpha = get_random_field(two_mode_grid, rng)
    assert assisted.evaluate(alpha).value() == pytest.approx(state.evaluate(alpha).value(), rel=1e-10)


@pytest.mark.parametrize("n", [1, 2])
def test_coherent_assisted_fock(n, two_mode_grid, rng):
    spectrum = get_random_spectrum(two_mode_grid, rng)
    assisted = coherent_assisted(fock_overlap_generating(spectrum))
    extracted = CoefficientFunctional(assisted.functional, ((1 / math.factorial(n), {"eta1": n, "eta2": n}),))
    alpha = get_random_field(two_mode_grid, rng)
    expected = fock_laguerre(n, spectrum, alpha).value()
    assert extracted.evaluate(alpha).value() == pytest.approx(expected, rel=1e-8, abs=1e-12)


def test_coherent_assisted_requires_two_blocks(two_mode_grid):
    with pytest.raises(ValueError):
        coherent_assisted(BlockGaussian.unit(two_mode_grid))


def test_overlaps(two_mode_grid, rng):
    alpha, beta = get_random_field(two_mode_grid, rng), get_random_field(two_mode_grid, rng)
    assert abs(coherent_overlap(alpha, beta).value()) == pytest.approx(math.exp(-0.5 * norm_sq(alpha - beta)))
    f, g = get_random_spectrum(two_mode_grid, rng), get_random_spectrum(two_mode_grid, rng)
    assert fock_overlap(2, f, 3, g) == 0
    assert fock_overlap(3, f, 3, g) == pytest.approx(inner_product(f, g) ** 3)


def test_quadrature_overlap_squares_to_marginal(two_mode_grid, rng):
    alpha0 = get_random_field(two_mode_grid, rng)
    q = FieldFunction(two_mode_grid, rng.normal(size=2))
    expected = abs(quadrature_overlap(q, alpha0).value()) ** 2
    assert marginal_q(coherent_wigner(alpha0)).evaluate(q).value() == pytest.approx(expected, rel=1e-9)
    with pytest.raises(FieldFunction.FieldException):
        quadrature_overlap(FieldFunction(two_mode_grid, [1j, 0.0]), alpha0)


def test_vacuum_characteristic(random_grid, rng):
    chi = characteristic(vacuum_wigner(random_grid))
    eta = get_random_field(random_grid, rng)
    assert chi.at_eta(eta).value() == pytest.approx(math.exp(-0.5 * norm_sq(eta)), rel=1e-10)


def test_characteristic_requires_real_sources(two_mode_grid):
    chi = characteristic(vacuum_wigner(two_mode_grid))
    with pytest.raises(FieldFunction.FieldException):
        chi.value(FieldFunction(two_mode_grid, [1j, 0.0]), FieldFunction.zeros(two_mode_grid))


def test_characteristic_round_trip(two_mode_grid, rng):
    state = fock_wigner(1, get_random_spectrum(two_mode_grid, rng))
    restored = inverse_characteristic(characteristic(state), "fock")
    alpha = get_random_field(two_mode_grid, rng)
    assert restored.evaluate(alpha).value() == pytest.approx(state.evaluate(alpha).value(), rel=1e-9, abs=1e-12)


def test_vacuum_second_moments_in_raw_coordinates(two_mode_grid):
    chi = characteristic(vacuum_wigner(two_mode_grid))
    expected = np.diag(1 / (2 * two_mode_grid.weights))
    assert np.allclose(moments(chi, 2, 0), expected, atol=1e-12)
    assert np.allclose(moments(chi, 0, 2), expected, atol=1e-12)
    assert np.allclose(moments(chi, 1, 1), 0, atol=1e-12)


def test_coherent_first_moments(two_mode_grid, rng):
    alpha0 = get_random_field(two_mode_grid, rng)
    chi = characteristic(coherent_wigner(alpha0))
    assert np.allclose(moments(chi, 1, 0), math.sqrt(2) * alpha0.values.real, atol=1e-10)
    assert np.allclose(moments(chi, 0, 1), math.sqrt(2) * alpha0.values.imag, atol=1e-10)


def test_moment_order_limit(single_mode_grid):
    chi = characteristic(vacuum_wigner(single_mode_grid))
    with pytest.raises(BlockGaussian.UnsupportedOrderException):
        moments(chi, 3, 2)
    with pytest.raises(ValueError):
        moments(chi, -1, 0)


def test_quadrature_expectation(two_mode_grid, rng):
    alpha0 = get_random_field(two_mode_grid, rng)
    rho = coherent_wigner(alpha0)
    for mode in range(2):
        q = expectation(rho, quadrature_wigner(two_mode_grid, mode, "q")).value()
        p = expectation(rho, quadrature_wigner(two_mode_grid, mode, "p")).value()
        assert q == pytest.approx(math.sqrt(2) * alpha0.values[mode].real, abs=1e-10)
        assert p == pytest.approx(math.sqrt(2) * alpha0.values[mode].imag, abs=1e-10)
    with pytest.raises(ValueError):
        quadrature_wigner(two_mode_grid, 0, "x")


def test_gaussian_state_has_unit_trace(two_mode_grid, rng):
    kernel = Kernel.from_balanced(two_mode_grid, np.array([[1.2, 0.3j], [-0.3j, 0.9]]))
    state = gaussian_state(kernel, get_random_field(two_mode_grid, rng))
    assert state.is_density
    assert trace_norm(state).value() == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("basis", ["q", "p"])
def test_marginal_total_mass(basis, two_mode_grid, rng):
    state = fock_wigner(2, get_random_spectrum(two_mode_grid, rng))
    marginal = marginal_q(state) if basis == "q" else marginal_p(state)
    assert marginal.total_mass().value() == pytest.approx(1.0, rel=1e-9)


def test_vacuum_marginal(random_grid, rng):
    x = FieldFunction(random_grid, rng.normal(size=random_grid.mode_count))
    expected = math.pi ** (-random_grid.mode_count / 2) * math.exp(-np.sum(x.balanced.real ** 2))
    assert marginal_q(vacuum_wigner(random_grid)).evaluate(x).value() == pytest.approx(expected, rel=1e-10)
    with pytest.raises(FieldFunction.FieldException):
        marginal_q(vacuum_wigner(random_grid)).evaluate(x * 1j)


@pytest.mark.parametrize("basis", ["q", "p"])
def test_weyl_density_diagonal_is_marginal(basis, two_mode_grid, rng):
    state = fock_wigner(1, get_random_spectrum(two_mode_grid, rng))
    marginal = marginal_q(state) if basis == "q" else marginal_p(state)
    x = FieldFunction(two_mode_grid, rng.normal(size=2))
    diagonal = weyl_density(state, x, x, basis).value()
    assert diagonal == pytest.approx(marginal.evaluate(x).value(), rel=1e-9, abs=1e-12)


def test_weyl_density_is_hermitian(two_mode_grid, rng):
    state = coherent_wigner(get_random_field(two_mode_grid, rng))
    x, y = FieldFunction(two_mode_grid, rng.normal(size=2)), FieldFunction(two_mode_grid, rng.normal(size=2))
    assert weyl_density(state, x, y).value() == pytest.approx(np.conj(weyl_density(state, y, x).value()), rel=1e-10)
    with pytest.raises(ValueError):
        weyl_density(state, x, y, "r")


def test_coherent_husimi(two_mode_grid, rng):
    alpha0 = get_random_field(two_mode_grid, rng)
    q = husimi_q(coherent_wigner(alpha0))
    alpha = get_random_field(two_mode_grid, rng)
    assert q.evaluate(alpha).value() == pytest.approx(math.exp(-norm_sq(alpha - alpha0)), rel=1e-10)


def test_single_photon_husimi(single_mode_grid, rng):
    spectrum = FieldFunction(single_mode_grid, [1.0])
    q = husimi_q(fock_wigner(1, spectrum))
    alpha = get_random_field(single_mode_grid, rng)
    r = norm_sq(alpha)
    assert q.evaluate(alpha).value() == pytest.approx(r * math.exp(-r), rel=1e-9)


def test_wigner_ordering_is_identity(two_mode_grid, rng):
    state = coherent_wigner(get_random_field(two_mode_grid, rng))
    assert s_transform(state, 0) is state


def test_invalid_ordering_parameter():
    with pytest.raises(ValueError):
        SOrderParameter(1.5)


def test_p_distribution_of_coherent_state_is_a_delta(two_mode_grid, rng):
    alpha0 = get_random_field(two_mode_grid, rng)
    result = s_transform(coherent_wigner(alpha0), 1)
    assert isinstance(result, DiracDelta)
    assert np.allclose(result.support(), alpha0.balanced)


def test_p_distribution_of_fock_state_is_distributional(single_mode_grid):
    result = s_transform(fock_wigner(1, FieldFunction(single_mode_grid, [1.0])), 1)
    assert isinstance(result, DistributionalResult)
    assert result.is_distributional


def test_states_on_different_grids_do_not_mix(rng):
    a = coherent_wigner(get_random_field(ModeGrid.uniform(2), rng))
    b = coherent_wigner(get_random_field(ModeGrid.from_weights([1.0, 2.0]), rng))
    with pytest.raises(ModeGrid.GridMismatchException):
        expectation(a, b)


def test_unknown_state_kind(two_mode_grid):
    with pytest.raises(ValueError):
        WignerState(BlockGaussian.unit(two_mode_grid), "squeezed")
