import math

import numpy as np
import pytest

from wigner_utils import FieldFunction, ModeGrid
from wigner_utils.fock_oracle import build_coherent, quadrature_operator
from wigner_utils.mode_space import norm_sq
from wigner_utils.moyal import displace_by_delta, displace_state, evaluate_series, star, star3, star_series
from wigner_utils.states import (
    coherent_wigner,
    displacement_wigner,
    expectation,
    fock_laguerre,
    fock_wigner,
    number_wigner,
    polynomial_wigner,
    quadrature_wigner,
)
from tests.conftest import get_random_field, get_random_spectrum


def test_pure_state_is_idempotent(two_mode_grid, rng):
    rho = coherent_wigner(get_random_field(two_mode_grid, rng))
    product = star(rho, rho)
    alpha = get_random_field(two_mode_grid, rng)
    assert product.evaluate(alpha).value() == pytest.approx(rho.evaluate(alpha).value(), rel=1e-9)
    assert product.trace().value() == pytest.approx(1.0, rel=1e-9)


def test_star_trace_equals_expectation(two_mode_grid, rng):
    rho = fock_wigner(2, get_random_spectrum(two_mode_grid, rng))
    observable = number_wigner(two_mode_grid)
    assert star(rho, observable).trace().value() == pytest.approx(expectation(rho, observable).value(), rel=1e-9)


def test_canonical_commutator(single_mode_grid, rng):
    q, p = quadrature_wigner(single_mode_grid, 0, "q"), quadrature_wigner(single_mode_grid, 0, "p")
    alpha = get_random_field(single_mode_grid, rng)
    qp, pq = star(q, p).evaluate(alpha).value(), star(p, q).evaluate(alpha).value()
    a = alpha.values[0]
    assert qp == pytest.approx(2 * a.real * a.imag + 0.5j, abs=1e-10)
    assert qp - pq == pytest.approx(1j, abs=1e-10)


def test_star_of_amplitudes(single_mode_grid, rng):
    analytic = polynomial_wigner(single_mode_grid, [[0, 0], [1, 0]])
    conjugate = polynomial_wigner(single_mode_grid, [[0, 1], [0, 0]])
    alpha = get_random_field(single_mode_grid, rng)
    r = abs(alpha.values[0]) ** 2
    assert star(analytic, conjugate).evaluate(alpha).value() == pytest.approx(r + 0.5, abs=1e-10)
    assert star(conjugate, analytic).evaluate(alpha).value() == pytest.approx(r - 0.5, abs=1e-10)


def test_star3_equals_iterated_star(two_mode_grid, rng):
    alpha0 = get_random_field(two_mode_grid, rng)
    first, second, third = displacement_wigner(alpha0), coherent_wigner(get_random_field(two_mode_grid, rng)), displacement_wigner(-alpha0)
    iterated = star(star(first, second).as_state(), third)
    direct = star3(first, second, third)
    alpha = get_random_field(two_mode_grid, rng)
    assert direct.evaluate(alpha).value() == pytest.approx(iterated.evaluate(alpha).value(), rel=1e-8, abs=1e-12)
    assert direct.inputs == (first.description, second.description, third.description)


def test_displacement_conjugation_shifts_the_state(two_mode_grid, rng):
    alpha0 = get_random_field(two_mode_grid, rng)
    rho = coherent_wigner(get_random_field(two_mode_grid, rng))
    product = star3(displacement_wigner(alpha0), rho, displacement_wigner(-alpha0))
    alpha = get_random_field(two_mode_grid, rng)
    assert product.evaluate(alpha).value() == pytest.approx(rho.evaluate(alpha - alpha0).value(), rel=1e-8)


def test_displaced_fock_state(two_mode_grid, rng):
    spectrum = get_random_spectrum(two_mode_grid, rng)
    alpha0 = get_random_field(two_mode_grid, rng)
    shifted = displace_state(fock_wigner(1, spectrum), alpha0)
    through_delta = displace_by_delta(fock_wigner(1, spectrum), alpha0)
    alpha = get_random_field(two_mode_grid, rng)
    expected = fock_laguerre(1, spectrum, alpha - alpha0).value()
    assert shifted.evaluate_functional(alpha).value() == pytest.approx(expected, rel=1e-9, abs=1e-12)
    assert through_delta.evaluate(alpha).value() == pytest.approx(expected, rel=1e-8, abs=1e-12)
    assert shifted.parameters["displaced_by"] is alpha0


def test_displaced_coherent_state_stays_coherent(two_mode_grid, rng):
    a, b = get_random_field(two_mode_grid, rng), get_random_field(two_mode_grid, rng)
    shifted = displace_state(coherent_wigner(a), b)
    assert shifted.kind == "coherent"
    assert np.allclose(shifted.parameters["alpha0"].values, (a + b).values)


def test_products_on_different_grids_do_not_mix(rng):
    a = coherent_wigner(get_random_field(ModeGrid.uniform(1), rng))
    b = coherent_wigner(get_random_field(ModeGrid.from_weights([2.0]), rng))
    with pytest.raises(ModeGrid.GridMismatchException):
        star(a, b)


VALID_SERIES = [
    ([[0, 0], [1, 0]], [[0, 1], [0, 0]], lambda a: abs(a) ** 2 + 0.5),
    ([[0, 1], [0, 0]], [[0, 0], [1, 0]], lambda a: abs(a) ** 2 - 0.5),
]


@pytest.mark.parametrize("series", VALID_SERIES)
def test_star_series_of_amplitudes(series):
    first, second, expected = series
    coefficients = star_series(np.array(first), np.array(second), 4)
    alpha = 0.3 - 0.7j
    assert evaluate_series(coefficients, alpha) == pytest.approx(expected(alpha), abs=1e-12)


def test_star_series_number_operator_square(single_mode_grid):
    # |a|^2 ⋆ |a|^2 = |a|^4 - 1/4
    number = np.array([[0, 0], [0, 1]], dtype=complex)
    coefficients = star_series(number, number, 4)
    alpha = 0.3 - 0.7j
    assert evaluate_series(coefficients, alpha) == pytest.approx(abs(alpha) ** 4 - 0.25, abs=1e-12)
    engine = star(polynomial_wigner(single_mode_grid, number), polynomial_wigner(single_mode_grid, number))
    point = FieldFunction(single_mode_grid, [alpha])
    assert engine.evaluate(point).value() == pytest.approx(abs(alpha) ** 4 - 0.25, abs=1e-10)


def test_truncated_series_drops_higher_orders():
    number = np.array([[0, 0], [0, 1]], dtype=complex)
    alpha = 0.3 - 0.7j
    assert evaluate_series(star_series(number, number, 0), alpha) == pytest.approx(abs(alpha) ** 4)
    assert math.isclose(evaluate_series(star_series(number, number, 1), alpha).real, abs(alpha) ** 4, abs_tol=1e-12)


def test_star_trace_of_distinct_coherent_states(two_mode_grid, rng):
    for _ in range(3):
        a, b = get_random_field(two_mode_grid, rng), get_random_field(two_mode_grid, rng)
        overlap = star(coherent_wigner(a), coherent_wigner(b)).trace().value()
        assert overlap == pytest.approx(math.exp(-norm_sq(a - b)), rel=1e-9)
        assert overlap.real <= 1.0


def test_commutator_matches_truncated_fock_space(single_mode_grid, rng):
    q, p = quadrature_wigner(single_mode_grid, 0, "q"), quadrature_wigner(single_mode_grid, 0, "p")
    state = build_coherent(0.4 - 0.3j, 30)
    Q, P = quadrature_operator(state, "q0"), quadrature_operator(state, "p0")
    oracle = np.trace(state.density @ (Q @ P - P @ Q))
    for _ in range(3):
        alpha = get_random_field(single_mode_grid, rng)
        engine = star(q, p).evaluate(alpha).value() - star(p, q).evaluate(alpha).value()
        assert engine == pytest.approx(oracle, abs=1e-9)
