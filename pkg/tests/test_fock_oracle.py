import math

import numpy as np
import pytest

from wigner_utils import FieldFunction, ModeGrid
from wigner_utils.fock_oracle import (
    MAX_CUTOFF,
    TruncatedState,
    build_coherent,
    build_fock,
    coherent_vector,
    displaced_parity_wigner,
    displacement_matrix,
    fock_vector,
    husimi_q,
    oracle_expectation,
    parity_matrix,
    poisson_tail,
)
from wigner_utils.states import coherent_wigner, fock_wigner, husimi_q as engine_husimi_q, vacuum_wigner


CUTOFF = 30


INVALID_LAYOUTS = [
    (0, 10),
    (3, 10),
    (1, 0),
    (1, MAX_CUTOFF + 1),
]


@pytest.mark.parametrize("layout", INVALID_LAYOUTS)
def test_invalid_layouts(layout):
    mode_count, cutoff = layout
    with pytest.raises(ValueError):
        TruncatedState(mode_count, cutoff, np.eye(1))


def test_density_must_have_unit_trace():
    with pytest.raises(ValueError):
        TruncatedState(1, 2, np.diag([0.5, 0.2, 0.0]))
    with pytest.raises(ValueError):
        TruncatedState(1, 2, np.diag([1.5, -0.5, 0.0]))


def test_coherent_vector_is_normalized_and_poissonian():
    vector = coherent_vector(1.2 - 0.5j, CUTOFF)
    assert np.linalg.norm(vector) == pytest.approx(1.0)
    mean = abs(1.2 - 0.5j) ** 2
    assert np.sum(np.arange(CUTOFF + 1) * np.abs(vector) ** 2) == pytest.approx(mean, rel=1e-10)


def test_coherent_amplitude_beyond_cutoff_raises():
    with pytest.raises(TruncatedState.TruncationException) as e:
        coherent_vector(4.0, 10)
    assert e.value.tail_mass > 1e-10
    assert poisson_tail(16.0, 10) == pytest.approx(e.value.tail_mass)


def test_fock_vector_bounds():
    with pytest.raises(TruncatedState.TruncationException):
        fock_vector(5, 5)
    with pytest.raises(ValueError):
        fock_vector(1, 5, [1.0, 1.0])


def test_displacement_matrix_is_unitary_on_low_states():
    D = displacement_matrix(0.7 + 0.2j, CUTOFF)
    low = D[:, :10]
    assert np.allclose(low.conj().T @ low, np.eye(10), atol=1e-10)
    assert np.allclose(D[:, 0], coherent_vector(0.7 + 0.2j, CUTOFF), atol=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_fock_parity_wigner_at_origin(n):
    state = build_fock(n, CUTOFF)
    assert displaced_parity_wigner(state, 0.0) == pytest.approx(2 * (-1) ** n)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_oracle_matches_engine_for_fock_states(n, single_mode_grid):
    engine = fock_wigner(n, FieldFunction(single_mode_grid, [1.0]))
    oracle = build_fock(n, CUTOFF)
    for alpha in [0.0, 0.4 - 0.3j, -0.8j, 1.1]:
        point = FieldFunction(single_mode_grid, [alpha])
        assert engine.evaluate(point).value() == pytest.approx(displaced_parity_wigner(oracle, alpha), abs=1e-9)


def test_oracle_matches_engine_on_weighted_grid():
    grid = ModeGrid.from_weights([0.5, 1.7])
    alpha0 = FieldFunction(grid, [0.3 + 0.2j, -0.4j])
    engine = coherent_wigner(alpha0)
    oracle = build_coherent(alpha0.balanced, CUTOFF)
    point = FieldFunction(grid, [0.1, 0.2 - 0.5j])
    assert engine.evaluate(point).value() == pytest.approx(displaced_parity_wigner(oracle, point.balanced), rel=1e-9)


def test_two_mode_fock_state_shares_spectrum():
    spectrum = np.array([0.6, 0.8j])
    state = build_fock(2, 12, spectrum)
    assert oracle_expectation(state, "number") == pytest.approx(2.0)
    assert state.photon_distribution(0) @ np.arange(13) == pytest.approx(2 * 0.36)
    grid = ModeGrid.uniform(2)
    engine = fock_wigner(2, FieldFunction(grid, spectrum))
    point = FieldFunction(grid, [0.2 - 0.1j, 0.3j])
    assert engine.evaluate(point).value() == pytest.approx(displaced_parity_wigner(state, point.values), abs=1e-9)


def test_husimi_matches_engine(single_mode_grid):
    state = build_fock(1, CUTOFF)
    engine = engine_husimi_q(fock_wigner(1, FieldFunction(single_mode_grid, [1.0])))
    alpha = 0.5 + 0.25j
    expected = abs(alpha) ** 2 * math.exp(-abs(alpha) ** 2)
    assert husimi_q(state, alpha) == pytest.approx(expected, rel=1e-10)
    assert engine.evaluate(FieldFunction(single_mode_grid, [alpha])).value() == pytest.approx(expected, rel=1e-9)


def test_displaced_state_keeps_unit_trace():
    state = build_fock(1, CUTOFF).displaced([0.5 + 0.3j])
    assert np.trace(state.density) == pytest.approx(1.0)
    assert oracle_expectation(state, "number") == pytest.approx(1 + abs(0.5 + 0.3j) ** 2, rel=1e-9)


def test_displacement_beyond_safety_bound_raises():
    with pytest.raises(TruncatedState.TruncationException):
        build_fock(1, 10).displaced([3.0])


def test_quadrature_expectations():
    alpha = 0.5 - 0.2j
    state = build_coherent(alpha, CUTOFF)
    assert oracle_expectation(state, "q0") == pytest.approx(math.sqrt(2) * alpha.real, abs=1e-10)
    assert oracle_expectation(state, "p0") == pytest.approx(math.sqrt(2) * alpha.imag, abs=1e-10)
    # symmetrized <qp> = <q><p> for a coherent state
    assert oracle_expectation(state, ["q0", "p0"]) == pytest.approx(2 * alpha.real * alpha.imag, abs=1e-10)
    assert oracle_expectation(state, "parity") == pytest.approx(math.exp(-2 * abs(alpha) ** 2), rel=1e-10)
    with pytest.raises(ValueError):
        oracle_expectation(state, "x0")


def test_displacement_at_lattice_corner_stays_within_bound():
    state = build_fock(1, MAX_CUTOFF)
    for alpha in [2 + 2j, -2 - 2j, 2 - 2j]:
        expected = -2 * (1 - 4 * abs(alpha) ** 2) * math.exp(-2 * abs(alpha) ** 2)
        assert displaced_parity_wigner(state, alpha) == pytest.approx(expected, abs=1e-6)


def test_truncation_error_shrinks_with_cutoff():
    alpha = 1.5 - 0.5j
    lost = [1 - np.sum(np.abs(displacement_matrix(alpha, cutoff)[:, 0]) ** 2) for cutoff in (4, 8, 12, 16)]
    assert all(later <= earlier for earlier, later in zip(lost, lost[1:]))
    for cutoff, value in zip((4, 8, 12, 16), lost):
        assert value == pytest.approx(poisson_tail(abs(alpha) ** 2, cutoff), abs=1e-12)


def test_two_mode_parity_factorizes():
    amplitudes, point = [0.3, 0.2j], [0.1 - 0.2j, -0.15]
    joint = build_coherent(amplitudes, 12)
    single = [build_coherent(a, 12) for a in amplitudes]
    assert np.array_equal(parity_matrix(joint), np.kron(parity_matrix(single[0]), parity_matrix(single[1])))
    product = displaced_parity_wigner(single[0], point[0]) * displaced_parity_wigner(single[1], point[1])
    assert displaced_parity_wigner(joint, point) == pytest.approx(product, rel=1e-10)


@pytest.mark.parametrize("weight", [1.0, 0.5, 2.0])
def test_engine_value_is_oracle_value_at_balanced_point(weight):
    # W[alpha] = 2 tr{rho D(a) Pi D(a)^dagger} at a = sqrt(w) alpha
    grid = ModeGrid.from_weights([weight])
    spectrum = FieldFunction.basis(grid, 0)
    alpha = FieldFunction(grid, [0.35 - 0.2j])
    balanced = alpha.balanced[0]
    vacuum = vacuum_wigner(grid).evaluate(alpha).value()
    assert vacuum == pytest.approx(2 * math.exp(-2 * weight * abs(alpha.values[0]) ** 2), rel=1e-12)
    assert vacuum == pytest.approx(displaced_parity_wigner(build_coherent(0, CUTOFF), balanced), rel=1e-9)
    fock = fock_wigner(1, spectrum).evaluate(alpha).value()
    assert fock == pytest.approx(displaced_parity_wigner(build_fock(1, CUTOFF), balanced), rel=1e-9)
