"""
Brute-force reference backend in a truncated Fock basis for one or two modes.

The Wigner value of the functional engine on a grid of unit weights equals
2^modes tr{rho D(alpha) Parity D(alpha)^dagger} computed here; on a grid with
weights w the oracle is evaluated at the balanced amplitudes sqrt(w) alpha.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import comb, eval_genlaguerre, gammainc, gammaln

logger = logging.getLogger(__name__)

MAX_CUTOFF = 40
MAX_MODES = 2
TAIL_TOLERANCE = 1e-10
DISPLACEMENT_TOLERANCE = 1e-8
TRACE_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class TruncatedState:
    """
    Density matrix over the product Fock basis |n_0, n_1> with n_i <= cutoff
    """

    mode_count: int
    cutoff: int
    density: np.ndarray

    class TruncationException(Exception):
        """
        Exception raised when the photon cutoff cuts off more probability than tolerated
        """

        def __init__(self, message: str, tail_mass: float):
            super().__init__(message)
            self.tail_mass = tail_mass

    def __post_init__(self):
        validate_layout(self.mode_count, self.cutoff)
        dimension = (self.cutoff + 1) ** self.mode_count
        density = np.array(self.density, dtype=complex)
        if density.shape != (dimension, dimension):
            raise ValueError(f"Density matrix must be {dimension}x{dimension}, got {density.shape}")
        trace = np.trace(density)
        if abs(trace - 1) > TRACE_TOLERANCE:
            raise ValueError(f"Density matrix trace is {trace}, expected 1")
        if not np.allclose(density, density.conj().T, rtol=0.0, atol=TRACE_TOLERANCE):
            raise ValueError("Density matrix is not Hermitian")
        if np.linalg.eigvalsh(density).min() < -1e-10:
            raise ValueError("Density matrix is not positive semidefinite")
        density.setflags(write=False)
        object.__setattr__(self, "density", density)

    @staticmethod
    def from_vector(vector: np.ndarray, mode_count: int, cutoff: int) -> "TruncatedState":
        vector = np.asarray(vector, dtype=complex)
        vector = vector / np.linalg.norm(vector)
        return TruncatedState(mode_count, cutoff, np.outer(vector, vector.conj()))

    @property
    def dimension(self) -> int:
        return (self.cutoff + 1) ** self.mode_count

    def displaced(self, alphas: Sequence[complex]) -> "TruncatedState":
        """
        D(alpha) rho D(alpha)^dagger, renormalized after truncation
        """

        D = self._displacement(alphas)
        density = D @ self.density @ D.conj().T
        return TruncatedState(self.mode_count, self.cutoff, density / np.trace(density))

    def _displacement(self, alphas: Sequence[complex]) -> np.ndarray:
        alphas = _per_mode(alphas, self.mode_count)
        matrices = [displacement_matrix(alpha, self.cutoff) for alpha in alphas]
        check_displacement(self, alphas, matrices)
        return reduce(np.kron, matrices)

    def photon_distribution(self, mode: int) -> np.ndarray:
        diagonal = np.diag(self.density).real.reshape((self.cutoff + 1,) * self.mode_count)
        others = tuple(m for m in range(self.mode_count) if m != mode)
        return diagonal.sum(axis=others) if others else diagonal


def validate_layout(mode_count: int, cutoff: int):
    if not 1 <= mode_count <= MAX_MODES:
        raise ValueError(f"The oracle supports 1 to {MAX_MODES} modes. Got {mode_count}")
    if not 0 < cutoff <= MAX_CUTOFF:
        raise ValueError(f"Cutoff must lie in [1, {MAX_CUTOFF}]. Got {cutoff}")


def _per_mode(alphas, mode_count: int) -> np.ndarray:
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    if alphas.shape != (mode_count,):
        raise ValueError(f"Expected {mode_count} amplitudes, got {alphas.shape}")
    return alphas


def poisson_tail(mean: float, cutoff: int) -> float:
    """
    Probability that a Poisson variable of the given mean exceeds cutoff
    """

    if cutoff < 0:
        return 1.0
    return float(gammainc(cutoff + 1, mean))


def coherent_vector(alpha: complex, cutoff: int) -> np.ndarray:
    """
    Truncated, renormalized single-mode coherent state
    """

    alpha = complex(alpha)
    tail = poisson_tail(abs(alpha) ** 2, cutoff)
    if tail > TAIL_TOLERANCE:
        raise TruncatedState.TruncationException(
            f"Coherent amplitude {alpha} leaves tail mass {tail:.3e} beyond cutoff {cutoff}", tail
        )
    n = np.arange(cutoff + 1)
    if alpha == 0:
        vector = (n == 0).astype(complex)
    else:
        log_modulus = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
        vector = np.exp(log_modulus + 1j * n * np.angle(alpha))
    return vector / np.linalg.norm(vector)


def fock_vector(n: int, cutoff: int, spectrum: Optional[Sequence[complex]] = None) -> np.ndarray:
    """
    |n> on one mode, or (F·a^dagger)^n/sqrt(n!)|0> on two modes sharing the spectrum F
    """

    if n < 0 or n >= cutoff:
        raise TruncatedState.TruncationException(f"Photon number {n} is not below cutoff {cutoff}", 1.0)
    if spectrum is None:
        vector = np.zeros(cutoff + 1, dtype=complex)
        vector[n] = 1.0
        return vector

    f = np.asarray(spectrum, dtype=complex)
    if f.shape != (2,):
        raise ValueError("A split spectrum must have one amplitude per mode of a two-mode oracle")
    if abs(np.vdot(f, f) - 1) > 1e-12:
        raise ValueError(f"Spectrum must be normalized. Got norm squared {np.vdot(f, f).real!r}")
    vector = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    for k in range(n + 1):
        vector[k, n - k] = math.sqrt(comb(n, k, exact=True)) * f[0] ** k * f[1] ** (n - k)
    return vector.ravel()


def build_coherent(alphas: Union[complex, Sequence[complex]], cutoff: int) -> TruncatedState:
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    validate_layout(alphas.size, cutoff)
    vector = reduce(np.kron, [coherent_vector(alpha, cutoff) for alpha in alphas])
    return TruncatedState.from_vector(vector, alphas.size, cutoff)


def build_fock(n: int, cutoff: int, spectrum: Optional[Sequence[complex]] = None) -> TruncatedState:
    mode_count = 1 if spectrum is None else 2
    validate_layout(mode_count, cutoff)
    return TruncatedState.from_vector(fock_vector(n, cutoff, spectrum), mode_count, cutoff)


def overlap(first: np.ndarray, second: np.ndarray) -> complex:
    return complex(np.vdot(first, second))


def displacement_matrix(alpha: complex, cutoff: int) -> np.ndarray:
    """
    Exact matrix elements <m|D(alpha)|n> for m, n <= cutoff, from the associated
    Laguerre closed form
    """

    alpha = complex(alpha)
    x = abs(alpha) ** 2
    matrix = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    for m, n in itertools.product(range(cutoff + 1), repeat=2):
        low, high = min(m, n), max(m, n)
        base = alpha if m >= n else -np.conj(alpha)
        laguerre = eval_genlaguerre(low, high - low, x)
        if laguerre == 0:
            continue
        log_modulus = 0.5 * (gammaln(low + 1) - gammaln(high + 1)) - 0.5 * x
        if high > low:
            if base == 0:
                continue
            log_modulus += (high - low) * math.log(abs(base))
        phase = (high - low) * np.angle(base) if high > low else 0.0
        matrix[m, n] = np.sign(laguerre) * np.exp(log_modulus + math.log(abs(laguerre)) + 1j * phase)
    return matrix


def check_displacement(state: TruncatedState, alphas: np.ndarray, matrices: Sequence[np.ndarray]):
    """
    Expected probability that the displacement pushes beyond the cutoff, from the
    exact lost mass of each displaced Fock column; raises above DISPLACEMENT_TOLERANCE
    """

    for mode, (alpha, matrix) in enumerate(zip(alphas, matrices)):
        lost = np.clip(1.0 - np.sum(np.abs(matrix) ** 2, axis=0), 0.0, 1.0)
        tail = float(state.photon_distribution(mode) @ lost)
        if tail > DISPLACEMENT_TOLERANCE:
            raise TruncatedState.TruncationException(
                f"Displacement {alpha} is beyond the truncation safety bound (tail estimate {tail:.3e})", tail
            )


def parity_matrix(state: TruncatedState) -> np.ndarray:
    single = np.diag((-1.0) ** np.arange(state.cutoff + 1))
    return reduce(np.kron, [single] * state.mode_count)


def displaced_parity_wigner(state: TruncatedState, alphas: Union[complex, Sequence[complex]]) -> float:
    """
    2^modes tr{rho D(alpha) Parity D(alpha)^dagger}
    """

    D = state._displacement(alphas)
    # tr{rho D Pi D^dagger} = tr{(D^dagger rho D) Pi}
    shifted = D.conj().T @ state.density @ D
    value = np.sum(np.diag(shifted) * np.diag(parity_matrix(state)))
    return float(2 ** state.mode_count * value.real)


def husimi_q(state: TruncatedState, alphas: Union[complex, Sequence[complex]]) -> float:
    """
    <alpha|rho|alpha>
    """

    alphas = _per_mode(alphas, state.mode_count)
    vector = reduce(np.kron, [coherent_vector(alpha, state.cutoff) for alpha in alphas])
    return float(np.vdot(vector, state.density @ vector).real)


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1)), k=1).astype(complex)


def mode_operator(single: np.ndarray, mode: int, mode_count: int) -> np.ndarray:
    identity = np.eye(single.shape[0])
    factors = [single if m == mode else identity for m in range(mode_count)]
    return reduce(np.kron, factors)


def quadrature_operator(state: TruncatedState, label: str) -> np.ndarray:
    """
    q_i = (a_i + a_i^dagger)/sqrt(2) or p_i = -i(a_i - a_i^dagger)/sqrt(2) for a label such as 'q0'
    """

    which, mode = label[0], int(label[1:])
    if which not in ("q", "p") or not 0 <= mode < state.mode_count:
        raise ValueError(f"Unknown quadrature {label}")
    a = annihilation(state.cutoff)
    single = (a + a.conj().T) / math.sqrt(2) if which == "q" else -1j * (a - a.conj().T) / math.sqrt(2)
    return mode_operator(single, mode, state.mode_count)


def oracle_expectation(state: TruncatedState, observable: Union[str, Sequence[str]]) -> complex:
    """
    tr{rho O} for 'number', 'parity', or a sequence of quadrature labels whose
    product is taken in symmetrized (Weyl) order
    """

    if observable == "number":
        a = annihilation(state.cutoff)
        number = sum(mode_operator(a.conj().T @ a, m, state.mode_count) for m in range(state.mode_count))
        return complex(np.trace(state.density @ number))
    if observable == "parity":
        return complex(np.trace(state.density @ parity_matrix(state)))

    labels = [observable] if isinstance(observable, str) else list(observable)
    if not labels:
        return complex(np.trace(state.density))
    operators = [quadrature_operator(state, label) for label in labels]
    orderings = list(itertools.permutations(range(len(operators))))
    symmetrized = sum(reduce(np.matmul, [operators[i] for i in order]) for order in orderings) / len(orderings)
    return complex(np.trace(state.density @ symmetrized))
