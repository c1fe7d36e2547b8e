"""
Gaussian functionals and their functional integrals.

Every functional is held in balanced coordinates (field values scaled by
sqrt(w)), where ⋄-contractions become Hermitian products and the measure
D°[alpha] is prod_i d²alpha~_i / pi. A functional over several stacked copies
of the mode space ("blocks") is a BlockGaussian; single-block functionals are
GaussianFunctional, or GeneratingFunctional when their sources depend on
auxiliary parameters.
"""
import logging
import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import ClassVar, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .generating import (
    MAX_EXTRACTION_ORDER,
    ParameterPolynomial,
    fresh_name,
    normalize_orders,
    union_names,
)
from .kernel_algebra import (
    CONDITION_THRESHOLD,
    Kernel,
    matrix_log_det,
    pattern_det,
    rational_inverse,
)
from .log_scalar import LogScalar, exact_fraction
from .mode_space import FieldFunction, ModeGrid, check_compatible

logger = logging.getLogger(__name__)

STABILITY_TOLERANCE = 1e-12
MAX_MONOMIAL_DEGREE = 4


def rational_matrix(values) -> Optional[np.ndarray]:
    """
    Object array of Fractions, or None when an entry is not an exact real number
    """

    try:
        rows = [[exact_fraction(x) for x in row] for row in values]
    except (ValueError, TypeError, OverflowError):
        return None
    matrix = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            matrix[i, j] = x
    return matrix


def complex_matrix(values) -> np.ndarray:
    values = np.asarray(values, dtype=object) if not isinstance(values, np.ndarray) else values
    if values.dtype == object:
        return np.array([[complex(x) for x in row] for row in values], dtype=complex).reshape(values.shape)
    return values.astype(complex)


def block_map(small, mode_count: int) -> np.ndarray:
    """
    Full map kron(small, I_N) between stacked block variables
    """

    return np.kron(complex_matrix(small), np.eye(mode_count))


def _frozen(array, shape, name: str) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    if array.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} must be finite")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GeneratingScalar:
    """
    A scalar base * exp(P(eta)) depending on auxiliary parameters eta
    """

    base: LogScalar
    exponent: ParameterPolynomial = field(default_factory=ParameterPolynomial)

    @property
    def parameters(self) -> Tuple[str, ...]:
        return self.exponent.names

    def value(self) -> LogScalar:
        """
        Value at eta = 0
        """

        return self.base * LogScalar.exp(self.exponent.constant)

    def derivative(self, orders) -> LogScalar:
        """
        Exact mixed derivative at eta = 0
        """

        return self.value() * self.exponent.derivative(orders)

    def at(self, values: Mapping[str, complex]) -> "GeneratingScalar":
        return GeneratingScalar(self.base, self.exponent.recentered(values))

    def scaled(self, factor) -> "GeneratingScalar":
        return GeneratingScalar(self.base * factor, self.exponent)


@dataclass(frozen=True, eq=False)
class BlockGaussian:
    """
    prefactor * exp(-z^H K z - z^H xi(eta) - row(eta) z + c(eta)) over z made of
    `blocks` stacked copies of the grid (balanced coordinates).

    `row` is the conjugate of the zeta source, so row(eta) = row + sum_k eta_k row_k
    stays holomorphic in the parameters. `pattern`, when present, is a small
    rational matrix with K == kron(pattern, I).
    """

    grid: ModeGrid
    blocks: int
    kernel: np.ndarray
    xi: np.ndarray
    row: np.ndarray
    constant: ParameterPolynomial = field(default_factory=ParameterPolynomial)
    prefactor: Optional[LogScalar] = None
    xi_terms: Optional[np.ndarray] = None
    row_terms: Optional[np.ndarray] = None
    pattern: Optional[np.ndarray] = field(default=None, repr=False)

    class DivergenceException(Exception):
        """
        Exception raised when a functional integral does not converge
        """

        def __init__(self, message: str, eigenvalue: Optional[complex] = None, blocks: Tuple[int, ...] = ()):
            super().__init__(message)
            self.eigenvalue = eigenvalue
            self.blocks = blocks

    class UnsupportedOrderException(Exception):
        """
        Exception raised for derivative orders or monomial degrees beyond the supported range
        """

        pass

    def __post_init__(self):
        if self.blocks < 0:
            raise ValueError(f"Block count must be non-negative. Got {self.blocks}")
        size = self.blocks * self.grid.mode_count
        count = len(self.constant.names)
        object.__setattr__(self, "kernel", _frozen(self.kernel, (size, size), "kernel"))
        object.__setattr__(self, "xi", _frozen(self.xi, (size,), "xi"))
        object.__setattr__(self, "row", _frozen(self.row, (size,), "row"))
        xi_terms = np.zeros((count, size)) if self.xi_terms is None else self.xi_terms
        row_terms = np.zeros((count, size)) if self.row_terms is None else self.row_terms
        object.__setattr__(self, "xi_terms", _frozen(xi_terms, (count, size), "xi_terms"))
        object.__setattr__(self, "row_terms", _frozen(row_terms, (count, size), "row_terms"))
        if self.prefactor is None:
            object.__setattr__(self, "prefactor", LogScalar.one(self.grid.mode_count))
        if self.pattern is not None:
            pattern = rational_matrix(self.pattern)
            if pattern is None or pattern.shape != (self.blocks, self.blocks):
                raise ValueError("Kernel pattern must be a rational blocks x blocks matrix")
            object.__setattr__(self, "pattern", pattern)

    @staticmethod
    def unit(grid: ModeGrid, blocks: int = 1) -> "BlockGaussian":
        size = blocks * grid.mode_count
        return make_gaussian(
            grid=grid,
            blocks=blocks,
            kernel=np.zeros((size, size)),
            xi=np.zeros(size),
            row=np.zeros(size),
            pattern=np.zeros((blocks, blocks), dtype=int),
        )

    @staticmethod
    def coupling(grid: ModeGrid, small) -> "BlockGaussian":
        """
        Unit-prefactor Gaussian exp(-z^H kron(small, I) z); the block pattern is
        kept whenever every entry of `small` is an exact real number
        """

        small = np.asarray(small, dtype=object)
        blocks = small.shape[0]
        size = blocks * grid.mode_count
        return make_gaussian(
            grid=grid,
            blocks=blocks,
            kernel=block_map(small, grid.mode_count),
            xi=np.zeros(size),
            row=np.zeros(size),
            pattern=rational_matrix(small),
        )

    @property
    def parameters(self) -> Tuple[str, ...]:
        return self.constant.names

    @property
    def dimension(self) -> int:
        return self.blocks * self.grid.mode_count

    def block_indices(self, blocks: Sequence[int]) -> np.ndarray:
        n = self.grid.mode_count
        if not blocks:
            return np.zeros(0, dtype=int)
        return np.concatenate([np.arange(b * n, (b + 1) * n) for b in blocks])

    def replace(self, **changes) -> "BlockGaussian":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return make_gaussian(**values)

    def aligned(self, names: Sequence[str]) -> "BlockGaussian":
        """
        Same functional expressed over the parameter list `names`
        """

        names = tuple(names)
        if names == self.parameters:
            return self
        constant = self.constant.extended(names)
        positions = [names.index(n) for n in self.parameters]
        xi_terms = np.zeros((len(names), self.dimension), dtype=complex)
        row_terms = np.zeros((len(names), self.dimension), dtype=complex)
        xi_terms[positions] = self.xi_terms
        row_terms[positions] = self.row_terms
        return self.replace(constant=constant, xi_terms=xi_terms, row_terms=row_terms)

    def renamed(self, mapping: Mapping[str, str]) -> "BlockGaussian":
        return self.replace(constant=self.constant.renamed(mapping))

    def scaled(self, factor) -> "BlockGaussian":
        return self.replace(prefactor=self.prefactor * factor)

    def at_parameters(self, values: Mapping[str, complex]) -> "BlockGaussian":
        """
        Re-centres the parameters: the result at delta equals self at values + delta
        """

        eta = np.array([complex(values.get(n, 0.0)) for n in self.parameters], dtype=complex)
        return self.replace(
            xi=self.xi + eta @ self.xi_terms,
            row=self.row + eta @ self.row_terms,
            constant=self.constant.recentered(values),
        )

    def without_parameters(self) -> "BlockGaussian":
        return self.replace(
            constant=ParameterPolynomial.constant_only(self.constant.constant),
            xi_terms=None,
            row_terms=None,
        )

    def evaluate_line(self, point: np.ndarray, directions: Optional[np.ndarray] = None, names: Sequence[str] = ()):
        """
        Exponent at z = point + sum_a s_a directions[a] as a quadratic polynomial
        in the own parameters followed by the real line parameters s_a
        """

        names = tuple(names)
        if set(names) & set(self.parameters):
            raise ValueError(f"Line parameters {names} clash with {self.parameters}")
        z0 = np.asarray(point, dtype=complex)
        directions = np.zeros((0, self.dimension), dtype=complex) if directions is None else np.asarray(directions, dtype=complex)
        if z0.shape != (self.dimension,) or directions.shape != (len(names), self.dimension):
            raise ValueError("Point or directions do not match the functional dimension")

        K, xi, row = self.kernel, self.xi, self.row
        own = len(self.parameters)
        total = own + len(names)
        z0_bar = np.conj(z0)
        directions_bar = np.conj(directions)

        constant = -z0_bar @ K @ z0 - z0_bar @ xi - row @ z0 + self.constant.constant
        linear = np.zeros(total, dtype=complex)
        quadratic = np.zeros((total, total), dtype=complex)

        linear[:own] = self.constant.linear - self.xi_terms @ z0_bar - self.row_terms @ z0
        quadratic[:own, :own] = self.constant.quadratic

        linear[own:] = -directions_bar @ (K @ z0) - directions @ (K.T @ z0_bar) - directions_bar @ xi - directions @ row
        quadratic[own:, own:] = -directions_bar @ K @ directions.T
        # lower triangle only, symmetrization splits it over both halves
        quadratic[own:, :own] = -directions_bar @ self.xi_terms.T - directions @ self.row_terms.T

        exponent = ParameterPolynomial(self.parameters + names, constant, linear, quadratic)
        return GeneratingScalar(self.prefactor, exponent)

    def multiply(self, other: "BlockGaussian") -> "BlockGaussian":
        """
        Pointwise product; parameters with the same name are the same parameter
        """

        check_compatible(self.grid, other.grid)
        if self.blocks != other.blocks:
            raise ValueError(f"Cannot multiply functionals over {self.blocks} and {other.blocks} blocks")
        names = union_names(self.parameters, other.parameters)
        a, b = self.aligned(names), other.aligned(names)
        pattern = a.pattern + b.pattern if a.pattern is not None and b.pattern is not None else None
        return a.replace(
            kernel=a.kernel + b.kernel,
            xi=a.xi + b.xi,
            row=a.row + b.row,
            constant=a.constant + b.constant,
            prefactor=a.prefactor * b.prefactor,
            xi_terms=a.xi_terms + b.xi_terms,
            row_terms=a.row_terms + b.row_terms,
            pattern=pattern,
        )

    def add_exponent(self, kernel=None, xi=None, row=None, constant: complex = 0j) -> "BlockGaussian":
        size = self.dimension
        kernel = np.zeros((size, size)) if kernel is None else kernel
        xi = np.zeros(size) if xi is None else xi
        row = np.zeros(size) if row is None else row
        return self.replace(
            kernel=self.kernel + kernel,
            xi=self.xi + xi,
            row=self.row + row,
            constant=self.constant.shifted(constant),
            pattern=None if np.any(kernel) else self.pattern,
        )

    def substitute(self, small_map=None, shift: Optional[np.ndarray] = None, full_map: Optional[np.ndarray] = None,
                   blocks: Optional[int] = None) -> "BlockGaussian":
        """
        Returns the functional z -> self[L z + m].

        L is kron(small_map, I) for a block-level map, or an explicit full_map
        over `blocks` new blocks. The map is holomorphic, so the measure is
        untouched and no Jacobian appears.
        """

        n = self.grid.mode_count
        small = None
        if small_map is not None:
            small = np.asarray(small_map, dtype=object)
            if small.ndim != 2 or small.shape[0] != self.blocks:
                raise ValueError(f"Block map must have {self.blocks} rows")
            L = block_map(small, n)
            new_blocks = small.shape[1]
        else:
            L = np.asarray(full_map, dtype=complex)
            new_blocks = blocks
            if L.shape != (self.dimension, new_blocks * n):
                raise ValueError(f"Full map must have shape {(self.dimension, new_blocks * n)}")
        m = np.zeros(self.dimension, dtype=complex) if shift is None else np.asarray(shift, dtype=complex)

        K, xi, row = self.kernel, self.xi, self.row
        L_h = L.conj().T
        m_bar = np.conj(m)
        pattern = None
        if small is not None and self.pattern is not None:
            rational = rational_matrix(small)
            if rational is not None:
                pattern = rational.T @ self.pattern @ rational

        constant = ParameterPolynomial(
            self.parameters,
            self.constant.constant - m_bar @ K @ m - m_bar @ xi - row @ m,
            self.constant.linear - self.xi_terms @ m_bar - self.row_terms @ m,
            self.constant.quadratic,
        )
        return make_gaussian(
            grid=self.grid,
            blocks=new_blocks,
            kernel=L_h @ K @ L,
            xi=L_h @ (K @ m + xi),
            row=(m_bar @ K + row) @ L,
            constant=constant,
            prefactor=self.prefactor,
            xi_terms=self.xi_terms @ np.conj(L),
            row_terms=self.row_terms @ L,
            pattern=pattern,
        )

    def integrate_blocks(self, drop: Sequence[int], strict: bool = False):
        """
        Integrates the blocks in `drop` against D° and returns a BlockGaussian over
        the remaining blocks, a GeneratingScalar when nothing remains, or a
        DiracDelta when the integral is a pure phase.

        With strict the integrated kernel must be positive-stable; otherwise
        boundary cases (positive semidefinite Hermitian part, invertible kernel)
        are accepted as limits.
        """

        drop = sorted(set(drop))
        keep = [b for b in range(self.blocks) if b not in drop]
        if not drop:
            return self
        u, v = self.block_indices(keep), self.block_indices(drop)
        K = self.kernel
        A, B, C, D = K[np.ix_(u, u)], K[np.ix_(u, v)], K[np.ix_(v, u)], K[np.ix_(v, v)]

        if not np.any(D):
            return self._pure_phase_delta(keep, drop)
        check_integrable(D, strict, tuple(drop))

        n = self.grid.mode_count
        pattern = None
        if self.pattern is not None:
            small_d = self.pattern[np.ix_(drop, drop)]
            small_d_inv = rational_inverse(small_d)
            D_inv = block_map(small_d_inv, n)
            determinant = pattern_det(small_d, n)
            pattern = self.pattern[np.ix_(keep, keep)] - (
                self.pattern[np.ix_(keep, drop)] @ small_d_inv @ self.pattern[np.ix_(drop, keep)]
            )
        else:
            D_inv = np.linalg.inv(D)
            determinant = matrix_log_det(D)
            determinant = LogScalar(determinant.log_magnitude, determinant.phase, n)

        BD = B @ D_inv
        DC = D_inv @ C
        xi_u, xi_v = self.xi[u], self.xi[v]
        row_u, row_v = self.row[u], self.row[v]
        xi_terms_v, row_terms_v = self.xi_terms[:, v], self.row_terms[:, v]

        constant = ParameterPolynomial(
            self.parameters,
            self.constant.constant + row_v @ D_inv @ xi_v,
            self.constant.linear + row_terms_v @ (D_inv @ xi_v) + xi_terms_v @ (D_inv.T @ row_v),
            self.constant.quadratic + row_terms_v @ D_inv @ xi_terms_v.T,
        )
        prefactor = self.prefactor / determinant
        logger.debug(f"Integrated blocks {drop}, determinant {determinant}")

        if not keep:
            return GeneratingScalar(prefactor, constant)
        return make_gaussian(
            grid=self.grid,
            blocks=len(keep),
            kernel=A - B @ DC,
            xi=xi_u - BD @ xi_v,
            row=row_u - row_v @ DC,
            constant=constant,
            prefactor=prefactor,
            xi_terms=self.xi_terms[:, u] - xi_terms_v @ BD.T,
            row_terms=self.row_terms[:, u] - row_terms_v @ DC,
            pattern=pattern,
        )

    def _pure_phase_delta(self, keep, drop) -> "DiracDelta":
        u, v = self.block_indices(keep), self.block_indices(drop)
        K = self.kernel
        B, C = K[np.ix_(u, v)], K[np.ix_(v, u)]
        xi_v, row_v = self.xi[v], self.row[v]
        scale = max(1.0, float(np.abs(K).max(initial=0.0)), float(np.abs(xi_v).max(initial=0.0)))
        tolerance = STABILITY_TOLERANCE * scale

        if np.any(self.xi_terms[:, v]) or np.any(self.row_terms[:, v]):
            raise BlockGaussian.DivergenceException(
                f"Integral over blocks {tuple(drop)} is a parameter-dependent Dirac delta; "
                "its derivatives are not represented",
                blocks=tuple(drop),
            )
        if np.abs(row_v + np.conj(xi_v)).max(initial=0.0) > tolerance or np.abs(B + C.conj().T).max(initial=0.0) > tolerance:
            raise BlockGaussian.DivergenceException(
                f"Integral over blocks {tuple(drop)} has a zero kernel and is not a pure phase",
                eigenvalue=0j,
                blocks=tuple(drop),
            )

        n = self.grid.mode_count
        weight = make_gaussian(
            grid=self.grid,
            blocks=len(keep),
            kernel=K[np.ix_(u, u)],
            xi=self.xi[u],
            row=self.row[u],
            constant=self.constant,
            prefactor=self.prefactor * LogScalar.omega(n, two_pi=len(drop)),
            xi_terms=self.xi_terms[:, u],
            row_terms=self.row_terms[:, u],
            pattern=self.pattern[np.ix_(keep, keep)] if self.pattern is not None else None,
        )
        coupling_pattern = self.pattern[np.ix_(drop, keep)] if self.pattern is not None else None
        return DiracDelta(weight, C, xi_v, coupling_pattern)

    def as_scalar(self) -> GeneratingScalar:
        if self.blocks:
            raise ValueError("Only a functional over zero blocks is a scalar")
        return GeneratingScalar(self.prefactor, self.constant)

    def integrate_all(self, strict: bool = False) -> GeneratingScalar:
        """
        Integrates every block, resolving pure-phase blocks through Dirac deltas
        """

        result = self.integrate_blocks(range(self.blocks), strict)
        if isinstance(result, DiracDelta):
            result = result.integrate_out()
        return result

    def delta_factor(self, coupling: np.ndarray, coupling_pattern, blocks: Sequence[int]) -> LogScalar:
        """
        Measure factor of integral f(u) delta[C u + y] D°[u] over `blocks`
        """

        n = self.grid.mode_count
        if coupling_pattern is not None:
            magnitude = pattern_det(coupling_pattern, n)
        else:
            magnitude = matrix_log_det(coupling)
            magnitude = LogScalar(magnitude.log_magnitude, 0.0, n)
        if magnitude.is_zero:
            raise BlockGaussian.DivergenceException("Dirac delta with a singular coupling", blocks=tuple(blocks))
        magnitude = LogScalar(magnitude.log_magnitude, 0.0, n, magnitude.two_exponent, magnitude.pi_exponent)
        return LogScalar.omega(n, two_pi=-len(blocks)) / (magnitude * magnitude)


def check_integrable(matrix: np.ndarray, strict: bool, blocks: Tuple[int, ...] = ()):
    """
    Raises DivergenceException when exp(-z^H M z) is not integrable (or, with
    strict=False, not the limit of integrable functionals)
    """

    if matrix.size == 0:
        return
    eigenvalues = np.linalg.eigvals(matrix)
    tolerance = STABILITY_TOLERANCE * max(1.0, float(np.abs(matrix).max()))
    worst = complex(eigenvalues[np.argmin(eigenvalues.real)])
    if strict:
        if worst.real <= tolerance:
            raise BlockGaussian.DivergenceException(
                f"Kernel over blocks {blocks} is not positive-stable: eigenvalue {worst:.6g}",
                eigenvalue=worst,
                blocks=blocks,
            )
        return
    lowest = float(np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T)).min())
    if worst.real < -tolerance or lowest < -tolerance:
        raise BlockGaussian.DivergenceException(
            f"Kernel over blocks {blocks} has a negative direction: eigenvalue {worst:.6g}, "
            f"lowest Hermitian eigenvalue {lowest:.6g}",
            eigenvalue=worst,
            blocks=blocks,
        )
    condition = np.linalg.cond(matrix)
    if not np.isfinite(condition) or condition > CONDITION_THRESHOLD:
        raise BlockGaussian.DivergenceException(
            f"Kernel over blocks {blocks} is singular (condition estimate {condition:.3e})",
            eigenvalue=worst,
            blocks=blocks,
        )


@dataclass(frozen=True, eq=False)
class GaussianFunctional(BlockGaussian):
    """
    prefactor * exp(-alpha*⋄K⋄alpha - alpha*⋄xi - zeta*⋄alpha + c) over one copy of the grid
    """

    def __post_init__(self):
        super().__post_init__()
        if self.blocks != 1:
            raise ValueError(f"A GaussianFunctional lives on exactly one block, got {self.blocks}")

    @staticmethod
    def create(kernel: Kernel, xi: Optional[FieldFunction] = None, zeta: Optional[FieldFunction] = None,
               c: complex = 0j, prefactor: Optional[LogScalar] = None) -> "GaussianFunctional":
        grid = kernel.grid
        xi = FieldFunction.zeros(grid) if xi is None else xi
        zeta = FieldFunction.zeros(grid) if zeta is None else zeta
        check_compatible(grid, xi.grid, zeta.grid)
        return GaussianFunctional(
            grid=grid,
            blocks=1,
            kernel=kernel.balanced,
            xi=xi.balanced,
            row=np.conj(zeta.balanced),
            constant=ParameterPolynomial.constant_only(c),
            prefactor=prefactor,
            pattern=[[kernel.pattern]] if kernel.pattern is not None else None,
        )

    @property
    def K(self) -> Kernel:
        return Kernel.from_balanced(self.grid, self.kernel, self.pattern[0, 0] if self.pattern is not None else None)

    @property
    def xi_field(self) -> FieldFunction:
        return FieldFunction.from_balanced(self.grid, self.xi)

    @property
    def zeta_field(self) -> FieldFunction:
        return FieldFunction.from_balanced(self.grid, np.conj(self.row))

    @property
    def c(self) -> complex:
        return self.constant.constant

    def to_json_dict(self) -> dict:
        return {
            "grid_id": self.grid.grid_id,
            "prefactor": log_scalar_to_json(self.prefactor),
            "kernel": self.K.to_json_dict(),
            "xi": self.xi_field.to_json_dict(),
            "zeta": self.zeta_field.to_json_dict(),
            "c": [self.c.real, self.c.imag],
        }

    @staticmethod
    def from_json_dict(grid: ModeGrid, document: dict) -> "GaussianFunctional":
        return GaussianFunctional.create(
            Kernel.from_json_dict(grid, document["kernel"]),
            FieldFunction.from_json_dict(grid, document["xi"]),
            FieldFunction.from_json_dict(grid, document["zeta"]),
            complex(*document["c"]),
            log_scalar_from_json(document["prefactor"]),
        )


@dataclass(frozen=True, eq=False)
class GeneratingFunctional(GaussianFunctional):
    """
    Single-block Gaussian whose sources and constant depend on named auxiliary
    parameters: xi(eta) = xi + sum_k eta_k xi_k, zeta*(eta) = zeta* + sum_k eta_k zeta_k*,
    c(eta) quadratic
    """

    @staticmethod
    def create_generating(kernel: Kernel, constant: ParameterPolynomial,
                          xi_terms: Optional[Mapping[str, FieldFunction]] = None,
                          zeta_terms: Optional[Mapping[str, FieldFunction]] = None,
                          xi: Optional[FieldFunction] = None, zeta: Optional[FieldFunction] = None,
                          prefactor: Optional[LogScalar] = None) -> "GeneratingFunctional":
        base = GaussianFunctional.create(kernel, xi, zeta, 0j, prefactor)
        names = constant.names
        xi_rows = np.zeros((len(names), base.dimension), dtype=complex)
        row_rows = np.zeros((len(names), base.dimension), dtype=complex)
        for name, source in (xi_terms or {}).items():
            xi_rows[names.index(name)] = source.balanced
        for name, source in (zeta_terms or {}).items():
            row_rows[names.index(name)] = np.conj(source.balanced)
        return base.replace(constant=constant, xi_terms=xi_rows, row_terms=row_rows)


def make_gaussian(**values) -> BlockGaussian:
    """
    Builds the most specific functional class for the given fields
    """

    constant = values.get("constant") or ParameterPolynomial()
    values["constant"] = constant
    if values["blocks"] != 1:
        return BlockGaussian(**values)
    if constant.names:
        return GeneratingFunctional(**values)
    return GaussianFunctional(**values)


def log_scalar_to_json(value: LogScalar) -> dict:
    return {
        "log_magnitude": value.log_magnitude,
        "phase": value.phase,
        "mode_count": value.mode_count,
        "omega": {"2": str(value.two_exponent), "pi": str(value.pi_exponent)},
    }


def log_scalar_from_json(document: dict) -> LogScalar:
    return LogScalar(
        float(document["log_magnitude"]),
        float(document["phase"]),
        int(document["mode_count"]),
        Fraction(document["omega"]["2"]),
        Fraction(document["omega"]["pi"]),
    )


@dataclass(frozen=True, eq=False)
class RealGaussianForm:
    """
    prefactor * exp(-x^T S x + t(eta)^T x + c(eta)) over stacked real blocks.

    Each block is a real quadrature field in balanced coordinates whose kind is
    'q' (measure prod dq~) or 'p' (measure prod dp~ / 2 pi). S is complex symmetric.
    """

    grid: ModeGrid
    kinds: Tuple[str, ...]
    matrix: np.ndarray
    linear: np.ndarray
    constant: ParameterPolynomial = field(default_factory=ParameterPolynomial)
    prefactor: Optional[LogScalar] = None
    linear_terms: Optional[np.ndarray] = None

    def __post_init__(self):
        kinds = tuple(self.kinds)
        if any(kind not in ("q", "p") for kind in kinds):
            raise ValueError(f"Block kinds must be 'q' or 'p'. Got {kinds}")
        size = len(kinds) * self.grid.mode_count
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (size, size):
            raise ValueError(f"Matrix must have shape {(size, size)}, got {matrix.shape}")
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "matrix", _frozen(0.5 * (matrix + matrix.T), (size, size), "matrix"))
        object.__setattr__(self, "linear", _frozen(self.linear, (size,), "linear"))
        count = len(self.constant.names)
        terms = np.zeros((count, size)) if self.linear_terms is None else self.linear_terms
        object.__setattr__(self, "linear_terms", _frozen(terms, (count, size), "linear_terms"))
        if self.prefactor is None:
            object.__setattr__(self, "prefactor", LogScalar.one(self.grid.mode_count))

    @property
    def blocks(self) -> int:
        return len(self.kinds)

    @property
    def parameters(self) -> Tuple[str, ...]:
        return self.constant.names

    @property
    def dimension(self) -> int:
        return self.blocks * self.grid.mode_count

    def block_indices(self, blocks: Sequence[int]) -> np.ndarray:
        n = self.grid.mode_count
        if not blocks:
            return np.zeros(0, dtype=int)
        return np.concatenate([np.arange(b * n, (b + 1) * n) for b in blocks])

    def replace(self, **changes) -> "RealGaussianForm":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return RealGaussianForm(**values)

    def scaled(self, factor) -> "RealGaussianForm":
        return self.replace(prefactor=self.prefactor * factor)

    def evaluate(self, x: np.ndarray) -> GeneratingScalar:
        x = np.asarray(x, dtype=complex)
        constant = ParameterPolynomial(
            self.parameters,
            self.constant.constant - x @ self.matrix @ x + self.linear @ x,
            self.constant.linear + self.linear_terms @ x,
            self.constant.quadratic,
        )
        return GeneratingScalar(self.prefactor, constant)

    def add_exponent(self, matrix=None, linear=None) -> "RealGaussianForm":
        size = self.dimension
        matrix = np.zeros((size, size)) if matrix is None else np.asarray(matrix)
        linear = np.zeros(size) if linear is None else np.asarray(linear)
        return self.replace(matrix=self.matrix + matrix, linear=self.linear + linear)

    def substitute(self, full_map: np.ndarray, kinds: Sequence[str], shift: Optional[np.ndarray] = None) -> "RealGaussianForm":
        """
        Returns the form y -> self[L y + m] over new blocks of the given kinds
        """

        L = np.asarray(full_map, dtype=complex)
        kinds = tuple(kinds)
        if L.shape != (self.dimension, len(kinds) * self.grid.mode_count):
            raise ValueError("Substitution map does not match the block layout")
        m = np.zeros(self.dimension, dtype=complex) if shift is None else np.asarray(shift, dtype=complex)
        S, t = self.matrix, self.linear
        constant = ParameterPolynomial(
            self.parameters,
            self.constant.constant - m @ S @ m + t @ m,
            self.constant.linear + self.linear_terms @ m,
            self.constant.quadratic,
        )
        return RealGaussianForm(
            grid=self.grid,
            kinds=kinds,
            matrix=L.T @ S @ L,
            linear=L.T @ (t - 2 * S @ m),
            constant=constant,
            prefactor=self.prefactor,
            linear_terms=self.linear_terms @ L,
        )

    def integrate_blocks(self, drop: Sequence[int], strict: bool = False):
        """
        Integrates the blocks in `drop` against their q/p measures
        """

        drop = sorted(set(drop))
        keep = [b for b in range(self.blocks) if b not in drop]
        if not drop:
            return self
        x, y = self.block_indices(drop), self.block_indices(keep)
        S = self.matrix
        A, B, C = S[np.ix_(x, x)], S[np.ix_(x, y)], S[np.ix_(y, y)]
        t_x, t_y = self.linear[x], self.linear[y]
        terms_x, terms_y = self.linear_terms[:, x], self.linear_terms[:, y]
        n = self.grid.mode_count
        p_blocks = sum(1 for b in drop if self.kinds[b] == "p")
        q_blocks = len(drop) - p_blocks

        if not np.any(A):
            return self._fourier_delta(keep, drop, q_blocks)

        symmetric_part = A.real
        lowest = float(np.linalg.eigvalsh(symmetric_part).min())
        tolerance = STABILITY_TOLERANCE * max(1.0, float(np.abs(A).max()))
        if (strict and lowest <= tolerance) or lowest < -tolerance:
            raise BlockGaussian.DivergenceException(
                f"Real part of the quadratic form over blocks {tuple(drop)} is not positive definite "
                f"(lowest eigenvalue {lowest:.6g})",
                eigenvalue=lowest,
                blocks=tuple(drop),
            )
        condition = np.linalg.cond(A)
        if not np.isfinite(condition) or condition > CONDITION_THRESHOLD:
            raise BlockGaussian.DivergenceException(
                f"Quadratic form over blocks {tuple(drop)} is singular (condition estimate {condition:.3e})",
                blocks=tuple(drop),
            )

        A_inv = np.linalg.inv(A)
        A_inv = 0.5 * (A_inv + A_inv.T)
        eigenvalues = np.linalg.eigvals(A).astype(complex)
        root_det = LogScalar.exp(-0.5 * np.sum(np.log(eigenvalues)), n)
        factor = root_det * LogScalar.omega(n, pi=Fraction(len(drop), 2)) * LogScalar.omega(n, two_pi=-p_blocks)

        constant = ParameterPolynomial(
            self.parameters,
            self.constant.constant + 0.25 * t_x @ A_inv @ t_x,
            self.constant.linear + 0.5 * terms_x @ (A_inv @ t_x),
            self.constant.quadratic + 0.25 * terms_x @ A_inv @ terms_x.T,
        )
        prefactor = self.prefactor * factor
        if not keep:
            return GeneratingScalar(prefactor, constant)
        A_inv_B = A_inv @ B
        return RealGaussianForm(
            grid=self.grid,
            kinds=tuple(self.kinds[b] for b in keep),
            matrix=C - B.T @ A_inv_B,
            linear=t_y - A_inv_B.T @ t_x,
            constant=constant,
            prefactor=prefactor,
            linear_terms=terms_y - terms_x @ A_inv_B,
        )

    def _fourier_delta(self, keep, drop, q_blocks) -> "DiracDelta":
        x, y = self.block_indices(drop), self.block_indices(keep)
        S = self.matrix
        B = S[np.ix_(x, y)]
        t_x = self.linear[x]
        scale = max(1.0, float(np.abs(S).max(initial=0.0)), float(np.abs(t_x).max(initial=0.0)))
        if np.any(self.linear_terms[:, x]):
            raise BlockGaussian.DivergenceException(
                f"Fourier integral over blocks {tuple(drop)} depends on parameters", blocks=tuple(drop)
            )
        if np.abs(t_x.real).max(initial=0.0) > STABILITY_TOLERANCE * scale or np.abs(B.real).max(initial=0.0) > STABILITY_TOLERANCE * scale:
            raise BlockGaussian.DivergenceException(
                f"Integral over blocks {tuple(drop)} has no quadratic part and is not a pure phase",
                blocks=tuple(drop),
            )
        n = self.grid.mode_count
        weight = RealGaussianForm(
            grid=self.grid,
            kinds=tuple(self.kinds[b] for b in keep),
            matrix=S[np.ix_(y, y)],
            linear=self.linear[y],
            constant=self.constant,
            prefactor=self.prefactor * LogScalar.omega(n, two_pi=q_blocks),
            linear_terms=self.linear_terms[:, y],
        )
        # exp(i k^T x) with k = Im(t_x) - 2 Im(B) y
        return DiracDelta(weight, -2 * B.imag, t_x.imag)

    def integrate_all(self, strict: bool = False) -> GeneratingScalar:
        result = self.integrate_blocks(range(self.blocks), strict)
        if isinstance(result, DiracDelta):
            result = result.integrate_out()
        return result

    def as_scalar(self) -> GeneratingScalar:
        if self.blocks:
            raise ValueError("Only a form over zero blocks is a scalar")
        return GeneratingScalar(self.prefactor, self.constant)

    def delta_factor(self, coupling: np.ndarray, coupling_pattern, blocks: Sequence[int]) -> LogScalar:
        n = self.grid.mode_count
        magnitude = matrix_log_det(np.asarray(coupling, dtype=complex))
        if magnitude.is_zero:
            raise BlockGaussian.DivergenceException("Dirac delta with a singular coupling", blocks=tuple(blocks))
        p_blocks = sum(1 for b in blocks if self.kinds[b] == "p")
        return LogScalar.omega(n, two_pi=-p_blocks) * LogScalar(-magnitude.log_magnitude, 0.0, n)


@dataclass(frozen=True, eq=False)
class DiracDelta:
    """
    Distributional result weight(u) * delta[coupling u + offset].

    For a complex weight (BlockGaussian) the delta is delta[alpha] = delta[q]delta[p]
    on balanced complex vectors; for a real weight (RealGaussianForm) it is the
    product of real deltas of the balanced components.
    """

    weight: Union[BlockGaussian, RealGaussianForm]
    coupling: np.ndarray
    offset: np.ndarray
    coupling_pattern: Optional[np.ndarray] = field(default=None, repr=False)

    is_distributional: ClassVar[bool] = True

    def __post_init__(self):
        coupling = np.array(self.coupling, dtype=complex)
        offset = np.array(self.offset, dtype=complex)
        if coupling.shape != (offset.shape[0], self.weight.dimension):
            raise ValueError(f"Coupling shape {coupling.shape} does not match the weight dimension")
        coupling.setflags(write=False)
        offset.setflags(write=False)
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "offset", offset)
        if self.coupling_pattern is not None:
            object.__setattr__(self, "coupling_pattern", rational_matrix(self.coupling_pattern))

    @property
    def is_complex(self) -> bool:
        return isinstance(self.weight, BlockGaussian)

    def support(self) -> np.ndarray:
        """
        Point where the delta argument vanishes (balanced coordinates)
        """

        if self.coupling.shape[0] != self.coupling.shape[1]:
            raise ValueError("Support is only defined for a square coupling")
        return -np.linalg.solve(self.coupling, self.offset)

    def multiply(self, other: Union[BlockGaussian, RealGaussianForm]) -> "DiracDelta":
        if not self.is_complex:
            raise TypeError("Only complex Dirac deltas can be multiplied by Gaussian functionals")
        return DiracDelta(self.weight.multiply(other), self.coupling, self.offset, self.coupling_pattern)

    def integrate_out(self, blocks: Optional[Sequence[int]] = None):
        """
        Resolves the delta by integrating the given blocks of its variable
        (all of them by default)
        """

        weight = self.weight
        n = weight.grid.mode_count
        blocks = list(range(weight.blocks)) if blocks is None else sorted(set(blocks))
        keep = [b for b in range(weight.blocks) if b not in blocks]
        drop_index, keep_index = weight.block_indices(blocks), weight.block_indices(keep)
        c_drop = self.coupling[:, drop_index]
        c_keep = self.coupling[:, keep_index]
        if c_drop.shape[0] != c_drop.shape[1]:
            raise ValueError(
                f"Delta of dimension {c_drop.shape[0]} cannot be resolved over {c_drop.shape[1]} variables"
            )

        small_pattern = None
        if self.coupling_pattern is not None and self.is_complex:
            small_pattern = self.coupling_pattern[:, blocks]
        factor = weight.delta_factor(c_drop, small_pattern, blocks)

        c_drop_inv = np.linalg.inv(c_drop)
        shift = np.zeros(weight.dimension, dtype=complex)
        shift[drop_index] = -c_drop_inv @ self.offset

        if self.is_complex and small_pattern is not None and weight.pattern is not None:
            small_inv = rational_inverse(small_pattern)
            small_map = np.empty((weight.blocks, len(keep)), dtype=object)
            small_map[:, :] = Fraction(0)
            for column, b in enumerate(keep):
                small_map[b, column] = Fraction(1)
            if keep:
                small_map[blocks, :] = -(small_inv @ self.coupling_pattern[:, keep])
            reduced = weight.substitute(small_map=small_map, shift=shift)
        else:
            full_map = np.zeros((weight.dimension, keep_index.size), dtype=complex)
            full_map[keep_index, np.arange(keep_index.size)] = 1.0
            if keep:
                full_map[drop_index, :] = -c_drop_inv @ c_keep
            if self.is_complex:
                reduced = weight.substitute(full_map=full_map, shift=shift, blocks=len(keep))
            else:
                reduced = weight.substitute(full_map, tuple(weight.kinds[b] for b in keep), shift)

        reduced = reduced.scaled(factor)
        if not keep:
            return reduced.as_scalar()
        return reduced


@dataclass(frozen=True)
class LinearForm:
    """
    L(alpha) = u*⋄alpha + alpha*⋄v + constant
    """

    grid: ModeGrid
    analytic: Optional[FieldFunction] = None
    conjugate: Optional[FieldFunction] = None
    constant: complex = 0j

    def value(self, alpha: FieldFunction) -> complex:
        check_compatible(self.grid, alpha.grid)
        total = complex(self.constant)
        if self.analytic is not None:
            total += np.vdot(self.analytic.balanced, alpha.balanced)
        if self.conjugate is not None:
            total += np.vdot(alpha.balanced, self.conjugate.balanced)
        return total

    def sources(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        (xi, row) contributions of exp(t L(alpha)) per unit t
        """

        n = self.grid.mode_count
        xi = -self.conjugate.balanced if self.conjugate is not None else np.zeros(n, dtype=complex)
        row = -np.conj(self.analytic.balanced) if self.analytic is not None else np.zeros(n, dtype=complex)
        return xi, row


Term = Tuple[complex, Tuple[Tuple[str, int], ...]]


@dataclass(frozen=True, eq=False)
class CoefficientFunctional:
    """
    Polynomial-times-Gaussian functional: sum over terms of weight times the
    mixed parameter derivative of a generating functional at the origin
    """

    functional: BlockGaussian
    terms: Tuple[Term, ...] = ((1.0, ()),)

    def __post_init__(self):
        terms = tuple((complex(weight), normalize_orders(orders)) for weight, orders in self.terms)
        for _, orders in terms:
            for name, order in orders:
                if order > MAX_EXTRACTION_ORDER:
                    raise BlockGaussian.UnsupportedOrderException(
                        f"Derivative order {order} in {name} exceeds the supported maximum {MAX_EXTRACTION_ORDER}"
                    )
        object.__setattr__(self, "terms", terms)

    @staticmethod
    def plain(functional: BlockGaussian) -> "CoefficientFunctional":
        return CoefficientFunctional(functional)

    @property
    def grid(self) -> ModeGrid:
        return self.functional.grid

    @property
    def is_plain(self) -> bool:
        return self.terms == ((1 + 0j, ()),)

    def combine(self, scalar: GeneratingScalar) -> LogScalar:
        return LogScalar.sum(scalar.derivative(orders) * weight for weight, orders in self.terms)

    def evaluate_balanced(self, z: np.ndarray) -> LogScalar:
        return self.combine(self.functional.evaluate_line(z))

    def evaluate(self, alpha: FieldFunction) -> LogScalar:
        check_compatible(self.grid, alpha.grid)
        return self.evaluate_balanced(alpha.balanced)

    def integrate(self, strict: bool = False) -> LogScalar:
        return self.combine(self.functional.integrate_all(strict))

    def mapped(self, function) -> "CoefficientFunctional":
        return CoefficientFunctional(function(self.functional), self.terms)

    def renamed(self, mapping: Mapping[str, str]) -> "CoefficientFunctional":
        terms = tuple(
            (weight, tuple((mapping.get(name, name), order) for name, order in orders)) for weight, orders in self.terms
        )
        return CoefficientFunctional(self.functional.renamed(mapping), terms)

    def disjoint_from(self, taken: Sequence[str]) -> "CoefficientFunctional":
        """
        Renames parameters that clash with `taken`
        """

        taken = set(taken)
        mapping = {}
        for name in self.functional.parameters:
            if name in taken:
                mapping[name] = fresh_name(name, taken | set(self.functional.parameters) | set(mapping.values()))
        return self.renamed(mapping) if mapping else self

    def multiply(self, other: "CoefficientFunctional") -> "CoefficientFunctional":
        other = other.disjoint_from(self.functional.parameters)
        terms = tuple(
            (wa * wb, oa + ob) for wa, oa in self.terms for wb, ob in other.terms
        )
        return CoefficientFunctional(self.functional.multiply(other.functional), terms)

    def scaled(self, factor: complex) -> "CoefficientFunctional":
        return CoefficientFunctional(self.functional, tuple((w * factor, o) for w, o in self.terms))


def as_coefficient_functional(value) -> CoefficientFunctional:
    if isinstance(value, CoefficientFunctional):
        return value
    if isinstance(value, BlockGaussian):
        return CoefficientFunctional(value)
    raise TypeError(f"Cannot use {type(value)} as a functional")


def evaluate(G, alpha: FieldFunction):
    """
    Pointwise value of a Gaussian (LogScalar), generating (GeneratingScalar) or
    coefficient functional (LogScalar)
    """

    if isinstance(G, CoefficientFunctional):
        return G.evaluate(alpha)
    check_compatible(G.grid, alpha.grid)
    result = G.evaluate_line(alpha.balanced)
    return result if G.parameters else result.value()


def integrate(G):
    """
    Functional integral over D°[alpha] of a positive-stable Gaussian
    """

    if isinstance(G, CoefficientFunctional):
        return G.integrate(strict=True)
    result = G.integrate_blocks(range(G.blocks), strict=True)
    if isinstance(result, DiracDelta) or G.parameters:
        return result
    return result.value()


def integrate_real(R: RealGaussianForm, blocks: Optional[Sequence[int]] = None):
    """
    Integrates the given real blocks (all by default); a pure Fourier kernel
    yields a DiracDelta
    """

    blocks = range(R.blocks) if blocks is None else blocks
    result = R.integrate_blocks(blocks, strict=True)
    if isinstance(result, GeneratingScalar) and not R.parameters:
        return result.value()
    return result


def multiply(first, second):
    if isinstance(first, CoefficientFunctional) or isinstance(second, CoefficientFunctional):
        return as_coefficient_functional(first).multiply(as_coefficient_functional(second))
    return first.multiply(second)


def moment_integrate(G, monomial: Sequence[LinearForm]) -> LogScalar:
    """
    Integral of prod_k L_k(alpha) * G[alpha] over D°[alpha], by differentiating
    exp(sum_k t_k L_k(alpha)) once in every t_k
    """

    if len(monomial) > MAX_MONOMIAL_DEGREE:
        raise BlockGaussian.UnsupportedOrderException(
            f"Monomials of degree {len(monomial)} exceed the supported degree {MAX_MONOMIAL_DEGREE}"
        )
    functional = as_coefficient_functional(G)
    if functional.functional.blocks != 1:
        raise ValueError("Moments are defined for single-block functionals")
    taken = set(functional.functional.parameters)
    names = []
    for k in range(len(monomial)):
        names.append(fresh_name(f"_t{k}", taken | set(names)))

    xi_rows, row_rows = [], []
    for form in monomial:
        check_compatible(functional.grid, form.grid)
        xi, row = form.sources()
        xi_rows.append(xi)
        row_rows.append(row)
    size = functional.grid.mode_count
    sources = BlockGaussian.unit(functional.grid).replace(
        constant=ParameterPolynomial(tuple(names), 0j, [complex(form.constant) for form in monomial]),
        xi_terms=np.array(xi_rows).reshape((len(names), size)),
        row_terms=np.array(row_rows).reshape((len(names), size)),
    )
    extra = tuple((name, 1) for name in names)
    terms = tuple((weight, orders + extra) for weight, orders in functional.terms)
    return CoefficientFunctional(functional.functional.multiply(sources), terms).integrate(strict=True)


def extract_coefficient(GF: BlockGaussian, orders, at: Optional[Mapping[str, complex]] = None,
                        weight: complex = 1.0) -> CoefficientFunctional:
    """
    Mixed derivative of a generating functional in its parameters, at zero or at
    the given parameter values
    """

    orders = normalize_orders(orders)
    for name, order in orders:
        if order > MAX_EXTRACTION_ORDER:
            raise BlockGaussian.UnsupportedOrderException(
                f"Derivative order {order} in {name} exceeds the supported maximum {MAX_EXTRACTION_ORDER}"
            )
        if name not in GF.parameters:
            raise ValueError(f"{name} is not a parameter of the functional (parameters: {GF.parameters})")
    functional = GF.at_parameters(at) if at else GF
    return CoefficientFunctional(functional, ((weight, orders),))


def to_real_form(G: BlockGaussian) -> RealGaussianForm:
    """
    Rewrites a complex functional over blocks alpha_b as a real form over
    (q_1..q_b, p_1..p_b) with alpha = (q + i p)/sqrt(2)
    """

    K = G.kernel
    symmetric = 0.25 * (K + K.T)
    skew = 0.25j * (K - K.T)
    matrix = np.block([[symmetric, skew], [-skew, symmetric]])
    root = math.sqrt(2.0)

    def split(xi, row):
        return np.concatenate([-(xi + row) / root, 1j * (xi - row) / root], axis=-1)

    return RealGaussianForm(
        grid=G.grid,
        kinds=("q",) * G.blocks + ("p",) * G.blocks,
        matrix=matrix,
        linear=split(G.xi, G.row),
        constant=G.constant,
        prefactor=G.prefactor,
        linear_terms=split(G.xi_terms, G.row_terms),
    )


def from_real_form(R: RealGaussianForm, tol: float = 1e-10) -> BlockGaussian:
    """
    Inverse of to_real_form; the form must come from a functional without
    anomalous alpha⋄alpha terms
    """

    half = R.blocks // 2
    if R.kinds != ("q",) * half + ("p",) * half:
        raise ValueError(f"Expected q blocks followed by p blocks, got {R.kinds}")
    size = half * R.grid.mode_count
    S = R.matrix
    S_qq, S_qp, S_pp = S[:size, :size], S[:size, size:], S[size:, size:]
    scale = max(1.0, float(np.abs(S).max(initial=0.0)))
    if np.abs(S_qq - S_pp).max(initial=0.0) > tol * scale or np.abs(S_qp + S_qp.T).max(initial=0.0) > tol * scale:
        raise ValueError("Real form contains anomalous terms and has no complex canonical form")
    root = math.sqrt(2.0)
    t_q, t_p = R.linear[:size], R.linear[size:]
    terms_q, terms_p = R.linear_terms[:, :size], R.linear_terms[:, size:]
    return make_gaussian(
        grid=R.grid,
        blocks=half,
        kernel=2 * S_qq - 2j * S_qp,
        xi=-(t_q + 1j * t_p) / root,
        row=-(t_q - 1j * t_p) / root,
        constant=R.constant,
        prefactor=R.prefactor,
        xi_terms=-(terms_q + 1j * terms_p) / root,
        row_terms=-(terms_q - 1j * terms_p) / root,
    )
