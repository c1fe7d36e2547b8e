import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.linalg import expm, logm

from .log_scalar import LogScalar, exact_fraction
from .mode_space import FieldFunction, ModeGrid, check_compatible

logger = logging.getLogger(__name__)

CONDITION_THRESHOLD = 1e12
BRANCH_CUT_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class Kernel:
    """
    Two-index complex array over the modes of a grid.

    Every ⋄-operation goes through the balanced matrix sqrt(W) K sqrt(W), which
    is similar to the weighted matrix diag(w) K. Kernels that are an exact
    rational multiple of the identity kernel carry that multiple as `pattern`,
    so determinants of such kernels stay exact.
    """

    grid: ModeGrid
    entries: np.ndarray
    pattern: Optional[Fraction] = None

    class SingularKernelException(Exception):
        """
        Exception raised when inverting a singular or ill-conditioned kernel
        """

        def __init__(self, message: str, condition: float):
            super().__init__(message)
            self.condition = condition

    class BranchCutException(Exception):
        """
        Exception raised when a kernel logarithm would cross the principal branch cut
        """

        pass

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex, copy=True)
        n = self.grid.mode_count
        if entries.shape != (n, n):
            raise ValueError(f"Kernel on grid {self.grid.grid_id} must be {n}x{n}, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("Kernel entries must be finite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        if self.pattern is not None:
            object.__setattr__(self, "pattern", exact_fraction(self.pattern))

    @staticmethod
    def from_balanced(grid: ModeGrid, balanced: np.ndarray, pattern: Optional[Fraction] = None) -> "Kernel":
        root = grid.sqrt_weights
        return Kernel(grid, np.asarray(balanced) / np.outer(root, root), pattern)

    @property
    def balanced(self) -> np.ndarray:
        if self.pattern is not None:
            return float(self.pattern) * np.eye(self.grid.mode_count, dtype=complex)
        root = self.grid.sqrt_weights
        return np.outer(root, root) * self.entries

    @property
    def weighted(self) -> np.ndarray:
        return self.grid.weights[:, None] * self.entries

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        balanced = self.balanced
        return np.allclose(balanced, balanced.conj().T, rtol=0.0, atol=tol * max(1.0, np.abs(balanced).max()))

    def adjoint(self) -> "Kernel":
        return Kernel(self.grid, self.entries.conj().T, self.pattern)

    def _other_entries(self, other: "Kernel") -> np.ndarray:
        if not isinstance(other, Kernel):
            raise TypeError(f"Cannot combine a Kernel with {type(other)}")
        check_compatible(self.grid, other.grid)
        return other.entries

    def __add__(self, other: "Kernel") -> "Kernel":
        entries = self.entries + self._other_entries(other)
        pattern = self.pattern + other.pattern if self.pattern is not None and other.pattern is not None else None
        return Kernel(self.grid, entries, pattern)

    def __sub__(self, other: "Kernel") -> "Kernel":
        return self + (-other)

    def __neg__(self) -> "Kernel":
        return Kernel(self.grid, -self.entries, -self.pattern if self.pattern is not None else None)

    def __mul__(self, scalar) -> "Kernel":
        if isinstance(scalar, Kernel):
            raise TypeError("Use compose() for the ⋄-product of kernels")
        pattern = None
        if self.pattern is not None:
            try:
                pattern = self.pattern * exact_fraction(scalar)
            except (ValueError, TypeError, OverflowError):
                pattern = None
        return Kernel(self.grid, complex(scalar) * self.entries, pattern)

    __rmul__ = __mul__

    def to_json_dict(self) -> dict:
        interleaved = np.empty(2 * self.entries.size)
        flat = self.entries.ravel(order="C")
        interleaved[0::2] = flat.real
        interleaved[1::2] = flat.imag
        document = {"grid_id": self.grid.grid_id, "entries": interleaved.tolist()}
        if self.pattern is not None:
            document["pattern"] = str(self.pattern)
        return document

    @staticmethod
    def from_json_dict(grid: ModeGrid, document: dict) -> "Kernel":
        if document.get("grid_id") not in (None, grid.grid_id):
            raise ModeGrid.GridMismatchException(f"Kernel is keyed to grid {document['grid_id']}, not {grid.grid_id}")
        interleaved = np.asarray(document["entries"], dtype=float)
        n = grid.mode_count
        entries = (interleaved[0::2] + 1j * interleaved[1::2]).reshape((n, n), order="C")
        pattern = Fraction(document["pattern"]) if "pattern" in document else None
        return Kernel(grid, entries, pattern)


def identity_kernel(grid: ModeGrid, scale=1) -> Kernel:
    """
    Returns scale·𝟏 with entries scale·δ_ij / w_i
    """

    try:
        pattern = exact_fraction(scale)
    except (ValueError, TypeError, OverflowError):
        pattern = None
    return Kernel(grid, complex(scale) * np.diag(1.0 / grid.weights), pattern)


def zero_kernel(grid: ModeGrid) -> Kernel:
    return identity_kernel(grid, 0)


def contract(f: FieldFunction, kernel: Kernel, g: FieldFunction) -> complex:
    """
    Returns f*⋄B⋄g = sum_ij w_i conj(f_i) B_ij w_j g_j
    """

    check_compatible(f.grid, kernel.grid, g.grid)
    return complex(np.vdot(f.balanced, kernel.balanced @ g.balanced))


def apply(kernel: Kernel, f: FieldFunction) -> FieldFunction:
    """
    Returns the field B⋄f
    """

    check_compatible(kernel.grid, f.grid)
    return FieldFunction.from_balanced(f.grid, kernel.balanced @ f.balanced)


def compose(a: Kernel, b: Kernel) -> Kernel:
    check_compatible(a.grid, b.grid)
    pattern = a.pattern * b.pattern if a.pattern is not None and b.pattern is not None else None
    return Kernel.from_balanced(a.grid, a.balanced @ b.balanced, pattern)


def condition_number(kernel: Kernel) -> float:
    """
    Condition estimate of the weighted matrix diag(w)·K
    """

    if kernel.pattern is not None:
        return np.inf if kernel.pattern == 0 else 1.0
    return float(np.linalg.cond(kernel.weighted))


def inverse(kernel: Kernel) -> Kernel:
    if kernel.pattern is not None:
        if kernel.pattern == 0:
            raise Kernel.SingularKernelException("The zero kernel has no inverse", np.inf)
        return identity_kernel(kernel.grid, 1 / kernel.pattern)

    condition = condition_number(kernel)
    if not np.isfinite(condition) or condition > CONDITION_THRESHOLD:
        raise Kernel.SingularKernelException(
            f"Kernel is singular or ill-conditioned (condition estimate {condition:.3e})", condition
        )
    return Kernel.from_balanced(kernel.grid, np.linalg.inv(kernel.balanced))


def trace(kernel: Kernel) -> complex:
    return complex(np.sum(kernel.grid.weights * np.diag(kernel.entries)))


def kernel_exp(kernel: Kernel) -> Kernel:
    """
    Returns exp⋄(H) = 𝟏 + sum_n H^⋄n / n!
    """

    return Kernel.from_balanced(kernel.grid, expm(kernel.balanced))


def _check_branch_cut(eigenvalues: np.ndarray):
    scale = max(1.0, float(np.abs(eigenvalues).max(initial=0.0)))
    for eigenvalue in eigenvalues:
        if eigenvalue.real <= 0 and abs(eigenvalue.imag) <= BRANCH_CUT_TOLERANCE * scale:
            raise Kernel.BranchCutException(
                f"Eigenvalue {eigenvalue:.6g} lies on the closed negative real axis; "
                "the principal logarithm is undefined"
            )


def kernel_log(kernel: Kernel) -> Kernel:
    """
    Principal ⋄-logarithm, the inverse of kernel_exp
    """

    balanced = kernel.balanced
    _check_branch_cut(np.linalg.eigvals(balanced))
    return Kernel.from_balanced(kernel.grid, np.asarray(logm(balanced), dtype=complex))


def matrix_log_det(matrix: np.ndarray) -> LogScalar:
    """
    Determinant of a plain matrix as the exponential of the trace of its
    principal logarithm (sum of principal eigenvalue logarithms)
    """

    if matrix.shape[0] == 0:
        return LogScalar.one()
    eigenvalues = np.linalg.eigvals(matrix)
    if np.any(eigenvalues == 0):
        return LogScalar.zero()
    log_det = np.sum(np.log(eigenvalues.astype(complex)))
    return LogScalar.exp(log_det)


def pattern_det(pattern: np.ndarray, mode_count: int) -> LogScalar:
    """
    Exact determinant of kron(pattern, 𝟏 balanced) for a small rational pattern
    """

    value = rational_det(pattern)
    if value == 0:
        return LogScalar.zero(mode_count)
    if value < 0:
        return -LogScalar.power_of(-value, mode_count) if mode_count % 2 else LogScalar.power_of(-value, mode_count)
    return LogScalar.power_of(value, mode_count)


def det(kernel: Kernel) -> LogScalar:
    """
    Functional determinant det{K} = exp(tr{ln⋄ K}); a singular kernel gives LogScalar.zero
    """

    n = kernel.grid.mode_count
    if kernel.pattern is not None:
        return pattern_det(np.array([[kernel.pattern]], dtype=object), n)
    value = matrix_log_det(kernel.balanced)
    return LogScalar(value.log_magnitude, value.phase, n)


def rational_det(matrix: np.ndarray) -> Fraction:
    """
    Fraction-exact determinant by Gaussian elimination
    """

    rows = [[exact_fraction(x) for x in row] for row in matrix]
    size = len(rows)
    result = Fraction(1)
    for column in range(size):
        pivot = next((r for r in range(column, size) if rows[r][column] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != column:
            rows[column], rows[pivot] = rows[pivot], rows[column]
            result = -result
        result *= rows[column][column]
        for r in range(column + 1, size):
            factor = rows[r][column] / rows[column][column]
            if factor:
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[column])]
    return result


def rational_inverse(matrix: np.ndarray) -> np.ndarray:
    """
    Fraction-exact inverse by Gauss-Jordan elimination
    """

    size = len(matrix)
    rows = [[exact_fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(size)] for i, row in enumerate(matrix)]
    for column in range(size):
        pivot = next((r for r in range(column, size) if rows[r][column] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("Singular rational pattern")
        rows[column], rows[pivot] = rows[pivot], rows[column]
        head = rows[column][column]
        rows[column] = [x / head for x in rows[column]]
        for r in range(size):
            if r != column and rows[r][column] != 0:
                factor = rows[r][column]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[column])]
    return np.array([row[size:] for row in rows], dtype=object)
