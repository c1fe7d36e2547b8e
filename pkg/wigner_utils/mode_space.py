import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np


def _frozen_array(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """
    A finite set of modes with positive quadrature weights.

    The continuum measure is absorbed into the weights, so every contraction
    over modes is a weighted sum. Grids are immutable and compared by mode
    count and exact weights only; labels are metadata.
    """

    mode_count: int
    weights: np.ndarray
    labels: Optional[Tuple] = field(default=None, compare=False)

    class GridMismatchException(Exception):
        """
        Exception raised when two objects living on different grids are combined
        """

        pass

    def __post_init__(self):
        if isinstance(self.mode_count, bool) or not isinstance(self.mode_count, (int, np.integer)):
            raise TypeError(f"mode_count must be an integer. Got {type(self.mode_count)}")
        if self.mode_count < 1:
            raise ValueError(f"mode_count must be at least 1. Got {self.mode_count}")

        weights = _frozen_array(self.weights, float)
        if weights.shape != (self.mode_count,):
            raise ValueError(f"Expected {self.mode_count} weights, got shape {weights.shape}")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ValueError(f"All weights must be finite and positive. Got {weights.tolist()}")
        object.__setattr__(self, "mode_count", int(self.mode_count))
        object.__setattr__(self, "weights", weights)

        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != self.mode_count:
                raise ValueError(f"Expected {self.mode_count} labels, got {len(labels)}")
            object.__setattr__(self, "labels", labels)

    @staticmethod
    def uniform(mode_count: int) -> "ModeGrid":
        return ModeGrid(mode_count, np.ones(mode_count))

    @staticmethod
    def from_weights(weights: Sequence[float], labels: Optional[Sequence] = None) -> "ModeGrid":
        return ModeGrid(len(weights), weights, labels)

    @staticmethod
    def random(mode_count: int, rng: np.random.Generator, low: float = 0.5, high: float = 2.0) -> "ModeGrid":
        return ModeGrid(mode_count, rng.uniform(low, high, size=mode_count))

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    @property
    def grid_id(self) -> str:
        """
        Short content hash used to key serialized fields and kernels to a grid
        """

        digest = hashlib.sha1(self.weights.tobytes())
        digest.update(str(self.mode_count).encode())
        return digest.hexdigest()[:12]

    def is_compatible(self, other: "ModeGrid") -> bool:
        if self is other:
            return True
        return self.mode_count == other.mode_count and np.array_equal(self.weights, other.weights)

    def __eq__(self, other):
        if not isinstance(other, ModeGrid):
            return NotImplemented
        return self.is_compatible(other)

    def __hash__(self):
        return hash(self.grid_id)

    def to_json_dict(self) -> dict:
        document = {"mode_count": self.mode_count, "weights": self.weights.tolist()}
        if self.labels is not None:
            document["labels"] = list(self.labels)
        return document

    @staticmethod
    def from_json_dict(document: dict) -> "ModeGrid":
        if document.get("uniform"):
            return ModeGrid.uniform(document["mode_count"])
        weights = document["weights"]
        mode_count = document.get("mode_count", len(weights))
        return ModeGrid(mode_count, weights, document.get("labels"))

    def save(self, path: str):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_json_dict(), f, indent=2)

    @staticmethod
    def load(path: str) -> "ModeGrid":
        with open(path, "r", encoding="utf-8") as f:
            return ModeGrid.from_json_dict(json.load(f))


def check_compatible(*grids: ModeGrid):
    """
    Raises ModeGrid.GridMismatchException unless all grids match
    """

    first = grids[0]
    for grid in grids[1:]:
        if not first.is_compatible(grid):
            raise ModeGrid.GridMismatchException(
                f"Grid {first.grid_id} (N={first.mode_count}) does not match grid {grid.grid_id} (N={grid.mode_count})"
            )


@dataclass(frozen=True, eq=False)
class FieldFunction:
    """
    A complex amplitude per mode of a grid
    """

    grid: ModeGrid
    values: np.ndarray
    # Exact quadratures this field was assembled from, so from_complex can return them untouched
    quadratures: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)

    class FieldException(Exception):
        """
        Exception raised for field functions of the wrong shape, non-finite entries,
        complex values where real ones are required or unnormalized spectra
        """

        pass

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim == 0:
            values = np.full(self.grid.mode_count, values)
        values = _frozen_array(values, complex)
        if values.shape != (self.grid.mode_count,):
            raise FieldFunction.FieldException(
                f"Expected {self.grid.mode_count} values for grid {self.grid.grid_id}, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise FieldFunction.FieldException("Field function values must be finite")
        object.__setattr__(self, "values", values)

    @staticmethod
    def zeros(grid: ModeGrid) -> "FieldFunction":
        return FieldFunction(grid, np.zeros(grid.mode_count))

    @staticmethod
    def from_balanced(grid: ModeGrid, balanced: np.ndarray) -> "FieldFunction":
        return FieldFunction(grid, np.asarray(balanced) / grid.sqrt_weights)

    @staticmethod
    def basis(grid: ModeGrid, mode: int) -> "FieldFunction":
        """
        Field with unit balanced amplitude on one mode
        """

        balanced = np.zeros(grid.mode_count, dtype=complex)
        balanced[mode] = 1.0
        return FieldFunction.from_balanced(grid, balanced)

    @staticmethod
    def random(grid: ModeGrid, rng: np.random.Generator, scale: float = 1.0) -> "FieldFunction":
        values = rng.normal(size=grid.mode_count) + 1j * rng.normal(size=grid.mode_count)
        return FieldFunction(grid, scale * values)

    @property
    def balanced(self) -> np.ndarray:
        return self.grid.sqrt_weights * self.values

    @property
    def is_real(self) -> bool:
        return not np.any(self.values.imag)

    def conjugate(self) -> "FieldFunction":
        return FieldFunction(self.grid, np.conj(self.values))

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, FieldFunction):
            check_compatible(self.grid, other.grid)
            return other.values
        raise TypeError(f"Cannot combine a FieldFunction with {type(other)}")

    def __add__(self, other) -> "FieldFunction":
        return FieldFunction(self.grid, self.values + self._coerce(other))

    def __sub__(self, other) -> "FieldFunction":
        return FieldFunction(self.grid, self.values - self._coerce(other))

    def __neg__(self) -> "FieldFunction":
        return FieldFunction(self.grid, -self.values)

    def __mul__(self, scalar) -> "FieldFunction":
        if isinstance(scalar, FieldFunction):
            raise TypeError("Pointwise products of field functions are not ⋄-contractions; use inner_product")
        return FieldFunction(self.grid, complex(scalar) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "FieldFunction":
        return FieldFunction(self.grid, self.values / complex(scalar))

    def to_json_dict(self) -> dict:
        interleaved = np.empty(2 * self.grid.mode_count)
        interleaved[0::2] = self.values.real
        interleaved[1::2] = self.values.imag
        return {"grid_id": self.grid.grid_id, "values": interleaved.tolist()}

    @staticmethod
    def from_json_dict(grid: ModeGrid, document: dict) -> "FieldFunction":
        grid_id = document.get("grid_id")
        if grid_id is not None and grid_id != grid.grid_id:
            raise ModeGrid.GridMismatchException(f"Field is keyed to grid {grid_id}, not {grid.grid_id}")
        interleaved = np.asarray(document["values"], dtype=float)
        if interleaved.shape != (2 * grid.mode_count,):
            raise FieldFunction.FieldException(
                f"Expected {2 * grid.mode_count} interleaved numbers, got {interleaved.size}"
            )
        return FieldFunction(grid, interleaved[0::2] + 1j * interleaved[1::2])


def inner_product(f: FieldFunction, g: FieldFunction) -> complex:
    """
    Weighted pairing sum_i w_i conj(f_i) g_i, conjugate-linear in f
    """

    check_compatible(f.grid, g.grid)
    return complex(np.vdot(f.balanced, g.balanced))


def norm_sq(f: FieldFunction) -> float:
    balanced = f.balanced
    return float(np.sum(balanced.real ** 2 + balanced.imag ** 2))


def to_complex(q: FieldFunction, p: FieldFunction) -> FieldFunction:
    """
    Builds alpha = (q + i p)/sqrt(2) from real quadrature fields
    """

    check_compatible(q.grid, p.grid)
    if not (q.is_real and p.is_real):
        raise FieldFunction.FieldException("Quadrature fields must be real-valued")
    q_values, p_values = q.values.real, p.values.real
    return FieldFunction(
        q.grid,
        (q_values + 1j * p_values) / np.sqrt(2.0),
        quadratures=(_frozen_array(q_values, float), _frozen_array(p_values, float)),
    )


def from_complex(alpha: FieldFunction) -> Tuple[FieldFunction, FieldFunction]:
    """
    Splits alpha into the real quadratures q = sqrt(2) Re alpha, p = sqrt(2) Im alpha
    """

    if alpha.quadratures is not None:
        q_values, p_values = alpha.quadratures
    else:
        q_values = np.sqrt(2.0) * alpha.values.real
        p_values = np.sqrt(2.0) * alpha.values.imag
    return FieldFunction(alpha.grid, q_values), FieldFunction(alpha.grid, p_values)
