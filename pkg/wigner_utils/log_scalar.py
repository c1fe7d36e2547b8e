import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

Number = Union[int, float, complex]


def wrap_phase(phase: float) -> float:
    """
    Wraps a phase into (-pi, pi]
    """

    wrapped = math.remainder(phase, 2 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2 * math.pi
    return wrapped


def exact_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (complex, np.complexfloating)):
        if value.imag != 0:
            raise ValueError(f"{value} has no exact rational form")
        value = value.real
    return Fraction(value)


def binary_exponent(value: Fraction):
    """
    Returns k when value == 2**k exactly, otherwise None
    """

    if value <= 0:
        return None
    numerator, denominator = int(value.numerator), int(value.denominator)
    if numerator & (numerator - 1) or denominator & (denominator - 1):
        return None
    return numerator.bit_length() - denominator.bit_length()


@dataclass(frozen=True)
class LogScalar:
    """
    A complex number held as exp(log_magnitude + i*phase) * 2**(a*N) * pi**(b*N).

    The per-mode constants a (`two_exponent`) and b (`pi_exponent`) are exact
    fractions so that divergent constants such as 2^N, (2 pi)^N and pi^(N/4)
    cancel exactly. Powers of 2 pi are folded into both exponents.
    """

    log_magnitude: float = 0.0
    phase: float = 0.0
    mode_count: int = 0
    two_exponent: Fraction = Fraction(0)
    pi_exponent: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "two_exponent", Fraction(self.two_exponent))
        object.__setattr__(self, "pi_exponent", Fraction(self.pi_exponent))
        if math.isnan(self.log_magnitude) or math.isnan(self.phase):
            raise ValueError("LogScalar cannot hold NaN")
        if self.log_magnitude == math.inf:
            raise ValueError("LogScalar overflow: infinite log magnitude")
        if self.log_magnitude == -math.inf:
            object.__setattr__(self, "phase", 0.0)
        else:
            object.__setattr__(self, "phase", wrap_phase(self.phase))
        if self.mode_count < 0:
            raise ValueError(f"mode_count must be non-negative. Got {self.mode_count}")

    @staticmethod
    def one(mode_count: int = 0) -> "LogScalar":
        return LogScalar(mode_count=mode_count)

    @staticmethod
    def zero(mode_count: int = 0) -> "LogScalar":
        return LogScalar(log_magnitude=-math.inf, mode_count=mode_count)

    @staticmethod
    def exp(exponent: Number, mode_count: int = 0) -> "LogScalar":
        exponent = complex(exponent)
        return LogScalar(exponent.real, exponent.imag, mode_count)

    @staticmethod
    def from_complex(value: Number, mode_count: int = 0) -> "LogScalar":
        value = complex(value)
        if value == 0:
            return LogScalar.zero(mode_count)
        return LogScalar(math.log(abs(value)), cmath.phase(value), mode_count)

    @staticmethod
    def omega(mode_count: int, two=0, pi=0, two_pi=0) -> "LogScalar":
        """
        Returns 2^(two*N) * pi^(pi*N) * (2 pi)^(two_pi*N) with N = mode_count
        """

        two_pi = Fraction(two_pi)
        return LogScalar(
            mode_count=mode_count,
            two_exponent=Fraction(two) + two_pi,
            pi_exponent=Fraction(pi) + two_pi,
        )

    @staticmethod
    def power_of(base, mode_count: int) -> "LogScalar":
        """
        Returns base**N. Exact powers of two stay symbolic, anything else is
        accumulated numerically.
        """

        try:
            exact = exact_fraction(base)
        except (ValueError, TypeError, OverflowError):
            exact = None

        if exact is not None:
            k = binary_exponent(exact)
            if k is not None:
                return LogScalar.omega(mode_count, two=k)
            if exact == 0:
                return LogScalar.zero(mode_count)

        base = complex(base)
        return LogScalar(
            mode_count * math.log(abs(base)),
            mode_count * cmath.phase(base),
            mode_count,
        )

    @staticmethod
    def sum(values: Iterable["LogScalar"]) -> "LogScalar":
        """
        Max-shift stabilized sum, accumulated in the given order
        """

        values = list(values)
        if not values:
            return LogScalar.zero()
        mode_count = _common_mode_count(values)
        if any(v.two_exponent != values[0].two_exponent or v.pi_exponent != values[0].pi_exponent for v in values):
            values = [v.collapsed() for v in values]
        shift = max(v.log_magnitude for v in values)
        if shift == -math.inf:
            return LogScalar.zero(mode_count)

        total = 0j
        for v in values:
            if v.log_magnitude == -math.inf:
                continue
            total += cmath.exp(complex(v.log_magnitude - shift, v.phase))

        if total == 0:
            return LogScalar.zero(mode_count)
        return LogScalar(
            shift + math.log(abs(total)),
            cmath.phase(total),
            mode_count,
            values[0].two_exponent,
            values[0].pi_exponent,
        )

    @property
    def is_zero(self) -> bool:
        return self.log_magnitude == -math.inf

    @property
    def has_zero_omega(self) -> bool:
        return self.two_exponent == 0 and self.pi_exponent == 0

    @property
    def omega_coefficients(self):
        """
        Per-mode exponents of the named constants, with a common (2 pi) factor
        extracted the way the value is printed
        """

        two, pi = self.two_exponent, self.pi_exponent
        two_pi = Fraction(0)
        if two * pi > 0:
            two_pi = min(two, pi) if two > 0 else max(two, pi)
            two -= two_pi
            pi -= two_pi
        return {"2": two, "pi": pi, "2pi": two_pi}

    def omega_log(self) -> float:
        return self.mode_count * (
            float(self.two_exponent) * math.log(2.0) + float(self.pi_exponent) * math.log(math.pi)
        )

    def log(self) -> complex:
        """
        Total complex logarithm, symbolic part included
        """

        return complex(self.log_magnitude + self.omega_log(), self.phase)

    def finite_part(self) -> complex:
        if self.is_zero:
            return 0j
        return cmath.exp(complex(self.log_magnitude, self.phase))

    def value(self) -> complex:
        if self.is_zero:
            return 0j
        return cmath.exp(self.log())

    def real(self) -> float:
        return self.value().real

    def collapsed(self) -> "LogScalar":
        """
        Moves the symbolic constants into the numeric log magnitude
        """

        return LogScalar(self.log_magnitude + self.omega_log(), self.phase, self.mode_count)

    def conjugate(self) -> "LogScalar":
        return LogScalar(self.log_magnitude, -self.phase, self.mode_count, self.two_exponent, self.pi_exponent)

    def isclose(self, other, rel_tol: float = 1e-9, abs_tol: float = 0.0) -> bool:
        other = _as_log_scalar(other, self.mode_count)
        if self.is_zero or other.is_zero:
            return abs(self.value() - other.value()) <= abs_tol
        ratio = (self / other).value()
        if abs(ratio - 1) <= rel_tol:
            return True
        return abs(self.value() - other.value()) <= abs_tol

    def __mul__(self, other) -> "LogScalar":
        other = _as_log_scalar(other, self.mode_count)
        return LogScalar(
            self.log_magnitude + other.log_magnitude,
            self.phase + other.phase,
            _common_mode_count([self, other]),
            self.two_exponent + other.two_exponent,
            self.pi_exponent + other.pi_exponent,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogScalar":
        other = _as_log_scalar(other, self.mode_count)
        if other.is_zero:
            raise ZeroDivisionError("division by a zero LogScalar")
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "LogScalar":
        return _as_log_scalar(other, self.mode_count) / self

    def reciprocal(self) -> "LogScalar":
        if self.is_zero:
            raise ZeroDivisionError("reciprocal of a zero LogScalar")
        return LogScalar(-self.log_magnitude, -self.phase, self.mode_count, -self.two_exponent, -self.pi_exponent)

    def __pow__(self, exponent) -> "LogScalar":
        if isinstance(exponent, complex):
            raise TypeError("LogScalar powers must be real")
        if self.is_zero:
            if exponent <= 0:
                raise ZeroDivisionError("non-positive power of a zero LogScalar")
            return LogScalar.zero(self.mode_count)
        symbolic = Fraction(exponent) if isinstance(exponent, (int, Fraction)) else None
        if symbolic is None:
            return LogScalar(
                self.log_magnitude * exponent + self.omega_log() * exponent,
                self.phase * exponent,
                self.mode_count,
            )
        return LogScalar(
            self.log_magnitude * exponent,
            self.phase * exponent,
            self.mode_count,
            self.two_exponent * symbolic,
            self.pi_exponent * symbolic,
        )

    def __neg__(self) -> "LogScalar":
        return LogScalar(self.log_magnitude, self.phase + math.pi, self.mode_count, self.two_exponent, self.pi_exponent)

    def __add__(self, other) -> "LogScalar":
        return LogScalar.sum([self, _as_log_scalar(other, self.mode_count)])

    __radd__ = __add__

    def __sub__(self, other) -> "LogScalar":
        return self + (-_as_log_scalar(other, self.mode_count))

    def __complex__(self) -> complex:
        return self.value()

    def __str__(self) -> str:
        omega = self.omega_coefficients
        magnitude = np.format_float_positional(math.exp(self.log_magnitude), precision=17, unique=True, trim="-") \
            if math.isfinite(self.log_magnitude) and abs(self.log_magnitude) < 700 \
            else f"exp({self.log_magnitude!r})"
        return (
            f"{magnitude}"
            f"·2^({omega['2']}N)·π^({omega['pi']}N)·(2π)^({omega['2pi']}N)"
            f"·e^(i{self.phase!r})"
        )


def _common_mode_count(values) -> int:
    counts = {v.mode_count for v in values if not v.has_zero_omega}
    if len(counts) > 1:
        raise ValueError(f"LogScalars with symbolic constants refer to different mode counts: {sorted(counts)}")
    if counts:
        return counts.pop()
    return max(v.mode_count for v in values)


def _as_log_scalar(value, mode_count: int) -> LogScalar:
    if isinstance(value, LogScalar):
        return value
    return LogScalar.from_complex(value, mode_count)
