import math
from fractions import Fraction

import numpy as np
import pytest

from wigner_utils import LogScalar
from wigner_utils.log_scalar import binary_exponent, exact_fraction


VALID_POWERS = [
    (2, 8, {"2": Fraction(1), "pi": Fraction(0), "2pi": Fraction(0)}),
    (Fraction(1, 4), 3, {"2": Fraction(-2), "pi": Fraction(0), "2pi": Fraction(0)}),
    (1, 5, {"2": Fraction(0), "pi": Fraction(0), "2pi": Fraction(0)}),
]


@pytest.mark.parametrize("power", VALID_POWERS)
def test_power_of_two_stays_symbolic(power):
    base, mode_count, omega = power
    value = LogScalar.power_of(base, mode_count)
    assert value.omega_coefficients == omega
    assert value.log_magnitude == 0.0
    assert value.value() == pytest.approx(float(base) ** mode_count)


def test_power_of_other_base_is_numeric():
    value = LogScalar.power_of(3, 4)
    assert value.has_zero_omega
    assert value.value() == pytest.approx(81)


def test_omega_cancels_exactly():
    n = 8
    value = LogScalar.omega(n, two=2) / LogScalar.power_of(4, n)
    assert value.has_zero_omega
    assert value.finite_part() == pytest.approx(1)


def test_two_pi_is_extracted_for_printing():
    value = LogScalar.omega(3, two=1, pi=2)
    assert value.omega_coefficients == {"2": Fraction(0), "pi": Fraction(1), "2pi": Fraction(1)}
    assert "(2π)^(1N)" in str(value)


def test_large_values_do_not_overflow():
    value = LogScalar.omega(2000, two=1) * LogScalar.exp(-1000.0)
    assert math.isfinite(value.log().real)
    assert value.log().real == pytest.approx(2000 * math.log(2) - 1000)


def test_sum_is_stable_for_tiny_terms():
    terms = [LogScalar.exp(-800.0), LogScalar.exp(-800.0)]
    total = LogScalar.sum(terms)
    assert total.log_magnitude == pytest.approx(-800 + math.log(2))


def test_sum_of_cancelling_terms_is_zero():
    a = LogScalar.from_complex(1.5 - 2j)
    assert abs((a - a).value()) < 1e-12


def test_zero_behaviour():
    zero = LogScalar.zero(3)
    assert zero.is_zero
    assert zero.value() == 0
    with pytest.raises(ZeroDivisionError):
        LogScalar.one() / zero


def test_phase_is_wrapped():
    value = LogScalar(0.0, 3 * math.pi)
    assert value.phase == pytest.approx(math.pi)


def test_nan_is_rejected():
    with pytest.raises(ValueError):
        LogScalar(float("nan"))


def test_mismatched_symbolic_mode_counts():
    with pytest.raises(ValueError):
        LogScalar.omega(2, two=1) * LogScalar.omega(3, two=1)


def test_isclose():
    a = LogScalar.from_complex(2 + 1j, 1)
    assert a.isclose(2 + 1j)
    assert not a.isclose(2 + 1.1j)


@pytest.mark.parametrize("value", [np.int64(4), np.int32(1), 2, Fraction(np.int64(8))])
def test_numpy_integers_stay_symbolic(value):
    exact = exact_fraction(value)
    assert type(exact.numerator) is int
    assert binary_exponent(exact) == int(math.log2(int(value)))
    assert LogScalar.power_of(exact, 3).value() == pytest.approx(float(value) ** 3)
