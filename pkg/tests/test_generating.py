import math

import pytest

from wigner_utils.generating import MAX_EXTRACTION_ORDER, ParameterPolynomial, fresh_name, normalize_orders


def test_normalize_orders_merges_and_sorts():
    assert normalize_orders({"b": 1, "a": 2, "c": 0}) == (("a", 2), ("b", 1))
    assert normalize_orders([("a", 1), ("a", 2)]) == (("a", 3),)


INVALID_ORDERS = [
    {"a": -1},
    {"a": 1.5},
]


@pytest.mark.parametrize("orders", INVALID_ORDERS)
def test_invalid_orders(orders):
    with pytest.raises(ValueError):
        normalize_orders(orders)


def test_single_parameter_derivatives():
    a, q = 0.7 - 0.2j, 0.3 + 0.1j
    poly = ParameterPolynomial(("t",), 5.0, [a], [[q]])
    assert poly.derivative({}) == pytest.approx(1)
    assert poly.derivative({"t": 1}) == pytest.approx(a)
    assert poly.derivative({"t": 2}) == pytest.approx(a ** 2 + 2 * q)
    assert poly.derivative({"t": 3}) == pytest.approx(a ** 3 + 6 * a * q)


def test_mixed_derivative_uses_symmetrized_coupling():
    poly = ParameterPolynomial(("x", "y"), 0, [0.5, -1.0], [[0.0, 0.8], [0.0, 0.0]])
    assert poly.derivative({"x": 1, "y": 1}) == pytest.approx(0.5 * -1.0 + 0.8)


def test_pure_quadratic_matches_hermite_count():
    # exp(t^2): d^(2k)/dt^(2k) at 0 is (2k)!/k!
    poly = ParameterPolynomial(("t",), 0, [0], [[1]])
    for k in range(4):
        assert poly.derivative({"t": 2 * k}) == pytest.approx(math.factorial(2 * k) / math.factorial(k))
        assert poly.derivative({"t": 2 * k + 1}) == pytest.approx(0)


def test_unknown_parameter_gives_zero():
    poly = ParameterPolynomial(("t",), 0, [1.0])
    assert poly.derivative({"s": 1}) == 0


def test_order_limit():
    poly = ParameterPolynomial(("t",), 0, [1.0])
    with pytest.raises(ValueError):
        poly.taylor_coefficient({"t": MAX_EXTRACTION_ORDER + 1})


def test_recentered_polynomial():
    poly = ParameterPolynomial(("t",), 1.0, [2.0], [[3.0]])
    shifted = poly.recentered({"t": 0.5})
    assert shifted.evaluate({"t": 0.25}) == pytest.approx(poly.evaluate({"t": 0.75}))


def test_duplicate_names_are_rejected():
    with pytest.raises(ValueError):
        ParameterPolynomial(("t", "t"))


def test_fresh_name():
    assert fresh_name("t", {"s"}) == "t"
    assert fresh_name("t", {"t", "t#2"}) == "t#3"
