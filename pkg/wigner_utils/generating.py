"""
Quadratic polynomials in named auxiliary parameters and exact Taylor
coefficient extraction of their exponentials.

Generating functionals (eta_1, eta_2, J, ...) keep every auxiliary parameter in
a quadratic exponent. Derivatives at the origin are read off the truncated
power series of exp(linear + quadratic) so no finite differences are ever used.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np
from scipy.signal import convolve

MAX_EXTRACTION_ORDER = 10

Orders = Tuple[Tuple[str, int], ...]


def normalize_orders(orders) -> Orders:
    """
    Canonical, hashable form of a {name: order} mapping with zero orders dropped
    """

    if isinstance(orders, Mapping):
        items = orders.items()
    else:
        items = tuple(orders)
    merged: Dict[str, int] = {}
    for name, order in items:
        if int(order) != order or order < 0:
            raise ValueError(f"Derivative order for {name} must be a non-negative integer. Got {order}")
        merged[name] = merged.get(name, 0) + int(order)
    return tuple(sorted((name, order) for name, order in merged.items() if order))


@dataclass(frozen=True, eq=False)
class ParameterPolynomial:
    """
    constant + sum_k linear_k eta_k + sum_kl quadratic_kl eta_k eta_l,
    with a symmetric quadratic matrix
    """

    names: Tuple[str, ...] = ()
    constant: complex = 0j
    linear: np.ndarray = field(default=None)
    quadratic: np.ndarray = field(default=None)

    def __post_init__(self):
        names = tuple(self.names)
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate parameter names: {names}")
        size = len(names)
        linear = np.zeros(size, dtype=complex) if self.linear is None else np.array(self.linear, dtype=complex)
        quadratic = (
            np.zeros((size, size), dtype=complex) if self.quadratic is None else np.array(self.quadratic, dtype=complex)
        )
        if linear.shape != (size,) or quadratic.shape != (size, size):
            raise ValueError(f"Coefficient shapes do not match {size} parameters")
        quadratic = 0.5 * (quadratic + quadratic.T)
        linear.setflags(write=False)
        quadratic.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "constant", complex(self.constant))
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "quadratic", quadratic)

    @staticmethod
    def constant_only(value: complex = 0j) -> "ParameterPolynomial":
        return ParameterPolynomial((), value)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def extended(self, names: Sequence[str]) -> "ParameterPolynomial":
        """
        Re-expresses the polynomial over `names`, which must contain every current name
        """

        names = tuple(names)
        missing = [n for n in self.names if n not in names]
        if missing:
            raise ValueError(f"Parameters {missing} are not in the target list {names}")
        positions = [names.index(n) for n in self.names]
        linear = np.zeros(len(names), dtype=complex)
        quadratic = np.zeros((len(names), len(names)), dtype=complex)
        linear[positions] = self.linear
        quadratic[np.ix_(positions, positions)] = self.quadratic
        return ParameterPolynomial(names, self.constant, linear, quadratic)

    def renamed(self, mapping: Mapping[str, str]) -> "ParameterPolynomial":
        return ParameterPolynomial(
            tuple(mapping.get(n, n) for n in self.names), self.constant, self.linear, self.quadratic
        )

    def __add__(self, other: "ParameterPolynomial") -> "ParameterPolynomial":
        names = union_names(self.names, other.names)
        a, b = self.extended(names), other.extended(names)
        return ParameterPolynomial(names, a.constant + b.constant, a.linear + b.linear, a.quadratic + b.quadratic)

    def shifted(self, value: complex) -> "ParameterPolynomial":
        return ParameterPolynomial(self.names, self.constant + value, self.linear, self.quadratic)

    def evaluate(self, values: Mapping[str, complex]) -> complex:
        eta = np.array([complex(values.get(n, 0.0)) for n in self.names], dtype=complex)
        return complex(self.constant + self.linear @ eta + eta @ self.quadratic @ eta)

    def recentered(self, values: Mapping[str, complex]) -> "ParameterPolynomial":
        """
        Polynomial in delta with P(values + delta) = recentered(delta)
        """

        eta = np.array([complex(values.get(n, 0.0)) for n in self.names], dtype=complex)
        return ParameterPolynomial(
            self.names,
            self.evaluate(values),
            self.linear + 2 * self.quadratic @ eta,
            self.quadratic,
        )

    def taylor_coefficient(self, orders) -> complex:
        """
        Coefficient of prod_k eta_k^(m_k) in exp(P - constant)
        """

        orders = normalize_orders(orders)
        for name, order in orders:
            if name not in self.names:
                return 0j if order else 1 + 0j
            if order > MAX_EXTRACTION_ORDER:
                raise ValueError(f"Order {order} for {name} exceeds the supported maximum {MAX_EXTRACTION_ORDER}")
        if not orders:
            return 1 + 0j

        active = [self.index(name) for name, _ in orders]
        shape = tuple(order + 1 for _, order in orders)
        dims = len(active)

        exponent = np.zeros(shape, dtype=complex)
        for axis, k in enumerate(active):
            if shape[axis] > 1:
                exponent[_unit_index(dims, axis, 1)] += self.linear[k]
        for a, k in enumerate(active):
            for b, l in enumerate(active):
                index = [0] * dims
                index[a] += 1
                index[b] += 1
                if all(i < s for i, s in zip(index, shape)):
                    exponent[tuple(index)] += self.quadratic[k, l]

        # exp(R) = sum_j R^j / j!, R has no constant term so j <= total order
        total = sum(order for _, order in orders)
        result = np.zeros(shape, dtype=complex)
        result[(0,) * dims] = 1.0
        term = result.copy()
        for j in range(1, total + 1):
            term = _truncated_product(term, exponent, shape) / j
            result = result + term
        return complex(result[tuple(order for _, order in orders)])

    def derivative(self, orders) -> complex:
        """
        prod_k d^(m_k)/d eta_k^(m_k) of exp(P - constant) at the origin
        """

        orders = normalize_orders(orders)
        factor = math.prod(math.factorial(order) for _, order in orders)
        return factor * self.taylor_coefficient(orders)


def _unit_index(dims: int, axis: int, value: int):
    index = [0] * dims
    index[axis] = value
    return tuple(index)


def _truncated_product(a: np.ndarray, b: np.ndarray, shape) -> np.ndarray:
    full = convolve(a, b, mode="full", method="direct")
    return full[tuple(slice(0, s) for s in shape)]


def union_names(first: Sequence[str], second: Sequence[str]) -> Tuple[str, ...]:
    return tuple(first) + tuple(n for n in second if n not in first)


def fresh_name(name: str, taken) -> str:
    candidate, suffix = name, 2
    while candidate in taken:
        candidate = f"{name}#{suffix}"
        suffix += 1
    return candidate
