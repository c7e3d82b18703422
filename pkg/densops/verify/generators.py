from ..calculus import *
from ..geometry import Christoffel, Connection
from ..pencils import VectorField
import logging
import numpy as np
import sympy

logger = logging.getLogger('densops.verify.generators')

__all__ = ['StructureGenerator', 'LAMBDA0_POOL']

LAMBDA0_POOL = (sympy.Integer(2), sympy.Integer(-1), sympy.Rational(3, 2))


class StructureGenerator(object):
    """
    Seeded source of random structures on a chart. Coefficients are trigonometric polynomials with small exact rational
    constants so that torus integrals take the exact path.

    Two generators built with the same chart and seed produce identical sequences.
    """

    def __init__(self, chart: Chart, seed, degree: int = 2):
        self.chart = chart
        self.degree = degree
        self.rng = np.random.default_rng(seed)

    def rational(self, allow_zero: bool = False) -> sympy.Rational:
        while True:
            numerator = int(self.rng.integers(-3, 4))
            if numerator != 0 or allow_zero:
                return sympy.Rational(numerator, int(self.rng.integers(1, 4)))

    def weight(self) -> sympy.Rational:
        return as_rational(NUMERICS['weight_pool'][int(self.rng.integers(len(NUMERICS['weight_pool'])))])

    def lambda0(self) -> sympy.Rational:
        return LAMBDA0_POOL[int(self.rng.integers(len(LAMBDA0_POOL)))]

    def trig_monomial(self, degree: int) -> sympy.Expr:
        factors = []
        for x in self.chart.symbols:
            factors.append(sympy.sin(x))
            factors.append(sympy.cos(x))
        result = sympy.Integer(1)
        for _ in range(int(self.rng.integers(0, degree + 1))):
            result *= factors[int(self.rng.integers(len(factors)))]
        return result

    def trig_polynomial(self, degree: int = None, terms: int = 3) -> sympy.Expr:
        degree = self.degree if degree is None else degree
        count = int(self.rng.integers(1, terms + 1))
        return simplify(sum(self.rational() * self.trig_monomial(degree) for _ in range(count)))

    def polynomial(self, degree: int = None, terms: int = 3) -> sympy.Expr:
        degree = self.degree if degree is None else degree
        result = sympy.Integer(0)
        for _ in range(int(self.rng.integers(1, terms + 1))):
            monomial = sympy.Integer(1)
            for _ in range(int(self.rng.integers(0, degree + 1))):
                monomial *= self.chart.symbols[int(self.rng.integers(self.chart.dimension))]
            result += self.rational() * monomial
        return simplify(result)

    def smooth(self) -> sympy.Expr:
        """A trigonometric polynomial, a polynomial or one of them times exp of a linear form."""
        kind = int(self.rng.integers(3))
        if kind == 0:
            return self.trig_polynomial()
        if kind == 1:
            return self.polynomial()
        linear = sum(self.rational(allow_zero=True) * x for x in self.chart.symbols)
        return simplify(sympy.exp(linear) * self.trig_polynomial())

    def density(self, weight=None) -> Density:
        weight = self.weight() if weight is None else weight
        return Density.homogeneous(self.chart, self.trig_polynomial(), weight)

    def mixed_density(self, terms: int = 2) -> Density:
        """Density with `terms` distinct weights drawn from the weight pool."""
        if not 1 <= terms <= len(NUMERICS['weight_pool']):
            raise ValueError(f"A mixed density can have 1 to {len(NUMERICS['weight_pool'])} terms, got {terms}.")
        weights = []
        while len(weights) < terms:
            weight = self.weight()
            if weight not in weights:
                weights.append(weight)
        result = {}
        for weight in weights:
            coefficient = self.trig_polynomial()
            while coefficient == 0:
                coefficient = self.trig_polynomial()
            result[weight] = coefficient
        return Density(self.chart, result)

    def operator(self, max_order: int = 2, density: float = 0.6) -> DiffOperator:
        """
        Random operator with every term of total order <= max_order present with probability `density`.
        """
        n = self.chart.dimension
        terms = {}
        for total in range(max_order + 1):
            for key in _keys_of_order(n, total):
                if self.rng.random() < density:
                    terms[key] = self.trig_polynomial()
        return DiffOperator(self.chart, terms)

    def first_order_operator(self, zeroth: bool = False) -> DiffOperator:
        n = self.chart.dimension
        terms = {(unit_index(n, i), 0): self.trig_polynomial() for i in range(n)}
        terms[((0,) * n, 1)] = self.trig_polynomial()
        if zeroth:
            terms[((0,) * n, 0)] = self.trig_polynomial()
        return DiffOperator(self.chart, terms)

    def vector_field(self) -> VectorField:
        return VectorField(self.chart, [self.trig_polynomial() for _ in range(self.chart.dimension)])

    def connection(self) -> Connection:
        return Connection(self.chart, [self.trig_polynomial() for _ in range(self.chart.dimension)])

    def covector(self) -> list:
        return [self.polynomial() for _ in range(self.chart.dimension)]

    def symmetric_matrix(self) -> sympy.ImmutableMatrix:
        n = self.chart.dimension
        S = sympy.zeros(n, n)
        for i in range(n):
            for k in range(i, n):
                S[i, k] = self.trig_polynomial()
                S[k, i] = S[i, k]
        return sympy.ImmutableMatrix(S)

    def symbol_triple(self) -> SymbolTriple:
        return SymbolTriple(self.chart, self.symmetric_matrix(), [self.trig_polynomial() for _ in
                                                                  range(self.chart.dimension)],
                            self.trig_polynomial())

    def invertible_matrix(self) -> sympy.ImmutableMatrix:
        """
        S = P diag(exp(c_i x_j)) P^T with P unit lower triangular and rational c_i: positive definite everywhere.
        """
        n = self.chart.dimension
        P = sympy.eye(n)
        for i in range(n):
            for k in range(i):
                P[i, k] = self.rational(allow_zero=True)
        diagonal = sympy.diag(*[sympy.exp(self.rational(allow_zero=True) *
                                          self.chart.symbols[int(self.rng.integers(n))]) for _ in range(n)])
        return sympy.ImmutableMatrix(P * diagonal * P.T).applyfunc(simplify)

    def christoffel(self) -> Christoffel:
        n = self.chart.dimension
        table = [[[None] * n for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for k in range(n):
                for m in range(k, n):
                    table[i][k][m] = self.polynomial(degree=1)
                    table[i][m][k] = table[i][k][m]
        return Christoffel(self.chart, table)

    def affine_change(self) -> ChartChange:
        """
        x' = A x + b with A upper triangular with positive diagonal, so det A > 0.
        """
        n = self.chart.dimension
        A = sympy.zeros(n, n)
        for i in range(n):
            A[i, i] = abs(self.rational())
            for k in range(i + 1, n):
                A[i, k] = self.rational(allow_zero=True)
        b = sympy.Matrix([self.rational(allow_zero=True) for _ in range(n)])
        x = sympy.Matrix(self.chart.symbols)
        forward = A * x + b
        inverse = A.inv() * (x - b)
        return ChartChange(self.chart, list(forward), list(inverse))


def _keys_of_order(dimension: int, total: int) -> list:
    keys = []
    for power in range(total + 1):
        for alpha in _multi_indices(dimension, total - power):
            keys.append((alpha, power))
    return keys


def _multi_indices(dimension: int, total: int) -> list:
    if dimension == 1:
        return [(total,)]
    result = []
    for first in range(total + 1):
        for rest in _multi_indices(dimension - 1, total - first):
            result.append((first,) + rest)
    return result
