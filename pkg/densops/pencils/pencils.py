from ..calculus import *
from ..geometry.connections import Connection
import logging
import sympy

logger = logging.getLogger('densops.pencils')

__all__ = ['ForbiddenWeightError', 'FORBIDDEN_WEIGHTS', 'VectorField', 'LambdaOperator', 'check_weight', 'lie_lift',
           'horizontal_lift', 'commutator', 'vertical_part', 'reconstruct_symbol', 'canonical_pencil',
           'example_pencil', 'example_pencil_symmetrized', 'pencil_agrees']

FORBIDDEN_WEIGHTS = (sympy.Integer(0), sympy.Rational(1, 2), sympy.Integer(1))


class ForbiddenWeightError(DensopsException):
    pass


def check_weight(weight) -> sympy.Rational:
    weight = as_rational(weight)
    if weight in FORBIDDEN_WEIGHTS:
        raise ForbiddenWeightError(f"Weight {weight} is excluded: the self-adjoint pencil through an operator is only "
                                   f"unique for weights other than 0, 1/2 and 1.")
    return weight


class VectorField(object):
    """
    Vector field X = X^i d_i on the base. Lifts to the extended manifold are explicit constructors (lie_lift,
    horizontal_lift) so that a base field is never mistaken for a first order operator with a weight term.
    """

    def __init__(self, chart: Chart, components: list):
        if len(components) != chart.dimension:
            raise ValueError(f"Vector field needs {chart.dimension} components but got {len(components)}.")
        self.chart = chart
        self.components = tuple(simplify(as_expression(c)) for c in components)
        for c in self.components:
            chart.check_expression(c)

    @staticmethod
    def zero(chart: Chart) -> 'VectorField':
        return VectorField(chart, [0] * chart.dimension)

    @staticmethod
    def coordinate(chart: Chart, index: int) -> 'VectorField':
        return VectorField(chart, [1 if i == index else 0 for i in range(chart.dimension)])

    def divergence(self) -> sympy.Expr:
        return simplify(sum(diff(c, i, self.chart) for i, c in enumerate(self.components)))

    def __eq__(self, other):
        return isinstance(other, VectorField) and self.chart == other.chart and self.components == other.components

    def __hash__(self):
        return hash((self.chart, self.components))

    def __repr__(self):
        return f"VectorField({[format_expression(c) for c in self.components]})"


class LambdaOperator(object):
    """
    Second order operator A^{ij} d_i d_j + A^i d_i + A acting on densities of the fixed weight lambda0.
    """

    def __init__(self, op: DiffOperator, weight):
        if op.weight_degree > 0:
            raise OperatorFormError(f"An operator on densities of one weight must not contain w, got {op}.")
        if op.order > 2:
            raise OperatorOrderError(f"Only second order operators define a pencil here, got order {op.order}.")
        self.op = op
        self.weight = as_rational(weight)
        self.chart = op.chart

    @staticmethod
    def from_coefficients(chart: Chart, second: list, first: list, zeroth, weight) -> 'LambdaOperator':
        """
        :param second: n x n nested list A^{ij}, need not be symmetric
        :param first: n components A^i
        :param zeroth: A
        """
        n = chart.dimension
        terms = {((0,) * n, 0): zeroth}
        for i in range(n):
            e_i = unit_index(n, i)
            terms[(e_i, 0)] = terms.get((e_i, 0), 0) + first[i]
            for j in range(n):
                key = (tuple(a + b for a, b in zip(e_i, unit_index(n, j))), 0)
                terms[key] = terms.get(key, 0) + second[i][j]
        return LambdaOperator(DiffOperator(chart, terms), weight)

    @property
    def second_order(self) -> sympy.ImmutableMatrix:
        """Symmetrized A^{(ij)}."""
        return extract_symbol(self.op).S

    @property
    def first_order(self) -> tuple:
        n = self.chart.dimension
        return tuple(self.op.coefficient(unit_index(n, i), 0) for i in range(n))

    @property
    def zeroth_order(self) -> sympy.Expr:
        return self.op.coefficient((0,) * self.chart.dimension, 0)

    def __repr__(self):
        return f"LambdaOperator({self.op}, weight={self.weight})"


def lie_lift(X: VectorField) -> DiffOperator:
    """
    Lie derivative of densities X^i d_i + w d_i X^i: the divergence free lift of X.
    """
    n = X.chart.dimension
    terms = {(unit_index(n, i), 0): c for i, c in enumerate(X.components)}
    terms[((0,) * n, 1)] = X.divergence()
    return DiffOperator(X.chart, terms)


def horizontal_lift(X: VectorField, gamma: Connection) -> DiffOperator:
    """
    Horizontal lift X^i d_i + gamma_i X^i w; on s t^l it acts as the covariant derivative (X^i d_i s + l gamma_i X^i s).
    """
    X.chart.check_same(gamma.chart)
    n = X.chart.dimension
    terms = {(unit_index(n, i), 0): c for i, c in enumerate(X.components)}
    terms[((0,) * n, 1)] = sum(g * c for g, c in zip(gamma.components, X.components))
    return DiffOperator(X.chart, terms)


def commutator(X: VectorField, Y: VectorField) -> VectorField:
    X.chart.check_same(Y.chart)
    chart = X.chart
    components = []
    for i in range(chart.dimension):
        component = sympy.Integer(0)
        for j in range(chart.dimension):
            component += X.components[j] * diff(Y.components[i], j, chart)
            component -= Y.components[j] * diff(X.components[i], j, chart)
        components.append(component)
    return VectorField(chart, components)


def vertical_part(K: DiffOperator, gamma: Connection) -> sympy.Expr:
    """
    For K = X^i d_i + X^0 w returns the scalar X^0 - gamma_i X^i, so that
    K - horizontal_lift(X) = w (X^0 - gamma_i X^i).
    """
    K.chart.check_same(gamma.chart)
    divergence_hat(K)  # validates the first order form
    n = K.chart.dimension
    result = K.coefficient((0,) * n, 1)
    for i in range(n):
        result -= gamma.components[i] * K.coefficient(unit_index(n, i), 0)
    return simplify(result)


def reconstruct_symbol(L: LambdaOperator) -> SymbolTriple:
    """
    Symbol of the unique self-adjoint normalised pencil through L:

        B^i = (A^i - d_k A^{ki}) / (2 l - 1)
        C = A / (l (l - 1)) - (d_i A^i - d_i d_k A^{ki}) / ((l - 1)(2 l - 1))
    """
    weight = check_weight(L.weight)
    chart = L.chart
    n = chart.dimension
    A2 = L.second_order
    A1 = L.first_order
    A0 = L.zeroth_order
    B = []
    for i in range(n):
        divergence = sum(diff(A2[k, i], k, chart) for k in range(n))
        B.append((A1[i] - divergence) / (2 * weight - 1))
    divergence_first = sum(diff(A1[i], i, chart) for i in range(n))
    double_divergence = sum(diff(diff(A2[k, i], k, chart), i, chart) for i in range(n) for k in range(n))
    C = A0 / (weight * (weight - 1)) - (divergence_first - double_divergence) / ((weight - 1) * (2 * weight - 1))
    logger.debug(f"Reconstructed symbol through operator at weight {weight}.")
    return SymbolTriple(chart, A2, B, C)


def canonical_pencil(L: LambdaOperator) -> DiffOperator:
    return build_canonical(reconstruct_symbol(L))


def _weight_factor(chart: Chart, weight: sympy.Rational) -> DiffOperator:
    # (w - l) / (2 l - 1)
    return (DiffOperator.weight(chart) - DiffOperator.multiplication(chart, weight)).scale(1 / (2 * weight - 1))


def example_pencil(X: VectorField, Y: VectorField, weight) -> DiffOperator:
    """
    L_X L_Y + ((w - l) / (2 l - 1)) L_[X,Y]: self-adjoint and equal to L_X o L_Y at w = l.
    """
    weight = check_weight(weight)
    X.chart.check_same(Y.chart)
    product = op_compose(lie_lift(X), lie_lift(Y))
    return product + op_compose(_weight_factor(X.chart, weight), lie_lift(commutator(X, Y)))


def example_pencil_symmetrized(X: VectorField, Y: VectorField, weight) -> DiffOperator:
    """
    1/2 (L_X L_Y + L_Y L_X) + 1/2 ((2w - 1) / (2 l - 1)) (L_X L_Y - L_Y L_X)
    """
    weight = check_weight(weight)
    X.chart.check_same(Y.chart)
    chart = X.chart
    xy = op_compose(lie_lift(X), lie_lift(Y))
    yx = op_compose(lie_lift(Y), lie_lift(X))
    factor = (DiffOperator.weight(chart).scale(2) - DiffOperator.identity(chart)).scale(1 / (2 * (2 * weight - 1)))
    return (xy + yx).scale(sympy.Rational(1, 2)) + op_compose(factor, xy - yx)


def pencil_agrees(a: DiffOperator, b: DiffOperator, weight,
                  policy: EqualityPolicy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC) -> bool:
    return op_equal(restrict(a, weight), restrict(b, weight), policy)
