from .expression import *
from .densities import Density
from collections import defaultdict
from itertools import product
from math import comb
from types import MappingProxyType
import logging
import sympy

logger = logging.getLogger('densops.calculus.operators')

__all__ = ['OperatorOrderError', 'OperatorFormError', 'DiffOperator', 'SymbolTriple', 'op_apply', 'op_compose',
           'op_adjoint', 'restrict', 'op_equal', 'is_self_adjoint', 'divergence_hat', 'extract_symbol',
           'build_canonical', 'format_operator', 'unit_index']


class OperatorOrderError(DensopsException):
    pass


class OperatorFormError(DensopsException):
    pass


def unit_index(dimension: int, index: int) -> tuple:
    return tuple(1 if i == index else 0 for i in range(dimension))


def _expanded_indices(alpha: tuple) -> list:
    # (2, 1) -> [0, 0, 1]
    indices = []
    for index, count in enumerate(alpha):
        indices.extend([index] * count)
    return indices


def _term_sort_key(key: tuple) -> tuple:
    alpha, power = key
    return sum(alpha) + power, _expanded_indices(alpha), power


def _sub_indices(alpha: tuple):
    """
    All multi-indices gamma <= alpha with the product of binomial coefficients binom(alpha, gamma).
    """
    for gamma in product(*[range(a + 1) for a in alpha]):
        factor = 1
        for a, g in zip(alpha, gamma):
            factor *= comb(a, g)
        yield gamma, factor


class DiffOperator(object):
    """
    Weight preserving differential operator on the algebra of densities in normal order:

        sum over (alpha, k) of c_{alpha,k}(x) d^alpha w^k

    All coefficients stand left of every derivative d_i and every power of the weight operator w = t d/dt. Terms are
    stored as a mapping (alpha, k) -> coefficient; zero coefficients are dropped.
    """

    def __init__(self, chart: Chart, terms: dict = None):
        self.chart = chart
        merged = {}
        for (alpha, power), coefficient in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != chart.dimension or any(a < 0 for a in alpha):
                raise OperatorFormError(f"Multi-index {alpha} does not fit a chart of dimension {chart.dimension}.")
            if int(power) < 0:
                raise OperatorFormError(f"Powers of the weight operator must be non-negative, got {power}.")
            coefficient = as_expression(coefficient)
            chart.check_expression(coefficient)
            key = (alpha, int(power))
            merged[key] = merged.get(key, sympy.Integer(0)) + coefficient
        cleaned = {}
        for key in sorted(merged, key=_term_sort_key):
            coefficient = simplify(merged[key])
            if coefficient != 0:
                cleaned[key] = coefficient
        self._terms = MappingProxyType(cleaned)

    @staticmethod
    def zero(chart: Chart) -> 'DiffOperator':
        return DiffOperator(chart)

    @staticmethod
    def multiplication(chart: Chart, coefficient) -> 'DiffOperator':
        return DiffOperator(chart, {((0,) * chart.dimension, 0): coefficient})

    @staticmethod
    def identity(chart: Chart) -> 'DiffOperator':
        return DiffOperator.multiplication(chart, 1)

    @staticmethod
    def partial(chart: Chart, index: int) -> 'DiffOperator':
        chart.check_index(index)
        return DiffOperator(chart, {(unit_index(chart.dimension, index), 0): 1})

    @staticmethod
    def weight(chart: Chart, power: int = 1) -> 'DiffOperator':
        return DiffOperator(chart, {((0,) * chart.dimension, power): 1})

    @property
    def terms(self) -> MappingProxyType:
        return self._terms

    @property
    def order(self) -> int:
        return max((sum(alpha) + power for alpha, power in self._terms), default=0)

    @property
    def weight_degree(self) -> int:
        return max((power for _, power in self._terms), default=0)

    def coefficient(self, alpha: tuple, power: int = 0) -> sympy.Expr:
        return self._terms.get((tuple(alpha), power), sympy.Integer(0))

    def is_zero(self) -> bool:
        return len(self._terms) == 0

    def is_multiplication(self) -> bool:
        return all(sum(alpha) == 0 and power == 0 for alpha, power in self._terms)

    def as_multiplier(self) -> sympy.Expr:
        if not self.is_multiplication():
            raise OperatorFormError(f"Operator {self} is not a multiplication operator.")
        return self.coefficient((0,) * self.chart.dimension, 0)

    def __add__(self, other: 'DiffOperator') -> 'DiffOperator':
        self.chart.check_same(other.chart)
        terms = dict(self._terms)
        for key, coefficient in other.terms.items():
            terms[key] = terms.get(key, 0) + coefficient
        return DiffOperator(self.chart, terms)

    def __neg__(self) -> 'DiffOperator':
        return DiffOperator(self.chart, {key: -c for key, c in self._terms.items()})

    def __sub__(self, other: 'DiffOperator') -> 'DiffOperator':
        return self + (-other)

    def scale(self, factor) -> 'DiffOperator':
        factor = as_expression(factor)
        return DiffOperator(self.chart, {key: factor * c for key, c in self._terms.items()})

    def __matmul__(self, other: 'DiffOperator') -> 'DiffOperator':
        return op_compose(self, other)

    def __eq__(self, other):
        return isinstance(other, DiffOperator) and self.chart == other.chart and \
            dict(self._terms) == dict(other.terms)

    def __hash__(self):
        return hash((self.chart, tuple(self._terms.items())))

    def __str__(self):
        return format_operator(self)

    def __repr__(self):
        return f"DiffOperator({self})"


class SymbolTriple(object):
    """
    Principal symbol (S, B, C) of a second order operator in the coordinates (x^i, x^0 = log t):
    S^{ik} the space block, B^i the mixed block (upper connection) and C the vertical block (Brans-Dicke function).
    """

    def __init__(self, chart: Chart, S, B, C):
        n = chart.dimension
        S = sympy.ImmutableMatrix(S).applyfunc(simplify)
        if S.shape != (n, n):
            raise ValueError(f"S must be a {n}x{n} matrix but has shape {S.shape}.")
        if len(B) != n:
            raise ValueError(f"B must have {n} components but has {len(B)}.")
        self.chart = chart
        self.S = S
        self.B = tuple(simplify(as_expression(b)) for b in B)
        self.C = simplify(as_expression(C))
        for e in list(self.S) + list(self.B) + [self.C]:
            chart.check_expression(e)
        for i in range(n):
            for k in range(i + 1, n):
                if not is_zero(S[i, k] - S[k, i], chart):
                    raise ValueError(f"S is not symmetric: S[{i},{k}] = {S[i, k]} but S[{k},{i}] = {S[k, i]}.")

    @staticmethod
    def zero(chart: Chart) -> 'SymbolTriple':
        n = chart.dimension
        return SymbolTriple(chart, sympy.zeros(n, n), [0] * n, 0)

    def __eq__(self, other):
        return isinstance(other, SymbolTriple) and self.chart == other.chart and self.S == other.S and \
            self.B == other.B and self.C == other.C

    def __hash__(self):
        return hash((self.chart, self.S, self.B, self.C))

    def equals(self, other: 'SymbolTriple', policy: EqualityPolicy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC) -> bool:
        self.chart.check_same(other.chart)
        pairs = list(zip(self.S, other.S)) + list(zip(self.B, other.B)) + [(self.C, other.C)]
        return all(expr_equal(a, b, self.chart, policy) for a, b in pairs)

    def __repr__(self):
        S = [[format_expression(e) for e in self.S.row(i)] for i in range(self.chart.dimension)]
        B = [format_expression(e) for e in self.B]
        return f"SymbolTriple(S={S}, B={B}, C={format_expression(self.C)})"


def op_apply(op: DiffOperator, d: Density) -> Density:
    op.chart.check_same(d.chart)
    terms = defaultdict(lambda: sympy.Integer(0))
    for (alpha, power), coefficient in op.terms.items():
        for weight, s in d.terms.items():
            if power > 0 and weight == 0:
                continue
            derived = partial_power(s, alpha, op.chart)
            terms[weight] += coefficient * weight ** power * derived
    return Density(op.chart, terms)


def op_compose(a: DiffOperator, b: DiffOperator) -> DiffOperator:
    """
    Normal ordered product a o b. Derivatives of a are moved right past the coefficients of b with the Leibniz rule
    d^alpha o f = sum binom(alpha, gamma) (d^(alpha - gamma) f) d^gamma; w commutes with both coefficients and d_i.
    """
    a.chart.check_same(b.chart)
    chart = a.chart
    terms = defaultdict(lambda: sympy.Integer(0))
    derivatives = {}
    for (alpha, power_a), c in a.terms.items():
        for gamma, factor in _sub_indices(alpha):
            rest = tuple(x - y for x, y in zip(alpha, gamma))
            for (beta, power_b), d in b.terms.items():
                if (d, rest) not in derivatives:
                    derivatives[(d, rest)] = partial_power(d, rest, chart)
                derived = derivatives[(d, rest)]
                if derived == 0:
                    continue
                key = (tuple(x + y for x, y in zip(gamma, beta)), power_a + power_b)
                terms[key] += factor * c * derived
    result = DiffOperator(chart, terms)
    logger.debug(f"Composed operators of order {a.order} and {b.order} into {len(result.terms)} terms.")
    return result


def op_adjoint(op: DiffOperator) -> DiffOperator:
    """
    Adjoint with respect to the canonical scalar product: x* = x, d_i* = -d_i, w* = 1 - w.

    Each term c d^alpha w^k maps to (1 - w)^k o (-1)^|alpha| d^alpha o c, brought back to normal order.
    """
    chart = op.chart
    terms = defaultdict(lambda: sympy.Integer(0))
    for (alpha, power), c in op.terms.items():
        sign = (-1) ** sum(alpha)
        for gamma, factor in _sub_indices(alpha):
            rest = tuple(x - y for x, y in zip(alpha, gamma))
            derived = partial_power(c, rest, chart)
            if derived == 0:
                continue
            for j in range(power + 1):
                terms[(gamma, j)] += sign * factor * comb(power, j) * (-1) ** j * derived
    return DiffOperator(chart, terms)


def restrict(op: DiffOperator, weight) -> DiffOperator:
    """
    Member of the pencil at w = weight: every power w^k is replaced by weight^k.
    """
    weight = as_rational(weight)
    terms = defaultdict(lambda: sympy.Integer(0))
    for (alpha, power), c in op.terms.items():
        terms[(alpha, 0)] += c * weight ** power
    return DiffOperator(op.chart, terms)


def op_equal(a: DiffOperator, b: DiffOperator, policy: EqualityPolicy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC) -> bool:
    a.chart.check_same(b.chart)
    for key in set(a.terms) | set(b.terms):
        if not expr_equal(a.coefficient(*key), b.coefficient(*key), a.chart, policy):
            return False
    return True


def is_self_adjoint(op: DiffOperator, policy: EqualityPolicy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC) -> bool:
    return op_equal(op, op_adjoint(op), policy)


def divergence_hat(K: DiffOperator) -> sympy.Expr:
    """
    Divergence of the vector field K = K^i d_i + K^0 w on the extended manifold: d_i K^i - K^0.
    """
    n = K.chart.dimension
    for (alpha, power), c in K.terms.items():
        if sum(alpha) + power > 1:
            raise OperatorFormError(f"Divergence needs a first order operator K^i d_i + K^0 w, got {K}.")
        if sum(alpha) + power == 0:
            raise OperatorFormError(f"Divergence needs K(1) = 0 but {K} has the zeroth order term {c}.")
    result = -K.coefficient((0,) * n, 1)
    for i in range(n):
        result += diff(K.coefficient(unit_index(n, i), 0), i, K.chart)
    return simplify(result)


def extract_symbol(op: DiffOperator) -> SymbolTriple:
    """
    Reads (S, B, C) off an operator of order at most two written as
    S^{ik} d_i d_k + 2 w B^i d_i + w^2 C + lower order terms.
    """
    if op.order > 2:
        raise OperatorOrderError(f"Principal symbol extraction needs order <= 2 but the operator has order "
                                 f"{op.order}.")
    chart = op.chart
    n = chart.dimension
    S = sympy.zeros(n, n)
    B = [sympy.Integer(0)] * n
    C = sympy.Integer(0)
    for (alpha, power), c in op.terms.items():
        if sum(alpha) == 2 and power == 0:
            i, k = _expanded_indices(alpha)
            if i == k:
                S[i, i] = c
            else:
                S[i, k] = c / 2
                S[k, i] = c / 2
        elif sum(alpha) == 1 and power == 1:
            B[_expanded_indices(alpha)[0]] = c / 2
        elif sum(alpha) == 0 and power == 2:
            C = c
    return SymbolTriple(chart, S, B, C)


def build_canonical(st: SymbolTriple) -> DiffOperator:
    """
    The self-adjoint operator annihilating constants with principal symbol st:

        S^{ik} d_i d_k + (d_k S^{ki}) d_i + (2w - 1) B^i d_i + w (d_i B^i) + w (w - 1) C
    """
    chart = st.chart
    n = chart.dimension
    zero = (0,) * n
    terms = defaultdict(lambda: sympy.Integer(0))
    divergence_B = sympy.Integer(0)
    for i in range(n):
        e_i = unit_index(n, i)
        for k in range(n):
            e_k = unit_index(n, k)
            terms[(tuple(x + y for x, y in zip(e_i, e_k)), 0)] += st.S[i, k]
            terms[(e_i, 0)] += diff(st.S[k, i], k, chart)
        terms[(e_i, 0)] -= st.B[i]
        terms[(e_i, 1)] += 2 * st.B[i]
        divergence_B += diff(st.B[i], i, chart)
    terms[(zero, 1)] += divergence_B - st.C
    terms[(zero, 2)] += st.C
    return DiffOperator(chart, terms)


def format_operator(op: DiffOperator) -> str:
    """
    Canonical text in the DSL grammar. Terms are sorted by total order, then by derivative indices, then by power of w.
    """
    if op.is_zero():
        return "0"
    pieces = []
    for (alpha, power), c in op.terms.items():
        symbols = [f"d{i + 1}" for i in _expanded_indices(alpha)]
        if power == 1:
            symbols.append("w")
        elif power > 1:
            symbols.append(f"w^{power}")
        negative = c.could_extract_minus_sign()
        magnitude = -c if negative else c
        text = format_expression(magnitude)
        if isinstance(magnitude, sympy.Add):
            text = f"({text})"
        if symbols:
            body = "*".join(symbols) if magnitude == 1 else text + "*" + "*".join(symbols)
        else:
            body = text
        pieces.append((negative, body))
    negative, body = pieces[0]
    result = f"-{body}" if negative else body
    for negative, body in pieces[1:]:
        result += f" - {body}" if negative else f" + {body}"
    return result
