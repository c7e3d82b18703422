from ..utils import sampling
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from sympy.printing.precedence import precedence
from sympy.printing.str import StrPrinter
import logging
import math
import sympy
import yaml

logger = logging.getLogger('densops.calculus.expression')

__all__ = ['DensopsException', 'CoordinateIndexError', 'ExpressionDomainError', 'UnsupportedExpressionError',
           'EqualityPolicy', 'Chart', 'NUMERICS', 'as_rational', 'as_expression', 'diff', 'partial_power', 'simplify',
           'has_radical', 'evaluate', 'compile_expression', 'expr_equal', 'is_zero', 'format_expression', 'DslPrinter']

module_path = Path(__file__).parent
with open(module_path / 'numerics.yml', 'r') as stream:
    NUMERICS = yaml.safe_load(stream)


class DensopsException(Exception):
    pass


class CoordinateIndexError(DensopsException):
    pass


class ExpressionDomainError(DensopsException):
    pass


class UnsupportedExpressionError(DensopsException):
    pass


class EqualityPolicy(Enum):
    SYMBOLIC = "symbolic"
    NUMERIC = "numeric"
    SYMBOLIC_THEN_NUMERIC = "symbolic-then-numeric"


class Chart(object):
    """
    Local coordinates x1..xn of the base manifold.

    The vertical coordinate t (x0 = log t) of the extended manifold is not part of the chart: it lives in the weight
    grading of densities and in the powers of the weight operator.
    """

    def __init__(self, dimension: int, names: list = None):
        if dimension < 1:
            raise ValueError(f"Chart dimension must be at least 1 but got {dimension}.")
        if names is None:
            names = [f"x{i + 1}" for i in range(dimension)]
        if len(names) != dimension:
            raise ValueError(f"Expected {dimension} coordinate names but got {len(names)}.")
        if len(set(names)) != len(names):
            raise ValueError(f"Coordinate names must be distinct: {names}.")
        self.dimension = dimension
        self.names = tuple(names)
        # real symbols: log(exp(x)) collapses to x and conjugates never appear
        self.symbols = tuple(sympy.Symbol(name, real=True) for name in self.names)

    def __eq__(self, other):
        return isinstance(other, Chart) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return f"Chart({self.dimension}, {list(self.names)})"

    def check_index(self, index: int):
        if not 0 <= index < self.dimension:
            raise CoordinateIndexError(f"Coordinate index {index} is out of range for a chart of dimension "
                                       f"{self.dimension}.")

    def coordinate(self, index: int) -> sympy.Symbol:
        self.check_index(index)
        return self.symbols[index]

    def check_expression(self, e: sympy.Expr):
        foreign = e.free_symbols - set(self.symbols)
        if foreign:
            names = ", ".join(sorted(str(s) for s in foreign))
            raise UnsupportedExpressionError(f"Expression {e} contains symbols {names} that are not coordinates of "
                                             f"{self}.")

    def check_same(self, other: 'Chart'):
        if self != other:
            raise ValueError(f"Chart mismatch: {self} vs {other}.")


def as_rational(value) -> sympy.Rational:
    """
    Converts int, str ('p/q'), Fraction or sympy numbers into an exact sympy Rational. Floats are refused since all
    constants of the calculus are exact.
    """
    if isinstance(value, float):
        raise TypeError(f"Expected an exact rational but got float {value}.")
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, sympy.Basic):
        if not value.is_Rational:
            raise TypeError(f"Expected an exact rational but got {value}.")
        return value
    if isinstance(value, (int, str)):
        return sympy.Rational(value)
    raise TypeError(f"Expected int, str, Fraction or sympy Rational but got {type(value)} instead.")


def as_expression(value) -> sympy.Expr:
    if isinstance(value, sympy.Basic):
        return value
    if isinstance(value, (int, Fraction)):
        return as_rational(value)
    raise TypeError(f"Expected a sympy expression or an exact number but got {type(value)} instead.")


def has_radical(e) -> bool:
    """
    True if e contains a power with a non-integer exponent of a non-constant base, e.g. (1 + x1^2)^(1/2).
    """
    return any(p.base.free_symbols and not p.exp.is_Integer for p in as_expression(e).atoms(sympy.Pow))


def simplify(e) -> sympy.Expr:
    """
    Canonical-enough form: full expansion. Constants are folded, zeros and ones absorbed and like monomials merged.
    Expansion is idempotent, which keeps simplify(simplify(e)) == simplify(e).

    Expressions with radicals of non-constant bases (inverse maps of nonlinear chart changes, det^lambda factors) are
    returned unchanged and compared only through expr_equal, at sample points.
    """
    e = as_expression(e)
    if has_radical(e):
        return e
    return sympy.expand(e)


def diff(e: sympy.Expr, index: int, chart: Chart) -> sympy.Expr:
    chart.check_index(index)
    return _derivative(as_expression(e), index, chart)


@lru_cache(maxsize=NUMERICS['derivative_cache_size'])
def _derivative(e: sympy.Expr, index: int, chart: Chart) -> sympy.Expr:
    return simplify(sympy.diff(e, chart.symbols[index]))


def partial_power(e: sympy.Expr, alpha: tuple, chart: Chart) -> sympy.Expr:
    """
    Applies the mixed partial derivative described by the multi-index alpha.
    """
    result = e
    for index, count in enumerate(alpha):
        for _ in range(count):
            if result == 0:
                return result
            result = diff(result, index, chart)
    return result


@lru_cache(maxsize=4096)
def _compiled(e: sympy.Expr, symbols: tuple, module: str):
    return sympy.lambdify(symbols, e, modules=module)


def compile_expression(e: sympy.Expr, chart: Chart, module: str = 'numpy'):
    """
    Returns a callable taking one positional argument per coordinate. Results are cached per expression.
    """
    return _compiled(e, chart.symbols, module)


def evaluate(e: sympy.Expr, point, chart: Chart) -> float:
    if len(point) != chart.dimension:
        raise ValueError(f"Point {list(point)} does not match chart dimension {chart.dimension}.")
    function = _compiled(as_expression(e), chart.symbols, 'math')
    try:
        value = function(*[float(p) for p in point])
    except (ValueError, ZeroDivisionError, OverflowError) as err:
        raise ExpressionDomainError(f"Expression {e} can not be evaluated at {list(point)}: {err}") from err
    if isinstance(value, complex):
        raise ExpressionDomainError(f"Expression {e} is not real at {list(point)}.")
    return float(value)


def _symbolic_zero(e: sympy.Expr) -> bool:
    if has_radical(e):
        return e == 0
    e = sympy.expand(e)
    if e == 0:
        return True
    try:
        if e.has(sympy.sin, sympy.cos):
            # complex exponentials turn trig polynomial identities into Laurent polynomial identities
            if sympy.expand(e.rewrite(sympy.exp)) == 0:
                return True
        if e.has(sympy.Pow):
            if sympy.cancel(sympy.together(e)) == 0:
                return True
    except (sympy.PolynomialError, TypeError, ValueError) as err:
        logger.debug(f"Symbolic zero test gave up on {e}: {err}")
    return False


def _numeric_zero(e: sympy.Expr, reference: sympy.Expr, chart: Chart) -> bool:
    required = NUMERICS['sample_points']
    tolerance = NUMERICS['relative_tolerance']
    points = sampling.sample_points(chart.dimension, NUMERICS['max_sample_draws'], NUMERICS['seed'],
                                    NUMERICS['sample_low'], NUMERICS['sample_high'])
    checked = 0
    for point in points:
        try:
            difference = evaluate(e, point, chart)
            scale = evaluate(reference, point, chart)
        except ExpressionDomainError:
            continue
        if not math.isfinite(difference) or abs(difference) >= tolerance * (1 + abs(scale)):
            return False
        checked += 1
        if checked == required:
            return True
    logger.warning(f"Only {checked} of {required} sample points were inside the domain of {e}.")
    return False


def is_zero(e: sympy.Expr, chart: Chart, policy: EqualityPolicy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC,
            reference: sympy.Expr = None) -> bool:
    e = as_expression(e)
    if policy != EqualityPolicy.NUMERIC and _symbolic_zero(e):
        return True
    if policy == EqualityPolicy.SYMBOLIC:
        return False
    if policy == EqualityPolicy.SYMBOLIC_THEN_NUMERIC:
        logger.debug(f"Falling back to numeric zero test for {e}.")
    return _numeric_zero(e, e if reference is None else reference, chart)


def expr_equal(a, b, chart: Chart, policy: EqualityPolicy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC) -> bool:
    """
    Decides a == b. The symbolic path expands a - b (after rewriting trigonometric functions into exponentials and
    cancelling rational functions where needed); the numeric path compares at 16 seeded points of [-1, 1]^n with
    relative tolerance 1e-9.
    """
    a = as_expression(a)
    b = as_expression(b)
    return is_zero(a - b, chart, policy, reference=a)


class DslPrinter(StrPrinter):
    """
    Prints expressions in the grammar of the operator DSL: '^' for powers, exact rationals as 'p/q' and no sqrt.
    """

    def _print_Pow(self, expr, rational=False):
        base = self.parenthesize(expr.base, precedence(expr), strict=True)
        exponent = expr.exp
        if exponent.is_Integer and exponent >= 0:
            return f"{base}^{exponent}"
        return f"{base}^({self._print(exponent)})"

    def _print_Exp1(self, expr):
        return "exp(1)"


def format_expression(e) -> str:
    return DslPrinter().doprint(as_expression(e))
