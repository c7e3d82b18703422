"""
Text syntax of operators on densities.

    d1 .. dn   partial derivatives
    w          weight operator t d/dt
    x1 .. xn   coordinates
    p/q        exact rational constants
    sin cos exp log, adj(...)
    + - * / ^  with '*' the operator product (composition), '@' composition with the lowest precedence

Juxtaposition is not allowed: '2*x1*d1', never '2x1 d1'. Coefficients of the mixed block are written with the factor
two of the normal form, so 'd1*d1 + 2*w*B*d1 + w^2*C' has principal symbol (1, B, C).
"""
from ..calculus.expression import Chart, DensopsException, as_rational
from ..calculus.operators import DiffOperator, op_adjoint, op_compose
from functools import lru_cache
import logging
import pyparsing as pp
import sympy

logger = logging.getLogger('densops.utils.dsl')

pp.ParserElement.enable_packrat()

FUNCTIONS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "exp": sympy.exp,
    "log": sympy.log,
}


class DslSyntaxError(DensopsException):

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class OperatorParser(object):
    """
    Parses DSL text into normal ordered operators on a fixed chart.
    """

    def __init__(self, chart: Chart):
        self.chart = chart
        self.grammar = self._build_grammar()

    def parse_operator(self, text: str) -> DiffOperator:
        try:
            result = self.grammar.parse_string(text, parse_all=True)
        except pp.ParseBaseException as err:
            logger.debug(f"Could not parse '{text}': {err}")
            raise DslSyntaxError(err.msg, err.lineno, err.col) from err
        except RecursionError as err:
            raise DslSyntaxError("Expression is nested too deeply", 1, 1) from err
        return result[0]

    def parse_expression(self, text: str) -> sympy.Expr:
        op = self.parse_operator(text)
        if not op.is_multiplication():
            raise DslSyntaxError(f"Expected a coefficient expression but '{text}' contains d<i> or w", 1, 1)
        return op.as_multiplier()

    def _build_grammar(self) -> pp.ParserElement:
        expression = pp.Forward()
        lpar, rpar = map(pp.Suppress, "()")

        number = pp.Regex(r"[0-9]+").set_name("integer")
        number.set_parse_action(lambda toks: self._multiplier(sympy.Integer(toks[0])))
        coordinate = pp.Regex(r"x[0-9]+(?![A-Za-z0-9_])").set_name("coordinate")
        coordinate.set_parse_action(self._coordinate)
        derivative = pp.Regex(r"d[0-9]+(?![A-Za-z0-9_])").set_name("derivative")
        derivative.set_parse_action(self._derivative)
        weight = pp.Keyword("w")
        weight.set_parse_action(lambda toks: DiffOperator.weight(self.chart))

        function = pp.one_of(list(FUNCTIONS), as_keyword=True) + lpar + expression + rpar
        function.set_parse_action(self._function)
        adjoint = pp.Keyword("adj") + lpar + expression + rpar
        adjoint.set_parse_action(lambda toks: op_adjoint(toks[1]))

        atom = function | adjoint | weight | coordinate | derivative | number
        expression <<= pp.infix_notation(atom, [
            (pp.Literal("^"), 2, pp.OpAssoc.RIGHT, self._power),
            (pp.Literal("-"), 1, pp.OpAssoc.RIGHT, self._negate),
            (pp.one_of("* /"), 2, pp.OpAssoc.LEFT, self._product),
            (pp.one_of("+ -"), 2, pp.OpAssoc.LEFT, self._sum),
            (pp.Literal("@"), 2, pp.OpAssoc.LEFT, self._compose),
        ])
        return expression

    def _multiplier(self, e: sympy.Expr) -> DiffOperator:
        return DiffOperator.multiplication(self.chart, e)

    def _index(self, s: str, loc: int, token: str) -> int:
        index = int(token[1:])
        if not 1 <= index <= self.chart.dimension:
            raise pp.ParseFatalException(s, loc, f"Unknown coordinate index {index} in '{token}' for a chart of "
                                                 f"dimension {self.chart.dimension}")
        return index - 1

    def _coordinate(self, s, loc, toks):
        return self._multiplier(self.chart.symbols[self._index(s, loc, toks[0])])

    def _derivative(self, s, loc, toks):
        return DiffOperator.partial(self.chart, self._index(s, loc, toks[0]))

    def _function(self, s, loc, toks):
        name, argument = toks[0], toks[1]
        if not argument.is_multiplication():
            raise pp.ParseFatalException(s, loc, f"Argument of {name} must not contain d<i> or w")
        return self._multiplier(FUNCTIONS[name](argument.as_multiplier()))

    def _power(self, s, loc, toks):
        operands = toks[0][0::2]
        result = operands[-1]
        for base in reversed(operands[:-1]):
            result = self._raise(base, result, s, loc)
        return result

    def _raise(self, base: DiffOperator, exponent: DiffOperator, s: str, loc: int) -> DiffOperator:
        if not exponent.is_multiplication() or not exponent.as_multiplier().is_Rational:
            raise pp.ParseFatalException(s, loc, "Exponents must be exact rational constants")
        value = exponent.as_multiplier()
        if base.is_multiplication():
            result = base.as_multiplier() ** value
            if result.has(sympy.zoo, sympy.nan):
                raise pp.ParseFatalException(s, loc, "Division by zero")
            return self._multiplier(result)
        if not value.is_Integer or value < 0:
            raise pp.ParseFatalException(s, loc, "Operators can only be raised to non-negative integer powers")
        result = DiffOperator.identity(self.chart)
        for _ in range(int(value)):
            result = op_compose(result, base)
        return result

    def _negate(self, toks):
        return -toks[0][1]

    def _product(self, s, loc, toks):
        items = toks[0]
        result = items[0]
        for symbol, operand in zip(items[1::2], items[2::2]):
            if symbol == "*":
                result = op_compose(result, operand)
                continue
            if not operand.is_multiplication():
                raise pp.ParseFatalException(s, loc, "Division by an operator containing d<i> or w")
            divisor = operand.as_multiplier()
            if divisor == 0:
                raise pp.ParseFatalException(s, loc, "Division by zero")
            result = op_compose(result, self._multiplier(1 / divisor))
        return result

    def _sum(self, toks):
        items = toks[0]
        result = items[0]
        for symbol, operand in zip(items[1::2], items[2::2]):
            result = result + operand if symbol == "+" else result - operand
        return result

    def _compose(self, toks):
        items = toks[0]
        result = items[0]
        for operand in items[2::2]:
            result = op_compose(result, operand)
        return result


@lru_cache(maxsize=16)
def get_parser(chart: Chart) -> OperatorParser:
    return OperatorParser(chart)


def parse_operator(text: str, chart: Chart) -> DiffOperator:
    return get_parser(chart).parse_operator(text)


def parse_expression(text: str, chart: Chart) -> sympy.Expr:
    return get_parser(chart).parse_expression(text)


def parse_rational(text) -> sympy.Rational:
    try:
        return as_rational(text.strip() if isinstance(text, str) else text)
    except (TypeError, ValueError) as err:
        raise DslSyntaxError(f"'{text}' is not an exact rational", 1, 1) from err
