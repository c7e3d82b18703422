from ..calculus import *
from .connections import Christoffel, trace_connection
import logging
import sympy

logger = logging.getLogger('densops.geometry.projective')

__all__ = ['PiSymbols', 'ExtendedChristoffel', 'pi_symbols', 'projective_shift', 'projectively_equivalent',
           'thomas_lift']


class PiSymbols(object):
    """
    Trace free projective symbols Pi^i_{km}, symmetric in (k, m). symbols[i][k][m] is Pi^i_{km}.
    """

    def __init__(self, chart: Chart, symbols):
        n = chart.dimension
        self.chart = chart
        self.symbols = Christoffel(chart, symbols).symbols
        for m in range(n):
            trace = sum(self.symbols[k][k][m] for k in range(n))
            if not is_zero(trace, chart):
                raise ValueError(f"Projective symbols are not trace free: Pi^k_(k{m}) = {format_expression(trace)}.")

    def __getitem__(self, index: tuple) -> sympy.Expr:
        i, k, m = index
        return self.symbols[i][k][m]

    def equals(self, other: 'PiSymbols', policy: EqualityPolicy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC) -> bool:
        self.chart.check_same(other.chart)
        n = self.chart.dimension
        return all(expr_equal(self[i, k, m], other[i, k, m], self.chart, policy)
                   for i in range(n) for k in range(n) for m in range(k, n))

    def __eq__(self, other):
        return isinstance(other, PiSymbols) and self.chart == other.chart and self.symbols == other.symbols

    def __hash__(self):
        return hash((self.chart, self.symbols))

    def __repr__(self):
        return f"PiSymbols({self.symbols})"


class ExtendedChristoffel(object):
    """
    Connection symbols on the extended chart (x^0 = log t, x^1 .. x^n). Index 0 is the vertical coordinate, base
    coordinate i of the chart has index i + 1. symbols[A][B][C] is Gamma^A_{BC}.

    The vertical entries are fixed: Gamma^i_{k0} = -delta^i_k / (n + 1), Gamma^i_{00} = Gamma^0_{i0} = 0 and
    Gamma^0_{00} = -1 / (n + 1).
    """

    def __init__(self, chart: Chart, symbols):
        n = chart.dimension
        size = n + 1
        table = tuple(tuple(tuple(simplify(as_expression(symbols[a][b][c])) for c in range(size))
                            for b in range(size)) for a in range(size))
        for a in range(size):
            for b in range(size):
                for c in range(size):
                    chart.check_expression(table[a][b][c])
                    if table[a][b][c] != table[a][c][b]:
                        raise ValueError(f"Extended symbols are not symmetric at ({a}, {b}, {c}).")
        for a in range(size):
            for b in range(size):
                expected = self.vertical_constant(n, a, b)
                if table[a][b][0] != expected:
                    raise ValueError(f"Extended symbol ({a}, {b}, 0) must be {expected} but is {table[a][b][0]}.")
        self.chart = chart
        self.symbols = table

    @staticmethod
    def vertical_constant(dimension: int, a: int, b: int) -> sympy.Rational:
        """Gamma^a_{b0} of the lift."""
        if a == b:
            return sympy.Rational(-1, dimension + 1)
        return sympy.Integer(0)

    def __getitem__(self, index: tuple) -> sympy.Expr:
        a, b, c = index
        return self.symbols[a][b][c]

    def base_block(self) -> tuple:
        """Gamma^i_{km} for base indices only."""
        n = self.chart.dimension
        return tuple(tuple(tuple(self.symbols[i + 1][k + 1][m + 1] for m in range(n)) for k in range(n))
                     for i in range(n))

    def vertical_block(self) -> tuple:
        """Gamma^0_{km} for base indices."""
        n = self.chart.dimension
        return tuple(tuple(self.symbols[0][k + 1][m + 1] for m in range(n)) for k in range(n))

    def __eq__(self, other):
        return isinstance(other, ExtendedChristoffel) and self.chart == other.chart and self.symbols == other.symbols

    def __hash__(self):
        return hash((self.chart, self.symbols))

    def __repr__(self):
        return f"ExtendedChristoffel({self.symbols})"


def pi_symbols(christoffel: Christoffel) -> PiSymbols:
    """
    Pi^i_{km} = Gamma^i_{km} + (gamma_k delta^i_m + gamma_m delta^i_k) / (n + 1) with gamma_i = -Gamma^k_{ik}.
    """
    chart = christoffel.chart
    n = chart.dimension
    gamma = trace_connection(christoffel).components
    factor = sympy.Rational(1, n + 1)

    def symbol(i, k, m):
        result = christoffel[i, k, m]
        if i == m:
            result += factor * gamma[k]
        if i == k:
            result += factor * gamma[m]
        return result

    return PiSymbols(chart, [[[symbol(i, k, m) for m in range(n)] for k in range(n)] for i in range(n)])


def projective_shift(christoffel: Christoffel, t: list) -> Christoffel:
    """
    Gamma^i_{km} + t_k delta^i_m + t_m delta^i_k
    """
    chart = christoffel.chart
    n = chart.dimension
    if len(t) != n:
        raise ValueError(f"Projective shift needs {n} components but got {len(t)}.")
    t = [as_expression(c) for c in t]

    def symbol(i, k, m):
        result = christoffel[i, k, m]
        if i == m:
            result += t[k]
        if i == k:
            result += t[m]
        return result

    return Christoffel.from_function(chart, symbol)


def projectively_equivalent(first: Christoffel, second: Christoffel,
                            policy: EqualityPolicy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC):
    """
    Whether the two connections have the same geodesics up to parametrisation, i.e. equal Pi symbols.

    :return: (equivalent, t) where second = projective_shift(first, t) when equivalent, else (False, None)
    """
    first.chart.check_same(second.chart)
    chart = first.chart
    n = chart.dimension
    if not pi_symbols(first).equals(pi_symbols(second), policy):
        return False, None
    t = tuple(simplify(sum(second[i, i, k] - first[i, i, k] for i in range(n)) / (n + 1)) for k in range(n))
    return True, t


def thomas_lift(pi: PiSymbols) -> ExtendedChristoffel:
    """
    Connection on the extended chart assigned to the projective class:

        Gamma^i_{km} = Pi^i_{km}
        Gamma^0_{km} = (d_r Pi^r_{km} - Pi^r_{sk} Pi^s_{rm}) / (n + 1)

    with the fixed vertical entries of ExtendedChristoffel.
    """
    chart = pi.chart
    n = chart.dimension
    size = n + 1
    factor = sympy.Rational(1, n + 1)
    table = [[[sympy.Integer(0)] * size for _ in range(size)] for _ in range(size)]
    for a in range(size):
        for b in range(size):
            table[a][b][0] = ExtendedChristoffel.vertical_constant(n, a, b)
            table[a][0][b] = table[a][b][0]
    for k in range(n):
        for m in range(n):
            for i in range(n):
                table[i + 1][k + 1][m + 1] = pi[i, k, m]
            vertical = sum(diff(pi[r, k, m], r, chart) for r in range(n))
            vertical -= sum(pi[r, s, k] * pi[s, r, m] for r in range(n) for s in range(n))
            table[0][k + 1][m + 1] = factor * vertical
    logger.debug(f"Lifted projective symbols of dimension {n}.")
    return ExtendedChristoffel(chart, table)
