from ..calculus import *
from ..utils import sampling
import logging
import numpy as np
import sympy

logger = logging.getLogger('densops.geometry.connections')

__all__ = ['DegenerateSymbolError', 'InconsistentSystemError', 'MetricError', 'VolumeFormError', 'Connection',
           'VolumeForm', 'Metric', 'Christoffel', 'connection_from_volume', 'connection_from_metric',
           'trace_connection', 'levi_civita', 'gamma_transform', 'christoffel_transform', 'divergence_gamma',
           'kk_extract', 'horizontal_distribution_consistent', 'is_upper_connection_induced', 'brans_dicke',
           'covariant_parts', 'op_conjugate', 'symbolic_inverse']


class DegenerateSymbolError(DensopsException):
    pass


class InconsistentSystemError(DensopsException):
    pass


class MetricError(DensopsException):
    pass


class VolumeFormError(DensopsException):
    pass


def _sample_points(chart: Chart) -> np.ndarray:
    return sampling.sample_points(chart.dimension, NUMERICS['sample_points'], NUMERICS['seed'],
                                  NUMERICS['sample_low'], NUMERICS['sample_high'])


class Connection(object):
    """
    Connection gamma_i on densities: the covariant derivative of s t^l along X is (X^i d_i s + l gamma_i X^i s) t^l.
    """

    def __init__(self, chart: Chart, components: list):
        if len(components) != chart.dimension:
            raise ValueError(f"Connection needs {chart.dimension} components but got {len(components)}.")
        self.chart = chart
        self.components = tuple(simplify(as_expression(c)) for c in components)
        for c in self.components:
            chart.check_expression(c)

    @staticmethod
    def zero(chart: Chart) -> 'Connection':
        return Connection(chart, [0] * chart.dimension)

    def equals(self, other: 'Connection', policy: EqualityPolicy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC) -> bool:
        self.chart.check_same(other.chart)
        return all(expr_equal(a, b, self.chart, policy) for a, b in zip(self.components, other.components))

    def __eq__(self, other):
        return isinstance(other, Connection) and self.chart == other.chart and self.components == other.components

    def __hash__(self):
        return hash((self.chart, self.components))

    def __repr__(self):
        return f"Connection({[format_expression(c) for c in self.components]})"


class VolumeForm(object):

    def __init__(self, chart: Chart, density):
        self.chart = chart
        self.density = simplify(as_expression(density))
        chart.check_expression(self.density)
        for point in _sample_points(chart):
            try:
                value = evaluate(self.density, point, chart)
            except ExpressionDomainError as err:
                raise VolumeFormError(f"Volume form {self.density} is not defined at {list(point)}.") from err
            if value <= 0:
                raise VolumeFormError(f"Volume form {self.density} is not positive at {list(point)}.")

    def __repr__(self):
        return f"VolumeForm({format_expression(self.density)})"


def symbolic_inverse(matrix: sympy.ImmutableMatrix, chart: Chart):
    """
    Inverse by adjugate over determinant.

    :return: (inverse, determinant); inverse is None when the determinant vanishes at a sample point
    """
    n = chart.dimension
    if n > NUMERICS['max_symbolic_inverse_dimension']:
        raise ValueError(f"Symbolic inversion is only attempted up to dimension "
                         f"{NUMERICS['max_symbolic_inverse_dimension']}; supply the inverse for n = {n}.")
    determinant = simplify(matrix.det())
    if determinant == 0:
        return None, determinant
    tolerance = NUMERICS['relative_tolerance']
    for point in _sample_points(chart):
        values = np.array([[evaluate(matrix[i, k], point, chart) for k in range(n)] for i in range(n)])
        # Hadamard bound: |det| <= product of the row norms
        scale = float(np.prod(np.linalg.norm(values, axis=1)))
        if scale == 0 or abs(evaluate(determinant, point, chart)) <= tolerance * scale:
            return None, determinant
    if n == 1:
        return sympy.ImmutableMatrix([[simplify(1 / determinant)]]), determinant
    inverse = matrix.adjugate().applyfunc(lambda e: simplify(e / determinant))
    return sympy.ImmutableMatrix(inverse), determinant


def _check_inverse(matrix, inverse, chart: Chart) -> bool:
    product = sympy.ImmutableMatrix(matrix) * sympy.ImmutableMatrix(inverse)
    identity = sympy.eye(chart.dimension)
    return all(expr_equal(product[i, k], identity[i, k], chart)
               for i in range(chart.dimension) for k in range(chart.dimension))


class Metric(object):
    """
    Metric g_{ik} with its inverse g^{ik}. The inverse is computed by adjugate for n <= 3 and must be supplied
    otherwise; a supplied inverse is validated.
    """

    def __init__(self, chart: Chart, g, g_inv=None):
        n = chart.dimension
        g = sympy.ImmutableMatrix(g).applyfunc(simplify)
        if g.shape != (n, n):
            raise MetricError(f"Metric must be a {n}x{n} matrix but has shape {g.shape}.")
        if not g.is_symmetric():
            raise MetricError(f"Metric {g} is not symmetric.")
        if g_inv is None:
            g_inv, determinant = symbolic_inverse(g, chart)
            if g_inv is None:
                raise MetricError(f"Metric {g} is degenerate: det = {format_expression(determinant)}.")
        else:
            g_inv = sympy.ImmutableMatrix(g_inv).applyfunc(simplify)
            if g_inv.shape != (n, n) or not _check_inverse(g, g_inv, chart):
                raise MetricError("The supplied inverse metric does not invert the metric.")
        self.chart = chart
        self.g = g
        self.g_inv = g_inv
        self.determinant = simplify(g.det())

    def __repr__(self):
        return f"Metric({[[format_expression(e) for e in self.g.row(i)] for i in range(self.chart.dimension)]})"


class Christoffel(object):
    """
    Christoffel symbols of a symmetric affine connection. symbols[i][k][m] is Gamma^i_{km}.
    """

    def __init__(self, chart: Chart, symbols):
        n = chart.dimension
        table = []
        for i in range(n):
            table.append(tuple(tuple(simplify(as_expression(symbols[i][k][m])) for m in range(n))
                               for k in range(n)))
        for entry in [e for plane in table for row in plane for e in row]:
            chart.check_expression(entry)
        for i in range(n):
            for k in range(n):
                for m in range(k + 1, n):
                    if not is_zero(table[i][k][m] - table[i][m][k], chart):
                        raise ValueError(f"Christoffel symbols are not symmetric in the lower indices at "
                                         f"({i}, {k}, {m}).")
        self.chart = chart
        self.symbols = tuple(table)

    @staticmethod
    def zero(chart: Chart) -> 'Christoffel':
        n = chart.dimension
        return Christoffel(chart, [[[0] * n for _ in range(n)] for _ in range(n)])

    @staticmethod
    def from_function(chart: Chart, function) -> 'Christoffel':
        n = chart.dimension
        return Christoffel(chart, [[[function(i, k, m) for m in range(n)] for k in range(n)] for i in range(n)])

    def __getitem__(self, index: tuple) -> sympy.Expr:
        i, k, m = index
        return self.symbols[i][k][m]

    def trace(self) -> tuple:
        """Gamma^k_{ik} for each i."""
        n = self.chart.dimension
        return tuple(simplify(sum(self.symbols[k][i][k] for k in range(n))) for i in range(n))

    def equals(self, other: 'Christoffel', policy: EqualityPolicy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC) -> bool:
        self.chart.check_same(other.chart)
        n = self.chart.dimension
        return all(expr_equal(self[i, k, m], other[i, k, m], self.chart, policy)
                   for i in range(n) for k in range(n) for m in range(k, n))

    def __eq__(self, other):
        return isinstance(other, Christoffel) and self.chart == other.chart and self.symbols == other.symbols

    def __hash__(self):
        return hash((self.chart, self.symbols))

    def __repr__(self):
        return f"Christoffel({self.symbols})"


def connection_from_volume(v: VolumeForm) -> Connection:
    """
    gamma_i = -d_i log rho
    """
    chart = v.chart
    return Connection(chart, [-diff(sympy.log(v.density), i, chart) for i in range(chart.dimension)])


def connection_from_metric(g: Metric) -> Connection:
    # -d_i log sqrt(det g) = -(d_i det g) / (2 det g)
    chart = g.chart
    return Connection(chart, [-diff(g.determinant, i, chart) / (2 * g.determinant) for i in range(chart.dimension)])


def trace_connection(christoffel: Christoffel) -> Connection:
    return Connection(christoffel.chart, [-t for t in christoffel.trace()])


def levi_civita(g: Metric) -> Christoffel:
    chart = g.chart
    n = chart.dimension

    def symbol(i, k, m):
        return sum(g.g_inv[i, j] * (diff(g.g[j, m], k, chart) + diff(g.g[j, k], m, chart) - diff(g.g[k, m], j, chart))
                   for j in range(n)) / 2

    return Christoffel.from_function(chart, symbol)


def _log_det_gradient(change: ChartChange) -> list:
    # d_i log det(dx'/dx), rewritten in the new coordinates
    chart = change.chart
    determinant = change.jacobian_determinant
    return [change.to_new(diff(determinant, i, chart) / determinant) for i in range(chart.dimension)]


def gamma_transform(gamma: Connection, change: ChartChange) -> Connection:
    """
    gamma'_j = (dx^i/dx'^j) (gamma_i + d_i log det(dx'/dx)), as functions of the new coordinates.
    """
    gamma.chart.check_same(change.chart)
    n = gamma.chart.dimension
    shift = _log_det_gradient(change)
    shifted = [change.to_new(gamma.components[i]) + shift[i] for i in range(n)]
    return Connection(gamma.chart, [sum(change.inverse_jacobian[i, j] * shifted[i] for i in range(n))
                                    for j in range(n)])


def christoffel_transform(christoffel: Christoffel, change: ChartChange) -> Christoffel:
    """
    Gamma'^a_{bc} = J^a_i Jinv^k_b Jinv^m_c Gamma^i_{km} + J^a_i d^2 x^i / dx'^b dx'^c
    with J = dx'/dx and Jinv = dx/dx', everything in the new coordinates.
    """
    christoffel.chart.check_same(change.chart)
    chart = christoffel.chart
    n = chart.dimension
    J = change.jacobian.applyfunc(change.to_new)
    Jinv = change.inverse_jacobian
    old = [[[change.to_new(christoffel[i, k, m]) for m in range(n)] for k in range(n)] for i in range(n)]
    second = [[[diff(diff(change.inverse[i], b, chart), c, chart) for c in range(n)] for b in range(n)]
              for i in range(n)]

    def symbol(a, b, c):
        result = sympy.Integer(0)
        for i in range(n):
            result += J[a, i] * second[i][b][c]
            for k in range(n):
                for m in range(n):
                    result += J[a, i] * Jinv[k, b] * Jinv[m, c] * old[i][k][m]
        return result

    return Christoffel.from_function(chart, symbol)


def divergence_gamma(X, gamma: Connection) -> sympy.Expr:
    """
    div_gamma X = d_i X^i - gamma_i X^i for a vector field X on the base.
    """
    gamma.chart.check_same(X.chart)
    chart = gamma.chart
    return simplify(sum(diff(c, i, chart) - g * c for i, (c, g) in enumerate(zip(X.components, gamma.components))))


def horizontal_distribution_consistent(st: SymbolTriple) -> bool:
    """
    Whether S^{ik} gamma_k = B^i has a solution at every sample point, i.e. B lies in the range of S. For a degenerate
    symbol this is the condition for a horizontal distribution annihilated by the symbol to exist.
    """
    chart = st.chart
    n = chart.dimension
    tolerance = NUMERICS['relative_tolerance']
    for point in _sample_points(chart):
        S = np.array([[evaluate(st.S[i, k], point, chart) for k in range(n)] for i in range(n)])
        B = np.array([evaluate(b, point, chart) for b in st.B])
        solution = np.linalg.lstsq(S, B, rcond=None)[0]
        residual = float(np.linalg.norm(S @ solution - B))
        if residual > np.sqrt(tolerance) * (1 + float(np.linalg.norm(B))):
            logger.debug(f"B is not in the range of S at {list(point)}: residual {residual}.")
            return False
    return True


def kk_extract(st: SymbolTriple, inverse=None) -> Connection:
    """
    Solves S^{ik} gamma_k = B^i for the connection whose horizontal distribution is defined by the symbol.

    :param inverse: optional inverse of S; required when the dimension is too large for symbolic inversion
    :raises DegenerateSymbolError: S is not invertible on the sample domain
    :raises InconsistentSystemError: the solution does not satisfy the system
    """
    chart = st.chart
    n = chart.dimension
    if inverse is not None:
        inverse = sympy.ImmutableMatrix(inverse).applyfunc(simplify)
        if inverse.shape != (n, n) or not _check_inverse(st.S, inverse, chart):
            raise InconsistentSystemError("The supplied inverse does not invert S.")
    else:
        inverse, determinant = symbolic_inverse(st.S, chart)
        if inverse is None:
            if horizontal_distribution_consistent(st):
                message = "B lies in the range of S, but the connection is not unique"
            else:
                message = "B is not in the range of S, no connection solves the system"
            raise DegenerateSymbolError(f"S is degenerate (det = {format_expression(determinant)}): {message}.")
    gamma = [simplify(sum(inverse[k, i] * st.B[i] for i in range(n))) for k in range(n)]
    for i in range(n):
        lhs = sum(st.S[i, k] * gamma[k] for k in range(n))
        if not expr_equal(lhs, st.B[i], chart):
            raise InconsistentSystemError(f"S gamma = B fails in component {i} after inversion.")
    logger.debug(f"Extracted connection {gamma}.")
    return Connection(chart, gamma)


def is_upper_connection_induced(st: SymbolTriple) -> bool:
    """
    Whether the mixed block B is of the form S gamma for some connection gamma.
    """
    if st.chart.dimension <= NUMERICS['max_symbolic_inverse_dimension']:
        inverse, _ = symbolic_inverse(st.S, st.chart)
        if inverse is not None:
            return True
    return horizontal_distribution_consistent(st)


def brans_dicke(st: SymbolTriple, gamma: Connection) -> sympy.Expr:
    """
    C - B^i gamma_i; a scalar when B = S gamma.
    """
    st.chart.check_same(gamma.chart)
    return simplify(st.C - sum(b * g for b, g in zip(st.B, gamma.components)))


def covariant_parts(st: SymbolTriple, christoffel: Christoffel):
    """
    Vector and scalar part of the symbol relative to an affine connection, with Gamma_i = -Gamma^k_{ik}:

        B^i - S^{ik} Gamma_k  and  C - 2 B^i Gamma_i + S^{ik} Gamma_i Gamma_k

    :return: (tuple of n expressions, expression)
    """
    st.chart.check_same(christoffel.chart)
    n = st.chart.dimension
    Gamma = trace_connection(christoffel).components
    vector = tuple(simplify(st.B[i] - sum(st.S[i, k] * Gamma[k] for k in range(n))) for i in range(n))
    scalar = st.C - 2 * sum(st.B[i] * Gamma[i] for i in range(n))
    scalar += sum(st.S[i, k] * Gamma[i] * Gamma[k] for i in range(n) for k in range(n))
    return vector, simplify(scalar)


def op_conjugate(op: DiffOperator, change: ChartChange) -> DiffOperator:
    """
    The operator P o op o P^-1 in the new coordinates, where P is the pullback of densities along the change.

    Coefficients are substituted, w is invariant, and each d_i becomes J^j_i d'_j + w d_i log det J, which accounts for
    the determinant factor the pullback attaches to a density of weight w.
    """
    op.chart.check_same(change.chart)
    if op.order > 2:
        raise OperatorOrderError(f"Chart change conjugation supports order <= 2, got order {op.order}.")
    chart = op.chart
    n = chart.dimension
    if op.weight_degree > 0 or any(sum(alpha) > 0 for alpha, _ in op.terms):
        change.check_orientation()
    shift = _log_det_gradient(change)
    partials = []
    for i in range(n):
        terms = {(unit_index(n, j), 0): change.to_new(change.jacobian[j, i]) for j in range(n)}
        terms[((0,) * n, 1)] = shift[i]
        partials.append(DiffOperator(chart, terms))
    result = DiffOperator.zero(chart)
    for (alpha, power), c in op.terms.items():
        term = DiffOperator.multiplication(chart, change.to_new(c))
        for index, count in enumerate(alpha):
            for _ in range(count):
                term = op_compose(term, partials[index])
        if power > 0:
            term = op_compose(term, DiffOperator.weight(chart, power))
        result = result + term
    logger.debug(f"Conjugated operator of order {op.order} along {change}.")
    return result
