from ..calculus.expression import Chart, DensopsException, NUMERICS, compile_expression, simplify
from . import sampling
import logging
import numpy as np
import sympy

logger = logging.getLogger('densops.utils.integration')

TWO_PI = 2 * sympy.pi


class IntegrationError(DensopsException):
    pass


class IntegrationDomain(object):
    """
    Domain of integration of the canonical scalar product.

    The flat torus [0, 2pi]^n is the default: on a closed manifold integration by parts has no boundary terms.
    A box with Gauss-Legendre quadrature is available for integrands that are not periodic.
    """
    TORUS = "torus"
    BOX = "box"

    def __init__(self, kind: str, dimension: int, bounds: list = None, order: int = None):
        if kind not in (IntegrationDomain.TORUS, IntegrationDomain.BOX):
            raise ValueError(f"Unknown integration domain {kind}.")
        if kind == IntegrationDomain.BOX:
            if bounds is None or len(bounds) != dimension:
                raise ValueError(f"A box domain needs {dimension} (low, high) bounds.")
            bounds = [(float(low), float(high)) for low, high in bounds]
        self.kind = kind
        self.dimension = dimension
        self.bounds = bounds
        self.order = order if order is not None else NUMERICS['gauss_order']

    @staticmethod
    def torus(dimension: int) -> 'IntegrationDomain':
        return IntegrationDomain(IntegrationDomain.TORUS, dimension)

    @staticmethod
    def box(bounds: list, order: int = None) -> 'IntegrationDomain':
        return IntegrationDomain(IntegrationDomain.BOX, len(bounds), bounds, order)

    def __repr__(self):
        if self.kind == IntegrationDomain.TORUS:
            return f"Torus(n={self.dimension})"
        return f"Box({self.bounds}, order={self.order})"


def integrate(e: sympy.Expr, chart: Chart, domain: IntegrationDomain = None):
    if domain is None:
        domain = IntegrationDomain.torus(chart.dimension)
    if domain.dimension != chart.dimension:
        raise ValueError(f"Domain {domain} does not match chart dimension {chart.dimension}.")
    if domain.kind == IntegrationDomain.TORUS:
        return integrate_torus(e, chart)
    return integrate_box(e, chart, domain)


def fourier_constant(e: sympy.Expr, chart: Chart):
    """
    Constant Fourier coefficient of a trigonometric polynomial in the coordinates.

    Every sin(x_i), cos(x_i) is replaced by its Laurent form in z_i = exp(i x_i); after expansion the constant term is
    the z-free part.

    :return: exact sympy number, or None when e is not a trigonometric polynomial
    """
    expanded = sympy.expand(sympy.expand_trig(e))
    zs = sympy.symbols(f"z1:{chart.dimension + 1}")
    replacements = {}
    for x, z in zip(chart.symbols, zs):
        replacements[sympy.sin(x)] = (z - 1 / z) / (2 * sympy.I)
        replacements[sympy.cos(x)] = (z + 1 / z) / 2
    laurent = sympy.expand(expanded.xreplace(replacements))
    if not laurent.free_symbols.isdisjoint(chart.symbols):
        return None
    constant = sympy.Integer(0)
    for term in sympy.Add.make_args(laurent):
        coefficient, monomial = term.as_independent(*zs, as_Add=False)
        if not coefficient.is_number:
            return None
        if monomial == 1:
            constant += coefficient
            continue
        for factor in sympy.Mul.make_args(monomial):
            base, exponent = factor.as_base_exp()
            if base not in zs or not exponent.is_Integer:
                return None
    constant = sympy.expand(constant)
    if constant.has(sympy.I):
        return None
    return constant


def is_trig_polynomial(e: sympy.Expr, chart: Chart) -> bool:
    return fourier_constant(e, chart) is not None


def _check_bounded(e: sympy.Expr):
    if e.has(sympy.log):
        raise IntegrationError(f"Integrand {e} contains a logarithm and is not bounded on the torus.")
    for power in e.atoms(sympy.Pow):
        if power.exp.is_negative and not power.base.is_number:
            raise IntegrationError(f"Integrand {e} contains the negative power {power} and is not bounded on the "
                                   f"torus.")


def integrate_torus(e: sympy.Expr, chart: Chart, exact: bool = True):
    """
    Integral over [0, 2pi]^n.

    Trigonometric polynomials with exact constants take the exact path: (2pi)^n times the constant Fourier coefficient.
    Everything else is integrated with the periodic trapezoid rule (spectrally accurate for smooth periodic integrands).
    """
    e = simplify(e)
    chart.check_expression(e)
    _check_bounded(e)
    if exact:
        constant = fourier_constant(e, chart)
        if constant is not None:
            return simplify(constant * TWO_PI ** chart.dimension)
        logger.info(f"Integrand {e} is not a trigonometric polynomial; using quadrature.")
    return integrate_torus_quadrature(e, chart)


def integrate_torus_quadrature(e: sympy.Expr, chart: Chart, points: int = None) -> float:
    if points is None:
        points = NUMERICS['quadrature_points']
    grid = sampling.torus_grid(chart.dimension, points)
    values = _evaluate_on_grid(e, chart, grid)
    result = float(np.mean(values)) * (2 * np.pi) ** chart.dimension
    if not np.isfinite(result):
        raise IntegrationError(f"Quadrature of {e} over the torus did not give a finite value.")
    return result


def integrate_box(e: sympy.Expr, chart: Chart, domain: IntegrationDomain) -> float:
    nodes, weights = sampling.gauss_grid(domain.bounds, domain.order)
    values = _evaluate_on_grid(simplify(e), chart, nodes)
    result = float(np.sum(values * weights))
    if not np.isfinite(result):
        raise IntegrationError(f"Quadrature of {e} over {domain} did not give a finite value.")
    return result


def _evaluate_on_grid(e: sympy.Expr, chart: Chart, grid: list) -> np.ndarray:
    function = compile_expression(e, chart, 'numpy')
    with np.errstate(all='ignore'):
        values = np.asarray(function(*grid), dtype=float)
    # lambdify returns a scalar for constant expressions
    return np.broadcast_to(values, grid[0].shape)
