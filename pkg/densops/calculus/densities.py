from .expression import *
from ..utils import integration
from ..utils import sampling
from types import MappingProxyType
import logging
import numpy as np
import sympy

logger = logging.getLogger('densops.calculus.densities')

__all__ = ['ChartChangeError', 'OrientationError', 'Density', 'ChartChange', 'density_mul', 'weight_op',
           'density_pullback', 'scalar_product']


class ChartChangeError(DensopsException):
    pass


class OrientationError(ChartChangeError):
    pass


class Density(object):
    """
    Element of the weight graded algebra of densities: a finite sum of s_r(x) t^(lambda_r).

    Terms are stored as a mapping weight -> coefficient with exact rational weights; zero coefficients are dropped.
    """

    def __init__(self, chart: Chart, terms: dict = None):
        self.chart = chart
        merged = {}
        for weight, coefficient in (terms or {}).items():
            weight = as_rational(weight)
            coefficient = as_expression(coefficient)
            chart.check_expression(coefficient)
            merged[weight] = merged.get(weight, sympy.Integer(0)) + coefficient
        cleaned = {}
        for weight in sorted(merged):
            coefficient = simplify(merged[weight])
            if coefficient != 0:
                cleaned[weight] = coefficient
        self._terms = MappingProxyType(cleaned)

    @staticmethod
    def homogeneous(chart: Chart, coefficient, weight) -> 'Density':
        return Density(chart, {weight: coefficient})

    @staticmethod
    def unit(chart: Chart) -> 'Density':
        return Density(chart, {0: 1})

    @property
    def terms(self) -> MappingProxyType:
        return self._terms

    @property
    def weights(self) -> list:
        return list(self._terms.keys())

    def coefficient(self, weight) -> sympy.Expr:
        return self._terms.get(as_rational(weight), sympy.Integer(0))

    def is_zero(self) -> bool:
        return len(self._terms) == 0

    def __add__(self, other: 'Density') -> 'Density':
        self.chart.check_same(other.chart)
        terms = dict(self._terms)
        for weight, coefficient in other.terms.items():
            terms[weight] = terms.get(weight, 0) + coefficient
        return Density(self.chart, terms)

    def __neg__(self) -> 'Density':
        return Density(self.chart, {w: -c for w, c in self._terms.items()})

    def __sub__(self, other: 'Density') -> 'Density':
        return self + (-other)

    def scale(self, factor) -> 'Density':
        factor = as_expression(factor)
        return Density(self.chart, {w: factor * c for w, c in self._terms.items()})

    def __eq__(self, other):
        return isinstance(other, Density) and self.chart == other.chart and dict(self._terms) == dict(other.terms)

    def __hash__(self):
        return hash((self.chart, tuple(self._terms.items())))

    def equals(self, other: 'Density', policy: EqualityPolicy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC) -> bool:
        self.chart.check_same(other.chart)
        for weight in set(self._terms) | set(other.terms):
            if not expr_equal(self.coefficient(weight), other.coefficient(weight), self.chart, policy):
                return False
        return True

    def __str__(self):
        if not self._terms:
            return "0"
        pieces = []
        for weight, coefficient in self._terms.items():
            text = format_expression(coefficient)
            if isinstance(coefficient, sympy.Add):
                text = f"({text})"
            if weight == 0:
                pieces.append(text)
            elif weight.is_Integer and weight > 0:
                pieces.append(f"{text}*t^{weight}")
            else:
                pieces.append(f"{text}*t^({weight})")
        return " + ".join(pieces)

    def __repr__(self):
        return f"Density({self})"


class ChartChange(object):
    """
    Change of coordinates x -> x'(x) together with its user supplied inverse x'(x) -> x.

    Both maps are written in the coordinate symbols of the same chart: `forward` is a function of the old coordinates,
    `inverse` a function of the new ones. Jacobians are derived from them; the maps are never inverted symbolically.
    """

    def __init__(self, chart: Chart, forward: list, inverse: list, validate: bool = True):
        if len(forward) != chart.dimension or len(inverse) != chart.dimension:
            raise ChartChangeError(f"Chart change needs {chart.dimension} forward and inverse components.")
        self.chart = chart
        self.forward = tuple(simplify(as_expression(e)) for e in forward)
        self.inverse = tuple(simplify(as_expression(e)) for e in inverse)
        for e in self.forward + self.inverse:
            chart.check_expression(e)
        n = chart.dimension
        # d x'^i / d x^j as function of x
        self.jacobian = sympy.ImmutableMatrix(n, n, lambda i, j: diff(self.forward[i], j, chart))
        # d x^i / d x'^j as function of x'
        self.inverse_jacobian = sympy.ImmutableMatrix(n, n, lambda i, j: diff(self.inverse[i], j, chart))
        self.jacobian_determinant = simplify(self.jacobian.det())
        self.inverse_jacobian_determinant = simplify(self.inverse_jacobian.det())
        if validate:
            self._validate()

    @staticmethod
    def identity(chart: Chart) -> 'ChartChange':
        return ChartChange(chart, list(chart.symbols), list(chart.symbols), validate=False)

    def _validate(self):
        tolerance = NUMERICS['relative_tolerance']
        points = sampling.sample_points(self.chart.dimension, NUMERICS['sample_points'], NUMERICS['seed'],
                                        NUMERICS['sample_low'], NUMERICS['sample_high'])
        for point in points:
            try:
                image = self.map_point(point)
                back = self.map_point_back(image)
                determinant = evaluate(self.jacobian_determinant, point, self.chart)
            except ExpressionDomainError as err:
                raise ChartChangeError(f"Chart change is not defined on the sample domain: {err}") from err
            if sampling.get_distance(back, point) > tolerance * (1 + float(np.linalg.norm(point))):
                raise ChartChangeError(f"Inverse map does not invert the forward map at {list(point)}.")
            if abs(determinant) < tolerance:
                raise ChartChangeError(f"Jacobian determinant vanishes at {list(point)}.")

    def map_point(self, point) -> list:
        return [evaluate(e, point, self.chart) for e in self.forward]

    def map_point_back(self, point) -> list:
        return [evaluate(e, point, self.chart) for e in self.inverse]

    def to_new(self, e: sympy.Expr) -> sympy.Expr:
        """
        Rewrites a function of the old coordinates as a function of the new coordinates, x = x(x').
        """
        return simplify(as_expression(e).xreplace(dict(zip(self.chart.symbols, self.inverse))))

    def to_old(self, e: sympy.Expr) -> sympy.Expr:
        return simplify(as_expression(e).xreplace(dict(zip(self.chart.symbols, self.forward))))

    def inverted(self) -> 'ChartChange':
        return ChartChange(self.chart, list(self.inverse), list(self.forward), validate=False)

    def then(self, other: 'ChartChange') -> 'ChartChange':
        """
        Composition: first this change, then `other`.
        """
        self.chart.check_same(other.chart)
        forward = [self.to_old(e) for e in other.forward]
        inverse = [other.to_new(e) for e in self.inverse]
        return ChartChange(self.chart, forward, inverse, validate=False)

    def check_orientation(self):
        points = sampling.sample_points(self.chart.dimension, NUMERICS['sample_points'], NUMERICS['seed'],
                                        NUMERICS['sample_low'], NUMERICS['sample_high'])
        for point in points:
            if evaluate(self.inverse_jacobian_determinant, point, self.chart) <= 0:
                raise OrientationError(f"Jacobian determinant of the inverse map is not positive at {list(point)}; "
                                       f"only orientation preserving changes are supported.")

    def __repr__(self):
        forward = ", ".join(format_expression(e) for e in self.forward)
        inverse = ", ".join(format_expression(e) for e in self.inverse)
        return f"ChartChange(forward=[{forward}], inverse=[{inverse}])"


def density_mul(a: Density, b: Density) -> Density:
    a.chart.check_same(b.chart)
    terms = {}
    for weight_a, coefficient_a in a.terms.items():
        for weight_b, coefficient_b in b.terms.items():
            weight = weight_a + weight_b
            terms[weight] = terms.get(weight, 0) + coefficient_a * coefficient_b
    return Density(a.chart, terms)


def weight_op(d: Density) -> Density:
    return Density(d.chart, {w: w * c for w, c in d.terms.items()})


def density_pullback(d: Density, change: ChartChange) -> Density:
    """
    Rewrites the density in the new coordinates: s(x) t^l becomes s(x(x')) det(dx/dx')^l t'^l.

    The determinant is assumed positive on the sample domain (|det| is replaced by det).
    """
    d.chart.check_same(change.chart)
    if any(w != 0 for w in d.weights):
        change.check_orientation()
    determinant = change.inverse_jacobian_determinant
    terms = {}
    for weight, coefficient in d.terms.items():
        factor = 1 if weight == 0 else sympy.Pow(determinant, weight)
        terms[weight] = change.to_new(coefficient) * factor
    return Density(d.chart, terms)


def scalar_product(a: Density, b: Density, domain: 'integration.IntegrationDomain' = None):
    """
    Canonical scalar product: the sum over complementary weights l + l' = 1 of the integrals of s_l s_l'.
    Pairs of weights that do not add up to 1 do not contribute.

    :return: exact sympy number when every integral was computed on the exact Fourier path, float otherwise
    """
    a.chart.check_same(b.chart)
    if domain is None:
        domain = integration.IntegrationDomain.torus(a.chart.dimension)
    total = sympy.Integer(0)
    inexact = False
    for weight_a, coefficient_a in a.terms.items():
        coefficient_b = b.coefficient(1 - weight_a)
        if coefficient_b == 0:
            continue
        value = integration.integrate(simplify(coefficient_a * coefficient_b), a.chart, domain)
        if isinstance(value, float):
            inexact = True
        total = total + value
    if inexact:
        return float(total)
    return total
