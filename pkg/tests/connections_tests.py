import unittest
from densops.calculus import operators
from densops.calculus.densities import ChartChange, Density, density_pullback
from densops.calculus.expression import Chart, EqualityPolicy, evaluate, expr_equal
from densops.calculus.operators import DiffOperator, SymbolTriple
from densops.geometry import connections
from densops.geometry.connections import Christoffel, Connection, Metric, VolumeForm
from densops.verify import nonlinear_change
import logging
import math
import sympy
import time

logger = logging.getLogger('densops.geometry.connections')
logger.addHandler(logging.StreamHandler())
logger.setLevel(logging.INFO)


class ConnectionsTest(unittest.TestCase):

    def setUp(self):
        self.chart = Chart(1)
        self.x1, = self.chart.symbols
        self.plane = Chart(2)
        self.y1, self.y2 = self.plane.symbols
        self.double = ChartChange(self.chart, [2 * self.x1], [self.x1 / 2])

    def test_connection_from_volume(self):
        self.assertEqual(connections.connection_from_volume(VolumeForm(self.chart, 1)), Connection.zero(self.chart))
        self.assertEqual(connections.connection_from_volume(VolumeForm(self.chart, sympy.exp(self.x1))),
                         Connection(self.chart, [-1]))

    def test_volume_form_must_be_positive(self):
        with self.assertRaises(connections.VolumeFormError):
            VolumeForm(self.chart, -1)
        with self.assertRaises(connections.VolumeFormError):
            VolumeForm(self.chart, self.x1)

    def test_levi_civita(self):
        flat = Metric(self.plane, sympy.eye(2))
        self.assertEqual(connections.levi_civita(flat), Christoffel.zero(self.plane))
        conformal = Metric(self.chart, [[sympy.exp(2 * self.x1)]])
        self.assertEqual(conformal.g_inv, sympy.ImmutableMatrix([[sympy.exp(-2 * self.x1)]]))
        self.assertEqual(connections.levi_civita(conformal)[0, 0, 0], 1)

    def test_trace_identity(self):
        g = Metric(self.plane, sympy.diag(sympy.exp(2 * self.y1), 1 + self.y1 ** 2))
        from_metric = connections.connection_from_metric(g)
        self.assertTrue(from_metric.equals(connections.trace_connection(connections.levi_civita(g))),
                        "Gamma^k_ik must be the gradient of log sqrt(det g).")
        volume = VolumeForm(self.plane, sympy.exp(self.y1) * sympy.sqrt(1 + self.y1 ** 2))
        self.assertTrue(from_metric.equals(connections.connection_from_volume(volume)))

    def test_metric_validation(self):
        with self.assertRaises(connections.MetricError):
            Metric(self.plane, [[1, 0], [0, 0]])
        with self.assertRaises(connections.MetricError):
            Metric(self.plane, [[1, self.y1], [0, 1]])
        with self.assertRaises(connections.MetricError):
            Metric(self.plane, sympy.eye(2), sympy.diag(1, 2))
        supplied = Metric(self.plane, sympy.diag(2, 4), sympy.diag(sympy.Rational(1, 2), sympy.Rational(1, 4)))
        self.assertEqual(supplied.determinant, 8)

    def test_christoffel_symmetry(self):
        with self.assertRaises(ValueError):
            Christoffel(self.plane, [[[0, 1], [0, 0]], [[0, 0], [0, 0]]])

    def test_gamma_transform_affine(self):
        gamma = Connection(self.chart, [3])
        self.assertEqual(connections.gamma_transform(gamma, self.double), Connection(self.chart,
                                                                                     [sympy.Rational(3, 2)]))
        self.assertEqual(connections.gamma_transform(gamma, ChartChange.identity(self.chart)), gamma)

    def test_gamma_transform_nonlinear(self):
        change = nonlinear_change(self.chart)
        moved = connections.gamma_transform(Connection.zero(self.chart), change)
        for p in [-0.8, -0.3, 0.1, 0.6, 0.9]:
            x = change.map_point_back([p])[0]
            expected = 2 * x / (1 + x ** 2) ** 2
            self.assertTrue(math.isclose(evaluate(moved.components[0], [p], self.chart), expected, rel_tol=1e-9,
                                         abs_tol=1e-12), f"Transformed connection is wrong at x' = {p}.")

    def test_gamma_transform_composition(self):
        first = ChartChange(self.plane, [self.y1 + self.y2, 2 * self.y2], [self.y1 - self.y2 / 2, self.y2 / 2])
        second = nonlinear_change(self.plane)
        gamma = Connection(self.plane, [sympy.sin(self.y1), self.y1 * self.y2])
        stepwise = connections.gamma_transform(connections.gamma_transform(gamma, first), second)
        composed = connections.gamma_transform(gamma, first.then(second))
        self.assertTrue(stepwise.equals(composed, EqualityPolicy.NUMERIC))

    def test_christoffel_transform_trace(self):
        christoffel = Christoffel.from_function(self.plane, lambda i, k, m: (i + 1) * self.y1 + k * m * self.y2)
        for change in [ChartChange(self.plane, [3 * self.y1 + self.y2, self.y2 + 1], [(self.y1 - self.y2 + 1) / 3,
                                                                                       self.y2 - 1]),
                       nonlinear_change(self.plane)]:
            moved = connections.trace_connection(connections.christoffel_transform(christoffel, change))
            expected = connections.gamma_transform(connections.trace_connection(christoffel), change)
            self.assertTrue(moved.equals(expected, EqualityPolicy.NUMERIC),
                            "Trace of the transformed symbols must transform like a connection on densities.")

    def test_kk_extract(self):
        st = SymbolTriple(self.plane, sympy.eye(2), [self.y1, sympy.cos(self.y2)], 0)
        self.assertEqual(connections.kk_extract(st), Connection(self.plane, [self.y1, sympy.cos(self.y2)]))
        st = SymbolTriple(self.chart, [[sympy.exp(self.x1)]], [1], 0)
        self.assertEqual(connections.kk_extract(st), Connection(self.chart, [sympy.exp(-self.x1)]))

    def test_kk_extract_degenerate(self):
        with self.assertRaises(connections.DegenerateSymbolError):
            connections.kk_extract(SymbolTriple(self.chart, [[0]], [1], 0))
        consistent = SymbolTriple(self.plane, sympy.diag(1, 0), [self.y1, 0], 0)
        self.assertTrue(connections.horizontal_distribution_consistent(consistent))
        with self.assertRaises(connections.DegenerateSymbolError) as context:
            connections.kk_extract(consistent)
        self.assertTrue("not unique" in str(context.exception), "Message must tell that B is in the range of S.")
        inconsistent = SymbolTriple(self.plane, sympy.diag(1, 0), [0, 1], 0)
        self.assertFalse(connections.horizontal_distribution_consistent(inconsistent))
        self.assertFalse(connections.is_upper_connection_induced(inconsistent))
        self.assertTrue(connections.is_upper_connection_induced(consistent))

    def test_kk_extract_supplied_inverse(self):
        st = SymbolTriple(self.plane, sympy.diag(2, 3), [2, 3 * self.y1], 0)
        gamma = connections.kk_extract(st, sympy.diag(sympy.Rational(1, 2), sympy.Rational(1, 3)))
        self.assertEqual(gamma, Connection(self.plane, [1, self.y1]))
        with self.assertRaises(connections.InconsistentSystemError):
            connections.kk_extract(st, sympy.eye(2))

    def test_kk_extract_large_dimension(self):
        chart = Chart(4)
        st = SymbolTriple(chart, sympy.eye(4), list(chart.symbols), 0)
        with self.assertRaises(ValueError):
            connections.kk_extract(st)
        self.assertEqual(connections.kk_extract(st, sympy.eye(4)), Connection(chart, list(chart.symbols)))

    def test_brans_dicke(self):
        S = sympy.ImmutableMatrix([[2, self.y1], [self.y1, 3]])
        gamma = Connection(self.plane, [sympy.sin(self.y2), 1])
        B = list(S * sympy.Matrix(gamma.components))
        st = SymbolTriple(self.plane, S, B, sum(b * g for b, g in zip(B, gamma.components)))
        self.assertEqual(connections.brans_dicke(st, gamma), 0)
        st = SymbolTriple(self.plane, S, B, self.y1)
        self.assertEqual(connections.brans_dicke(st, Connection.zero(self.plane)), self.y1)

    def test_brans_dicke_is_scalar(self):
        S = 1 + self.x1 ** 2
        gamma = Connection(self.chart, [sympy.sin(self.x1)])
        st = SymbolTriple(self.chart, [[S]], [S * sympy.sin(self.x1)], sympy.cos(self.x1))
        before = connections.brans_dicke(st, gamma)
        for change in [self.double, nonlinear_change(self.chart)]:
            moved = operators.extract_symbol(connections.op_conjugate(operators.build_canonical(st), change))
            after = connections.brans_dicke(moved, connections.gamma_transform(gamma, change))
            self.assertTrue(expr_equal(after, change.to_new(before), self.chart, EqualityPolicy.NUMERIC),
                            f"C - B gamma must transform as a function under {change}.")

    def test_covariant_parts(self):
        st = SymbolTriple(self.plane, sympy.eye(2), [self.y1, 1], self.y2)
        vector, scalar = connections.covariant_parts(st, Christoffel.zero(self.plane))
        self.assertEqual(vector, (self.y1, 1))
        self.assertEqual(scalar, self.y2)
        christoffel = Christoffel.from_function(self.plane, lambda i, k, m: self.y1 if (i, k, m) == (0, 0, 0) else 0)
        induced = SymbolTriple(self.plane, sympy.eye(2), [-self.y1, 0], 0)
        vector, _ = connections.covariant_parts(induced, christoffel)
        self.assertEqual(vector, (0, 0), "B = S Gamma must have no vector part.")

    def test_op_conjugate(self):
        second = DiffOperator.partial(self.chart, 0) @ DiffOperator.partial(self.chart, 0)
        moved = connections.op_conjugate(second, self.double)
        self.assertEqual(operators.extract_symbol(moved).S, sympy.ImmutableMatrix([[4]]))
        self.assertEqual(connections.op_conjugate(second, ChartChange.identity(self.chart)), second)
        weight = DiffOperator.weight(self.chart)
        self.assertEqual(connections.op_conjugate(weight, self.double), weight, "w must be invariant.")
        with self.assertRaises(operators.OperatorOrderError):
            connections.op_conjugate(second @ DiffOperator.partial(self.chart, 0), self.double)

    def test_op_conjugate_application(self):
        started = time.perf_counter()
        change = nonlinear_change(self.chart)
        op = DiffOperator(self.chart, {((2,), 0): 1 + self.x1 ** 2, ((1,), 1): sympy.sin(self.x1),
                                       ((0,), 1): self.x1})
        d = Density(self.chart, {sympy.Rational(1, 2): self.x1 ** 2, 2: sympy.cos(self.x1)})
        lhs = density_pullback(operators.op_apply(op, d), change)
        rhs = operators.op_apply(connections.op_conjugate(op, change), density_pullback(d, change))
        self.assertTrue(lhs.equals(rhs, EqualityPolicy.NUMERIC), "Conjugated operator must act on pulled back "
                                                                 "densities.")
        self.assertTrue(time.perf_counter() - started < 60, "Conjugation along the nonlinear change is too slow.")

    def test_op_conjugate_application_plane(self):
        started = time.perf_counter()
        change = nonlinear_change(self.plane)
        op = DiffOperator(self.plane, {((1, 1), 0): self.y2, ((0, 2), 0): 1 + self.y1 ** 2,
                                       ((1, 0), 1): sympy.cos(self.y2), ((0, 0), 2): self.y1})
        d = Density(self.plane, {sympy.Rational(1, 2): self.y1 * sympy.sin(self.y2), -1: 1 + self.y2 ** 2})
        lhs = density_pullback(operators.op_apply(op, d), change)
        rhs = operators.op_apply(connections.op_conjugate(op, change), density_pullback(d, change))
        self.assertTrue(lhs.equals(rhs, EqualityPolicy.NUMERIC), "Conjugation must hold for x2' = x2 + x1 too.")
        moved = operators.extract_symbol(connections.op_conjugate(op, change))
        point = [0.4, -0.2]
        x = change.map_point_back(point)
        # S' = J S J^T at x(x') with J = dx'/dx = [[1 + x1^2, 0], [1, 1]]
        s11, s12, s22 = 0, x[1] / 2, 1 + x[0] ** 2
        j11 = 1 + x[0] ** 2
        expected = [[j11 ** 2 * s11, j11 * (s11 + s12)], [j11 * (s11 + s12), s11 + 2 * s12 + s22]]
        for i in range(2):
            for k in range(2):
                self.assertTrue(math.isclose(evaluate(moved.S[i, k], point, self.plane), expected[i][k],
                                             rel_tol=1e-9, abs_tol=1e-12), f"S'[{i},{k}] is wrong.")
        self.assertTrue(time.perf_counter() - started < 60, "Conjugation along the nonlinear change is too slow.")


if __name__ == '__main__':
    unittest.main()
