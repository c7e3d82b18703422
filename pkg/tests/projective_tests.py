import unittest
from densops.calculus.expression import Chart, simplify
from densops.geometry import projective
from densops.geometry.connections import Christoffel
from densops.geometry.projective import ExtendedChristoffel, PiSymbols
import logging
import sympy

logger = logging.getLogger('densops.geometry.projective')
logger.addHandler(logging.StreamHandler())
logger.setLevel(logging.INFO)


class ProjectiveTest(unittest.TestCase):

    def setUp(self):
        self.chart = Chart(1)
        self.x1, = self.chart.symbols
        self.plane = Chart(2)
        self.y1, self.y2 = self.plane.symbols
        self.christoffel = Christoffel.from_function(self.plane, lambda i, k, m: (i + k + m) * self.y1 +
                                                     (1 if i == k == m else 0) * sympy.sin(self.y2))

    def test_flat_pi(self):
        pi = projective.pi_symbols(Christoffel.zero(self.plane))
        self.assertEqual(pi.symbols, Christoffel.zero(self.plane).symbols)

    def test_pi_vanishes_in_one_dimension(self):
        christoffel = Christoffel(self.chart, [[[self.x1 ** 2 + 1]]])
        self.assertEqual(projective.pi_symbols(christoffel)[0, 0, 0], 0)

    def test_pi_trace_free(self):
        pi = projective.pi_symbols(self.christoffel)
        for m in range(2):
            self.assertEqual(simplify(pi[0, 0, m] + pi[1, 1, m]), 0, f"Pi^k_k{m} must vanish.")

    def test_pi_symbols_validation(self):
        with self.assertRaises(ValueError):
            PiSymbols(self.plane, [[[1, 0], [0, 0]], [[0, 0], [0, 0]]])

    def test_shift_invariance(self):
        t = [self.y1 * self.y2, 2]
        shifted = projective.projective_shift(self.christoffel, t)
        self.assertTrue(projective.pi_symbols(shifted).equals(projective.pi_symbols(self.christoffel)))
        equivalent, recovered = projective.projectively_equivalent(self.christoffel, shifted)
        self.assertTrue(equivalent, "Shifted connection must be projectively equivalent.")
        self.assertEqual(recovered, (self.y1 * self.y2, 2))
        self.assertEqual(projective.projectively_equivalent(self.christoffel, self.christoffel), (True, (0, 0)))

    def test_not_equivalent(self):
        other = Christoffel.from_function(self.plane, lambda i, k, m: 1 if (i, k, m) == (0, 1, 1) else 0)
        self.assertEqual(projective.projectively_equivalent(Christoffel.zero(self.plane), other), (False, None))

    def test_flat_thomas_lift(self):
        lifted = projective.thomas_lift(projective.pi_symbols(Christoffel.zero(self.plane)))
        third = sympy.Rational(-1, 3)
        self.assertEqual(lifted[0, 0, 0], third)
        for i in range(1, 3):
            for k in range(1, 3):
                self.assertEqual(lifted[i, k, 0], third if i == k else 0)
                self.assertEqual(lifted[0, i, k], 0)
        self.assertEqual(lifted.base_block(), Christoffel.zero(self.plane).symbols)

    def test_thomas_lift_projective_invariance(self):
        shifted = projective.projective_shift(self.christoffel, [sympy.cos(self.y1), self.y2 ** 2])
        self.assertEqual(projective.thomas_lift(projective.pi_symbols(self.christoffel)),
                         projective.thomas_lift(projective.pi_symbols(shifted)))

    def test_thomas_lift_symmetry(self):
        lifted = projective.thomas_lift(projective.pi_symbols(self.christoffel))
        for a in range(3):
            for b in range(3):
                for c in range(3):
                    self.assertEqual(lifted[a, b, c], lifted[a, c, b])

    def test_thomas_lift_vertical_block(self):
        pi = PiSymbols(self.plane, [[[0, self.y1], [self.y1, 0]], [[0, 0], [0, -self.y1]]])
        vertical = projective.thomas_lift(pi).vertical_block()
        # (d_r Pi^r_km - Pi^r_sk Pi^s_rm) / 3
        self.assertEqual(vertical[0][0], 0)
        self.assertEqual(vertical[0][1], sympy.Rational(1, 3))
        self.assertEqual(vertical[1][1], -2 * self.y1 ** 2 / 3)

    def test_extended_validation(self):
        table = [[[0] * 2 for _ in range(2)] for _ in range(2)]
        with self.assertRaises(ValueError):
            ExtendedChristoffel(self.chart, table)
        self.assertEqual(ExtendedChristoffel.vertical_constant(1, 1, 1), sympy.Rational(-1, 2))


if __name__ == '__main__':
    unittest.main()
