import unittest
from densops.calculus import operators
from densops.calculus.densities import ChartChange, Density
from densops.calculus.expression import Chart
from densops.calculus.operators import DiffOperator
from densops.geometry.connections import Christoffel, Metric
from densops.geometry.projective import pi_symbols, thomas_lift
from densops.utils import documents
from densops.utils.dsl import DslSyntaxError
import io
import json
import logging
import sympy
import tempfile
from pathlib import Path

logger = logging.getLogger('densops.utils.documents')
logger.addHandler(logging.StreamHandler())
logger.setLevel(logging.INFO)


class DocumentsTest(unittest.TestCase):

    def setUp(self):
        self.chart = Chart(1)
        self.x1, = self.chart.symbols
        self.plane = Chart(2)
        self.y1, self.y2 = self.plane.symbols

    def test_read_sources(self):
        from_path = documents.read_document('tests/files/density_half.json')
        with open('tests/files/density_half.json', mode='r') as file:
            from_handle = documents.read_document(file)
        with open('tests/files/density_half.json', mode='rb') as file:
            from_bytes = documents.read_document(file)
        from_text = documents.read_document(json.dumps(from_path))
        self.assertEqual(from_path, from_handle)
        self.assertEqual(from_path, from_bytes)
        self.assertEqual(from_path, from_text)

    def test_invalid_json(self):
        with self.assertRaises(documents.DocumentError):
            documents.read_document('{"dimension": 1,')

    def test_document_shapes(self):
        with self.assertRaises(documents.DocumentError):
            documents.read_document('[{"dimension": 1}]')
        malformed = [
            (documents.chart_of, {"dimension": [1]}),
            (documents.chart_of, {"dimension": "one"}),
            (documents.density_from_dict, {"terms": 5}),
            (documents.density_from_dict, {"terms": ["x"]}),
            (documents.operator_from_dict, {"terms": [{"d": 1, "coeff": "1"}]}),
            (documents.operator_from_dict, {"terms": [{"d": [[1]], "coeff": "1"}]}),
            (documents.operator_from_dict, {"text": 7}),
            (documents.metric_from_dict, {"g": [1]}),
            (documents.christoffel_from_dict, {"Gamma": [["0"]]}),
            (documents.connection_from_dict, {"gamma": "x1"}),
            (documents.lambda_operator_from_dict, {"lambda0": "2", "Aij": 1}),
        ]
        for function, document in malformed:
            with self.assertRaises(documents.DocumentError, msg=f"{function.__name__} must reject {document}"):
                if function is documents.chart_of:
                    function(document)
                else:
                    function(document, self.chart)
        self.assertEqual(documents.chart_of({"dimension": "2"}), self.plane)

    def test_chart_of(self):
        self.assertEqual(documents.chart_of({"dimension": 2}), self.plane)
        self.assertEqual(documents.chart_of({}, 1), self.chart)
        with self.assertRaises(documents.DocumentError):
            documents.chart_of({"dimension": 2}, 1)
        with self.assertRaises(documents.DocumentError):
            documents.chart_of({})

    def test_density(self):
        document = documents.read_document('tests/files/density_half.json')
        d = documents.density_from_dict(document, documents.chart_of(document))
        expected = Density(self.chart, {sympy.Rational(1, 2): sympy.sin(self.x1), 2: self.x1 ** 2})
        self.assertEqual(d, expected)
        self.assertEqual(documents.density_from_dict(documents.density_to_dict(d), self.chart), d)

    def test_operator(self):
        document = documents.read_document('tests/files/operator_plane.json')
        op = documents.operator_from_dict(document, documents.chart_of(document))
        st = operators.extract_symbol(op)
        self.assertEqual(st.S[0, 1], self.y2 / 2)
        self.assertEqual(st.B, (sympy.sin(self.y1), 0))
        self.assertEqual(st.C, 1)
        stored = documents.operator_to_dict(op)
        self.assertEqual(documents.operator_from_dict(stored, self.plane), op)
        self.assertEqual(documents.operator_from_dict({"text": stored["text"]}, self.plane), op,
                         "The text form must describe the same operator.")

    def test_operator_index_out_of_range(self):
        with self.assertRaises(documents.DocumentError):
            documents.operator_from_dict({"terms": [{"d": [3], "coeff": "1"}]}, self.plane)

    def test_exact_constants(self):
        document = {"terms": [{"weight": "1", "coeff": 0.5}]}
        with self.assertRaises(documents.DocumentError):
            documents.density_from_dict(document, self.chart)
        document = {"terms": [{"weight": "1", "coeff": 2.0}]}
        self.assertEqual(documents.density_from_dict(document, self.chart), Density.homogeneous(self.chart, 2, 1))
        with self.assertRaises(DslSyntaxError):
            documents.density_from_dict({"terms": [{"weight": "1", "coeff": "d1"}]}, self.chart)

    def test_missing_field(self):
        with self.assertRaises(documents.DocumentError):
            documents.symbol_from_dict({"S": [["1"]], "B": ["0"]}, self.chart)

    def test_symbol(self):
        document = documents.read_document('tests/files/symbol_exp.json')
        st = documents.symbol_from_dict(document, self.chart)
        self.assertEqual(st.S, sympy.ImmutableMatrix([[sympy.exp(self.x1)]]))
        self.assertEqual(documents.symbol_to_dict(st), {"dimension": 1, "S": [["exp(x1)"]], "B": ["1"], "C": "0"})
        with self.assertRaises(documents.DocumentError):
            documents.symbol_from_dict({"S": [["1", "x1"], ["0", "1"]], "B": ["0", "0"], "C": "0"}, self.plane)

    def test_metric(self):
        document = documents.read_document('tests/files/metric_conformal.json')
        metric = documents.metric_from_dict(document, self.chart)
        self.assertEqual(documents.metric_to_dict(metric)["g_inv"], [["exp(-2*x1)"]])

    def test_christoffel_lower_triangular(self):
        document = documents.read_document('tests/files/christoffel_plane.json')
        christoffel = documents.christoffel_from_dict(document, self.plane)
        self.assertEqual(christoffel[0, 0, 0], self.y1)
        self.assertEqual(christoffel[0, 1, 1], 1)
        self.assertEqual(christoffel[1, 0, 1], self.y2)
        self.assertEqual(christoffel[1, 1, 0], self.y2)
        self.assertEqual(documents.christoffel_to_dict(christoffel), document)
        with self.assertRaises(documents.DocumentError):
            documents.christoffel_from_dict({"Gamma": [[["0", "0"], ["0", "0"]], [["0"], ["0", "0"]]]}, self.plane)

    def test_pi_and_extended(self):
        christoffel = documents.christoffel_from_dict(documents.read_document('tests/files/christoffel_plane.json'),
                                                      self.plane)
        pi = pi_symbols(christoffel)
        self.assertEqual(documents.pi_from_dict(documents.pi_to_dict(pi), self.plane), pi)
        extended = documents.extended_to_dict(thomas_lift(pi))
        self.assertEqual(len(extended["Gamma_hat"]), 3)
        self.assertEqual(extended["Gamma_hat"][0][0], ["-1/3"])
        with self.assertRaises(documents.DocumentError):
            documents.pi_from_dict({"Pi": [[["1"], ["0", "0"]], [["0"], ["0", "0"]]]}, self.plane)

    def test_chart_change(self):
        change = ChartChange(self.plane, [2 * self.y1, self.y2 + self.y1], [self.y1 / 2, self.y2 - self.y1 / 2])
        stored = documents.chart_change_to_dict(change)
        self.assertEqual(stored["forward"], ["2*x1", "x1 + x2"])
        restored = documents.chart_change_from_dict(stored, self.plane)
        self.assertEqual(restored.inverse, change.inverse)

    def test_lambda_operator(self):
        L = documents.lambda_operator_from_dict(documents.read_document('tests/files/lambda_operator.json'),
                                                self.chart)
        self.assertEqual(L.weight, 2)
        self.assertEqual(L.first_order, (sympy.sin(self.x1),))
        L = documents.lambda_operator_from_dict({"op": "d1*d1 + sin(x1)*d1", "lambda0": "2"}, self.chart)
        self.assertEqual(L.op, DiffOperator(self.chart, {((2,), 0): 1, ((1,), 0): sympy.sin(self.x1)}))
        with self.assertRaises(documents.DocumentError):
            documents.lambda_operator_from_dict({"Aij": [["1", "0"]], "lambda0": "2"}, self.chart)

    def test_write_document(self):
        document = documents.connection_to_dict(documents.connection_from_dict({"gamma": ["x1", "1/3"]}, self.plane))
        buffer = io.StringIO()
        documents.write_document(document, buffer)
        self.assertEqual(json.loads(buffer.getvalue()), {"dimension": 2, "gamma": ["x1", "1/3"]})
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "gamma.json"
            documents.write_document(document, path)
            self.assertEqual(documents.read_document(str(path)), document)

    def test_vector_field(self):
        X = documents.vector_field_from_dict({"X": ["x2", "sin(x1)"]}, self.plane)
        self.assertEqual(X.components, (self.y2, sympy.sin(self.y1)))
        with self.assertRaises(documents.DocumentError):
            documents.vector_field_from_dict({"X": ["x2"]}, self.plane)


if __name__ == '__main__':
    unittest.main()
