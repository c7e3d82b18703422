import unittest
from densops import cli
from densops.calculus.expression import Chart
from densops.calculus.operators import op_equal
from densops.utils import dsl
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from unittest import mock
import io
import json
import logging
import tempfile

logger = logging.getLogger('densops.cli')
logger.addHandler(logging.StreamHandler())
logger.setLevel(logging.INFO)


def run(*argv):
    out = io.StringIO()
    err = io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.main(list(argv))
    return code, out.getvalue(), err.getvalue()


class CliTest(unittest.TestCase):

    def test_adjoint(self):
        code, out, _ = run("adjoint", "-n", "1", "w")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(out.strip(), "1 - w")

    def test_adjoint_infers_dimension(self):
        code, out, _ = run("adjoint", "--json", "x2*d1")
        self.assertEqual(code, cli.EXIT_OK)
        document = json.loads(out)
        self.assertEqual(document["dimension"], 2)
        self.assertEqual(document["text"], "-x2*d1")

    def test_compose(self):
        code, out, _ = run("compose", "d1", "x1")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(out.strip(), "1 + x1*d1")

    def test_apply(self):
        code, out, _ = run("apply", "d1*d1", "--coeff", "x1^3", "--weight", "1/2")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertTrue("6*x1" in out, f"Unexpected output {out}")
        code, out, _ = run("apply", "--json", "w", "--density", "tests/files/density_half.json")
        self.assertEqual(code, cli.EXIT_OK)
        terms = {term["weight"]: term["coeff"] for term in json.loads(out)["terms"]}
        self.assertEqual(terms, {"1/2": "sin(x1)/2", "2": "2*x1^2"})

    def test_restrict(self):
        code, out, _ = run("restrict", "w^2 - w + d1", "--weight", "1")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(out.strip(), "d1")

    def test_pencil(self):
        code, out, _ = run("pencil", "--lambda0", "2", "--op", "d1*d1 + sin(x1)*d1")
        self.assertEqual(code, cli.EXIT_OK)
        lines = out.splitlines()
        self.assertTrue("B1 = sin(x1)/3" in lines, f"Unexpected output {out}")
        self.assertTrue("C = -cos(x1)/3" in lines, f"Unexpected output {out}")

    def test_pencil_from_document(self):
        code, out, _ = run("pencil", "--json", "-i", "tests/files/lambda_operator.json")
        self.assertEqual(code, cli.EXIT_OK)
        document = json.loads(out)
        self.assertEqual(document["symbol"]["B"], ["sin(x1)/3"])
        self.assertEqual(document["symbol"]["C"], "-cos(x1)/3")

    def test_forbidden_weight(self):
        code, _, err = run("pencil", "--lambda0", "1/2", "--op", "d1*d1")
        self.assertEqual(code, cli.EXIT_USAGE)
        self.assertTrue("ForbiddenWeightError" in err)

    def test_syntax_error(self):
        code, _, err = run("adjoint", "d1 +")
        self.assertEqual(code, cli.EXIT_USAGE)
        self.assertTrue("column" in err)

    def test_missing_input(self):
        code, _, _ = run("levi-civita")
        self.assertEqual(code, cli.EXIT_USAGE)
        code, _, _ = run("nonsense")
        self.assertEqual(code, cli.EXIT_USAGE)

    def test_malformed_documents(self):
        density = '{"dimension": 1, "terms": [{"weight": "1/2", "coeff": "1"}]}'
        for argv in [("pi", "[1]"),
                     ("scalar-product", '{"dimension": 1, "terms": 5}', density),
                     ("apply", "d1", "--density", '{"terms": ["x"]}'),
                     ("apply", "d1", "--density", '{"dimension": [1], "terms": []}'),
                     ("adjoint", "-i", '{"dimension": 1, "terms": [{"d": "x", "coeff": "1"}]}'),
                     ("levi-civita", '{"dimension": 1, "g": "1"}'),
                     ("thomas-lift", '{"dimension": 1, "Pi": [5]}'),
                     ("pencil", "-i", '{"dimension": 1, "lambda0": "2", "op": 3}')]:
            code, _, err = run(*argv)
            self.assertEqual(code, cli.EXIT_USAGE, f"{argv[0]} must reject the malformed input {argv[1:]}.")
            self.assertTrue("DocumentError" in err, f"Unexpected error output {err}")

    def test_deeply_nested_operator(self):
        text = "(" * 400 + "x1" + ")" * 400
        code, _, err = run("adjoint", text)
        self.assertEqual(code, cli.EXIT_USAGE)
        self.assertTrue("DslSyntaxError" in err, f"Unexpected error output {err}")

    def test_apply_checks_density_dimension(self):
        density = '{"dimension": 2, "terms": [{"weight": "1/2", "coeff": "x2"}]}'
        code, _, err = run("apply", "d1", "--density", density)
        self.assertEqual(code, cli.EXIT_USAGE)
        self.assertTrue("dimension 2" in err, f"Unexpected error output {err}")
        code, out, _ = run("apply", "-n", "2", "d2", "--density", density)
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(out.strip(), "1*t^(1/2)", f"Unexpected output {out}")

    def test_example(self):
        code, out, _ = run("example", "--X", "1", "--Y", "x1", "--lambda0", "2")
        self.assertEqual(code, cli.EXIT_OK)
        code, symmetrized, _ = run("example", "--X", "1", "--Y", "x1", "--lambda0", "2", "--symmetrized")
        self.assertEqual(code, cli.EXIT_OK)
        chart = Chart(1)
        self.assertTrue(op_equal(dsl.parse_operator(out.strip(), chart), dsl.parse_operator(symmetrized.strip(), chart)),
                        "Both forms must give the same pencil.")

    def test_extract_connection(self):
        code, out, _ = run("extract-connection", "--json", "tests/files/symbol_exp.json")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(json.loads(out), {"dimension": 1, "gamma": ["exp(-x1)"]})
        code, _, err = run("extract-connection", '{"dimension": 1, "S": [["0"]], "B": ["1"], "C": "0"}')
        self.assertEqual(code, cli.EXIT_USAGE)
        self.assertTrue("DegenerateSymbolError" in err)

    def test_levi_civita(self):
        code, out, _ = run("levi-civita", "tests/files/metric_conformal.json")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(json.loads(out), {"dimension": 1, "Gamma": [[["1"]]]})

    def test_projective_commands(self):
        code, out, _ = run("pi", "tests/files/christoffel_plane.json")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(len(json.loads(out)["Pi"]), 2)
        flat = '{"dimension": 2, "Gamma": [[["0"], ["0", "0"]], [["0"], ["0", "0"]]]}'
        other = '{"dimension": 2, "Gamma": [[["0"], ["0", "1"]], [["0"], ["0", "0"]]]}'
        code, out, _ = run("proj-equiv", flat, other)
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(out.strip(), "not equivalent")
        code, out, _ = run("proj-equiv", "--json", flat, flat)
        self.assertEqual(json.loads(out), {"equivalent": True, "t": ["0", "0"]})
        code, out, _ = run("thomas-lift", flat)
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(json.loads(out)["Gamma_hat"][0][0], ["-1/3"])

    def test_scalar_product(self):
        half = '{"dimension": 1, "terms": [{"weight": "1/2", "coeff": "1"}]}'
        code, out, _ = run("scalar-product", half, half)
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(out.strip(), "2*pi")
        zero = '{"dimension": 1, "terms": [{"weight": "0", "coeff": "x1"}]}'
        one = '{"dimension": 1, "terms": [{"weight": "1", "coeff": "x1"}]}'
        code, out, _ = run("scalar-product", "--json", "--box", "0:1", "--", zero, one)
        self.assertEqual(code, cli.EXIT_OK)
        self.assertAlmostEqual(json.loads(out)["numeric"], 1 / 3, places=12)

    def test_divergence(self):
        code, out, _ = run("divergence", "x1*d1 + w")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(out.strip(), "0")

    def test_output_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "adjoint.txt"
            code, out, _ = run("adjoint", "-o", str(path), "d1")
            self.assertEqual(code, cli.EXIT_OK)
            self.assertEqual(out, "")
            self.assertEqual(path.read_text().strip(), "-d1")

    def test_verify(self):
        code, out, _ = run("verify", "--suite", "lie-structure", "--trials", "2")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertTrue(out.startswith("lie-structure: PASS"))
        code, _, err = run("verify", "--suite", "nope")
        self.assertEqual(code, cli.EXIT_USAGE)
        self.assertTrue("UnknownSuiteException" in err)

    def test_verify_seed_from_environment(self):
        with mock.patch.dict('os.environ', {"DENSOPS_SEED": "7"}):
            code, out, _ = run("verify", "--suite", "integrator", "--trials", "1", "--json")
            self.assertEqual(code, cli.EXIT_OK)
            self.assertEqual(json.loads(out)["seed"], 7)
            code, out, _ = run("verify", "--suite", "integrator", "--trials", "1", "--json", "--seed", "3")
            self.assertEqual(json.loads(out)["seed"], 3)


if __name__ == '__main__':
    unittest.main()
