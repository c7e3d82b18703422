from .calculus import *
from .geometry import *
from .pencils import *
from .utils import documents
from .utils import dsl
from .utils import integration
from .verify import RandomSuiteConfig, run_all, run_suite, suite_names
import argparse
import logging
import os
import re
import sys

logger = logging.getLogger('densops.cli')

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

INDEX_PATTERN = re.compile(r"\b[xd]([0-9]+)\b")


class UsageError(DensopsException):
    pass


def _infer_dimension(args, *texts) -> int:
    if args.dimension is not None:
        return args.dimension
    indices = [int(i) for text in texts if text for i in INDEX_PATTERN.findall(text)]
    return max(indices, default=1)


def _read(args, source):
    """A document given on the command line, from --input or from stdin ('-')."""
    if source is None:
        source = args.input
    if source is None:
        raise UsageError("No input document given; pass it as argument or with -i.")
    if source == "-":
        return documents.read_document(sys.stdin)
    return documents.read_document(source)


def _operator(args, text) -> DiffOperator:
    if text is not None:
        return dsl.parse_operator(text, Chart(_infer_dimension(args, text)))
    document = _read(args, None)
    return documents.operator_from_dict(document, documents.chart_of(document, args.dimension))


def _emit(args, text: str, document: dict = None):
    output = documents.to_json(document) if args.json and document is not None else text
    if args.output:
        with open(args.output, "w", encoding='utf-8') as file:
            file.write(output + "\n")
    else:
        print(output)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    if os.environ.get("DENSOPS_SEED"):
        try:
            return int(os.environ["DENSOPS_SEED"])
        except ValueError as err:
            raise UsageError(f"DENSOPS_SEED must be an integer, got '{os.environ['DENSOPS_SEED']}'.") from err
    return NUMERICS['seed']


def cmd_adjoint(args) -> int:
    result = op_adjoint(_operator(args, args.operator))
    _emit(args, format_operator(result), documents.operator_to_dict(result))
    return EXIT_OK


def cmd_compose(args) -> int:
    chart = Chart(_infer_dimension(args, *args.operators))
    result = DiffOperator.identity(chart)
    for text in args.operators:
        result = op_compose(result, dsl.parse_operator(text, chart))
    _emit(args, format_operator(result), documents.operator_to_dict(result))
    return EXIT_OK


def cmd_apply(args) -> int:
    op = _operator(args, args.operator)
    if args.coeff is not None:
        d = Density.homogeneous(op.chart, dsl.parse_expression(args.coeff, op.chart), dsl.parse_rational(args.weight))
    else:
        document = _read(args, args.density)
        d = documents.density_from_dict(document, documents.chart_of(document, op.chart.dimension))
    result = op_apply(op, d)
    _emit(args, str(result), documents.density_to_dict(result))
    return EXIT_OK


def cmd_restrict(args) -> int:
    result = restrict(_operator(args, args.operator), dsl.parse_rational(args.weight))
    _emit(args, format_operator(result), documents.operator_to_dict(result))
    return EXIT_OK


def cmd_pencil(args) -> int:
    if args.op is not None:
        if args.lambda0 is None:
            raise UsageError("--lambda0 is required together with --op.")
        chart = Chart(_infer_dimension(args, args.op))
        L = LambdaOperator(dsl.parse_operator(args.op, chart), dsl.parse_rational(args.lambda0))
    else:
        document = _read(args, None)
        if args.lambda0 is not None:
            document = dict(document, lambda0=args.lambda0)
        L = documents.lambda_operator_from_dict(document, documents.chart_of(document, args.dimension))
    st = reconstruct_symbol(L)
    pencil = build_canonical(st)
    n = st.chart.dimension
    lines = [f"S = {[[format_expression(st.S[i, k]) for k in range(n)] for i in range(n)]}"]
    lines += [f"B{i + 1} = {format_expression(b)}" for i, b in enumerate(st.B)]
    lines.append(f"C = {format_expression(st.C)}")
    lines.append(f"pencil = {format_operator(pencil)}")
    _emit(args, "\n".join(lines), {"symbol": documents.symbol_to_dict(st),
                                   "operator": documents.operator_to_dict(pencil)})
    return EXIT_OK


def cmd_example(args) -> int:
    chart = Chart(_infer_dimension(args, *(args.X + args.Y)))
    X = VectorField(chart, [dsl.parse_expression(c, chart) for c in args.X])
    Y = VectorField(chart, [dsl.parse_expression(c, chart) for c in args.Y])
    weight = dsl.parse_rational(args.lambda0)
    result = example_pencil_symmetrized(X, Y, weight) if args.symmetrized else example_pencil(X, Y, weight)
    _emit(args, format_operator(result), documents.operator_to_dict(result))
    return EXIT_OK


def cmd_extract_connection(args) -> int:
    document = _read(args, args.document)
    chart = documents.chart_of(document, args.dimension)
    st = documents.symbol_from_dict(document, chart)
    inverse = document.get("S_inv")
    gamma = kk_extract(st, None if inverse is None else documents.matrix_from_rows(inverse, chart))
    _emit(args, "gamma = " + str([format_expression(c) for c in gamma.components]),
          documents.connection_to_dict(gamma))
    return EXIT_OK


def cmd_pi(args) -> int:
    document = _read(args, args.document)
    christoffel = documents.christoffel_from_dict(document, documents.chart_of(document, args.dimension))
    pi = pi_symbols(christoffel)
    result = documents.pi_to_dict(pi)
    _emit(args, documents.to_json(result), result)
    return EXIT_OK


def cmd_proj_equiv(args) -> int:
    first = _read(args, args.first)
    second = _read(args, args.second)
    chart = documents.chart_of(first, args.dimension)
    documents.chart_of(second, chart.dimension)
    equivalent, t = projectively_equivalent(documents.christoffel_from_dict(first, chart),
                                            documents.christoffel_from_dict(second, chart))
    if equivalent:
        text = "equivalent: t = " + str([format_expression(c) for c in t])
        document = {"equivalent": True, "t": [format_expression(c) for c in t]}
    else:
        text = "not equivalent"
        document = {"equivalent": False, "t": None}
    _emit(args, text, document)
    return EXIT_OK


def cmd_thomas_lift(args) -> int:
    document = _read(args, args.document)
    chart = documents.chart_of(document, args.dimension)
    if "Gamma" in document:
        pi = pi_symbols(documents.christoffel_from_dict(document, chart))
    else:
        pi = documents.pi_from_dict(document, chart)
    result = documents.extended_to_dict(thomas_lift(pi))
    _emit(args, documents.to_json(result), result)
    return EXIT_OK


def cmd_levi_civita(args) -> int:
    document = _read(args, args.document)
    metric = documents.metric_from_dict(document, documents.chart_of(document, args.dimension))
    result = documents.christoffel_to_dict(levi_civita(metric))
    _emit(args, documents.to_json(result), result)
    return EXIT_OK


def cmd_scalar_product(args) -> int:
    first = _read(args, args.first)
    second = _read(args, args.second)
    chart = documents.chart_of(first, args.dimension)
    documents.chart_of(second, chart.dimension)
    domain = None
    if args.box:
        bounds = []
        for text in args.box:
            low, _, high = text.partition(":")
            try:
                bounds.append((float(low), float(high)))
            except ValueError as err:
                raise UsageError(f"Box bounds must be written low:high, got '{text}'.") from err
        if len(bounds) != chart.dimension:
            raise UsageError(f"--box needs {chart.dimension} low:high pairs.")
        domain = integration.IntegrationDomain.box(bounds)
    value = scalar_product(documents.density_from_dict(first, chart), documents.density_from_dict(second, chart),
                           domain)
    text = repr(value) if isinstance(value, float) else format_expression(value)
    _emit(args, text, {"value": text, "numeric": float(value)})
    return EXIT_OK


def cmd_divergence(args) -> int:
    result = divergence_hat(_operator(args, args.operator))
    _emit(args, format_expression(result), {"divergence": format_expression(result)})
    return EXIT_OK


def cmd_verify(args) -> int:
    dimensions = (args.dimension,) if args.dimension is not None else None
    config = RandomSuiteConfig(seed=_seed(args), trials=args.trials, max_order=args.max_order, degree=args.degree,
                               dimensions=dimensions)
    reports = run_all(config) if args.suite == "all" else [run_suite(args.suite, config)]
    if args.json:
        text = documents.to_json([r.to_dict() for r in reports] if len(reports) > 1 else reports[0].to_dict())
    else:
        text = "\n".join(r.to_text() for r in reports)
    _emit(args, text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-n", "--dimension", type=int, default=None,
                        help="Chart dimension (inferred from x<i>/d<i> in DSL text when omitted).")
    common.add_argument("--json", action="store_true", help="Write JSON documents instead of text.")
    common.add_argument("--seed", type=int, default=None, help="Seed of randomized checks (overrides DENSOPS_SEED).")
    common.add_argument("-i", "--input", default=None, help="Input JSON document: path, JSON text or '-' for stdin.")
    common.add_argument("-o", "--output", default=None, help="Output path (stdout when omitted).")
    common.add_argument("-v", "--verbose", action="store_true", help="Log debug messages.")

    parser = argparse.ArgumentParser(prog="densops", description="Differential operators on densities: adjoints, "
                                                                 "self-adjoint pencils, connections and Thomas lift.")
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("adjoint", parents=[common], help="Adjoint of an operator.")
    sub.add_argument("operator", nargs="?", help="Operator in the DSL, e.g. 'sin(x1)*d1 + w'.")
    sub.set_defaults(handler=cmd_adjoint)

    sub = commands.add_parser("compose", parents=[common], help="Normal ordered product of operators.")
    sub.add_argument("operators", nargs="+")
    sub.set_defaults(handler=cmd_compose)

    sub = commands.add_parser("apply", parents=[common], help="Apply an operator to a density.")
    sub.add_argument("operator", nargs="?")
    sub.add_argument("--density", default=None, help="Density document (path or JSON text).")
    sub.add_argument("--coeff", default=None, help="Coefficient of a homogeneous density.")
    sub.add_argument("--weight", default="0", help="Weight of the homogeneous density given with --coeff.")
    sub.set_defaults(handler=cmd_apply)

    sub = commands.add_parser("restrict", parents=[common], help="Member of the pencil at w = weight.")
    sub.add_argument("operator", nargs="?")
    sub.add_argument("--weight", required=True)
    sub.set_defaults(handler=cmd_restrict)

    sub = commands.add_parser("pencil", parents=[common],
                              help="Self-adjoint pencil through an operator on densities of weight lambda0.")
    sub.add_argument("--op", default=None, help="Operator in the DSL without w.")
    sub.add_argument("--lambda0", default=None)
    sub.set_defaults(handler=cmd_pencil)

    sub = commands.add_parser("example", parents=[common], help="Self-adjoint pencil through L_X L_Y.")
    sub.add_argument("--X", nargs="+", required=True, help="Components of X.")
    sub.add_argument("--Y", nargs="+", required=True, help="Components of Y.")
    sub.add_argument("--lambda0", required=True)
    sub.add_argument("--symmetrized", action="store_true", help="Build the symmetrized form.")
    sub.set_defaults(handler=cmd_example)

    sub = commands.add_parser("extract-connection", parents=[common],
                              help="Connection gamma with S gamma = B from a symbol document {S, B, C}.")
    sub.add_argument("document", nargs="?")
    sub.set_defaults(handler=cmd_extract_connection)

    sub = commands.add_parser("pi", parents=[common], help="Projective symbols of a Christoffel document.")
    sub.add_argument("document", nargs="?")
    sub.set_defaults(handler=cmd_pi)

    sub = commands.add_parser("proj-equiv", parents=[common], help="Projective equivalence of two connections.")
    sub.add_argument("first")
    sub.add_argument("second")
    sub.set_defaults(handler=cmd_proj_equiv)

    sub = commands.add_parser("thomas-lift", parents=[common],
                              help="Thomas lift of a Pi or Christoffel document to the extended chart.")
    sub.add_argument("document", nargs="?")
    sub.set_defaults(handler=cmd_thomas_lift)

    sub = commands.add_parser("levi-civita", parents=[common], help="Christoffel symbols of a metric document.")
    sub.add_argument("document", nargs="?")
    sub.set_defaults(handler=cmd_levi_civita)

    sub = commands.add_parser("scalar-product", parents=[common], help="Canonical scalar product of two densities.")
    sub.add_argument("first")
    sub.add_argument("second")
    sub.add_argument("--box", nargs="+", default=None, help="Integrate over a box, one low:high pair per axis.")
    sub.set_defaults(handler=cmd_scalar_product)

    sub = commands.add_parser("divergence", parents=[common], help="Divergence of K^i d_i + K^0 w.")
    sub.add_argument("operator", nargs="?")
    sub.set_defaults(handler=cmd_divergence)

    sub = commands.add_parser("verify", parents=[common], help="Run identity suites.")
    sub.add_argument("--suite", default="all", help=f"Suite name or 'all': {', '.join(suite_names())}.")
    sub.add_argument("--trials", type=int, default=None)
    sub.add_argument("--max-order", type=int, default=2)
    sub.add_argument("--degree", type=int, default=2)
    sub.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except DensopsException as err:
        logger.debug("Command failed", exc_info=True)
        print(f"densops {args.command}: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as err:
        print(f"densops {args.command}: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
