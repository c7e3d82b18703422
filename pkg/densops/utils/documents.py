"""
JSON documents of the command line interface. Expressions are stored as strings in the DSL grammar, coordinate and
derivative indices are 1-based like the names x1 and d1.
"""
from ..calculus import *
from ..geometry import *
from ..pencils import LambdaOperator, VectorField
from . import dsl
import io
import json
import logging
import sympy

logger = logging.getLogger('densops.utils.documents')


class DocumentError(DensopsException):
    pass


def read_document(source) -> dict:
    """

    :param source: a file object, a path (str) to a json file or a string containing the json
    """
    if isinstance(source, str):
        if source.lstrip().startswith(("{", "[")):
            text = source
        else:
            with open(source, mode='r', encoding='utf-8') as file:
                text = file.read()
    else:
        # assume opened file-handle
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode('utf-8')
    try:
        document = json.loads(text)
    except json.JSONDecodeError as err:
        raise DocumentError(f"Invalid JSON document at line {err.lineno}, column {err.colno}: {err.msg}") from err
    return _object(document, "the document")


def _object(value, what: str) -> dict:
    if not isinstance(value, dict):
        raise DocumentError(f"Expected a JSON object for {what} but got {type(value).__name__}.")
    return value


def _array(value, what: str) -> list:
    if not isinstance(value, list):
        raise DocumentError(f"Expected a JSON array for {what} but got {type(value).__name__}.")
    return value


def _integer(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise DocumentError(f"Expected an integer for {what} but got {value!r}.")
    try:
        return int(value)
    except ValueError as err:
        raise DocumentError(f"Expected an integer for {what} but got {value!r}.") from err


def to_json(document: dict) -> str:
    return json.dumps(document, indent=2)


def write_document(document: dict, file):
    if isinstance(file, (str, bytes)) or hasattr(file, '__fspath__'):
        with open(file, "w", encoding='utf-8') as out:
            out.write(to_json(document))
            out.write("\n")
    elif isinstance(file, io.TextIOBase) or hasattr(file, 'write'):
        file.write(to_json(document))
        file.write("\n")


def chart_of(document: dict, dimension: int = None) -> Chart:
    """
    Chart of a document. A dimension stored in the document must agree with the one of the invocation.
    """
    stored = _object(document, "the document").get("dimension")
    if stored is not None:
        stored = _integer(stored, "'dimension'")
    if stored is not None and dimension is not None and stored != dimension:
        raise DocumentError(f"Document has dimension {stored} but the chart has dimension {dimension}.")
    if stored is None and dimension is None:
        raise DocumentError("Chart dimension is neither given nor stored in the document.")
    return Chart(stored if stored is not None else dimension)


def _expression(value, chart: Chart) -> sympy.Expr:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if isinstance(value, float) and not value.is_integer():
            raise DocumentError(f"Floating point constant {value} is not exact; write it as a string like '1/3'.")
        return sympy.Integer(int(value))
    if not isinstance(value, str):
        raise DocumentError(f"Expected an expression string but got {value!r}.")
    return dsl.parse_expression(value, chart)


def _text(e) -> str:
    return format_expression(e)


def _get(document: dict, key: str, array: bool = False):
    try:
        value = _object(document, f"the parent of '{key}'")[key]
    except KeyError as err:
        raise DocumentError(f"Document is missing the field '{key}'.") from err
    return _array(value, f"'{key}'") if array else value


def density_to_dict(d: Density) -> dict:
    return {
        "dimension": d.chart.dimension,
        "terms": [{"weight": str(weight), "coeff": _text(c)} for weight, c in d.terms.items()],
    }


def density_from_dict(document: dict, chart: Chart) -> Density:
    terms = {}
    for term in _get(document, "terms", array=True):
        weight = dsl.parse_rational(str(_get(term, "weight")))
        terms[weight] = terms.get(weight, 0) + _expression(_get(term, "coeff"), chart)
    return Density(chart, terms)


def operator_to_dict(op: DiffOperator) -> dict:
    terms = []
    for (alpha, power), c in op.terms.items():
        indices = [index + 1 for index, count in enumerate(alpha) for _ in range(count)]
        terms.append({"d": indices, "w": power, "coeff": _text(c)})
    return {"dimension": op.chart.dimension, "terms": terms, "text": format_operator(op)}


def operator_from_dict(document: dict, chart: Chart) -> DiffOperator:
    """
    Reads the term list; a document holding only "text" is parsed with the DSL.
    """
    if "terms" not in _object(document, "the document") and "text" in document:
        if not isinstance(document["text"], str):
            raise DocumentError(f"Field 'text' must hold operator text but got {document['text']!r}.")
        return dsl.parse_operator(document["text"], chart)
    n = chart.dimension
    terms = {}
    for term in _get(document, "terms", array=True):
        alpha = [0] * n
        for index in _array(_object(term, "an operator term").get("d", []), "'d'"):
            index = _integer(index, "a derivative index")
            if not 1 <= index <= n:
                raise DocumentError(f"Derivative index {index} outside the chart of dimension {n}.")
            alpha[index - 1] += 1
        key = (tuple(alpha), _integer(term.get("w", 0), "'w'"))
        terms[key] = terms.get(key, 0) + _expression(_get(term, "coeff"), chart)
    return DiffOperator(chart, terms)


def symbol_to_dict(st: SymbolTriple) -> dict:
    n = st.chart.dimension
    return {
        "dimension": n,
        "S": [[_text(st.S[i, k]) for k in range(n)] for i in range(n)],
        "B": [_text(b) for b in st.B],
        "C": _text(st.C),
    }


def matrix_from_rows(rows, chart: Chart) -> sympy.ImmutableMatrix:
    n = chart.dimension
    if len(_array(rows, "a matrix")) != n or any(not isinstance(row, list) or len(row) != n for row in rows):
        raise DocumentError(f"Expected a {n}x{n} matrix.")
    return sympy.ImmutableMatrix([[_expression(e, chart) for e in row] for row in rows])


def _vector(values, chart: Chart) -> list:
    if len(_array(values, "a vector")) != chart.dimension:
        raise DocumentError(f"Expected {chart.dimension} components but got {len(values)}.")
    return [_expression(v, chart) for v in values]


def symbol_from_dict(document: dict, chart: Chart) -> SymbolTriple:
    try:
        return SymbolTriple(chart, matrix_from_rows(_get(document, "S"), chart), _vector(_get(document, "B"), chart),
                            _expression(_get(document, "C"), chart))
    except ValueError as err:
        raise DocumentError(str(err)) from err


def connection_to_dict(gamma: Connection) -> dict:
    return {"dimension": gamma.chart.dimension, "gamma": [_text(c) for c in gamma.components]}


def connection_from_dict(document: dict, chart: Chart) -> Connection:
    return Connection(chart, _vector(_get(document, "gamma"), chart))


def vector_field_to_dict(X: VectorField) -> dict:
    return {"dimension": X.chart.dimension, "X": [_text(c) for c in X.components]}


def vector_field_from_dict(document: dict, chart: Chart) -> VectorField:
    return VectorField(chart, _vector(_get(document, "X"), chart))


def metric_to_dict(g: Metric) -> dict:
    n = g.chart.dimension
    return {
        "dimension": n,
        "g": [[_text(g.g[i, k]) for k in range(n)] for i in range(n)],
        "g_inv": [[_text(g.g_inv[i, k]) for k in range(n)] for i in range(n)],
    }


def metric_from_dict(document: dict, chart: Chart) -> Metric:
    g_inv = document.get("g_inv")
    g = matrix_from_rows(_get(document, "g"), chart)
    return Metric(chart, g, None if g_inv is None else matrix_from_rows(g_inv, chart))


def _lower_triangular(table, n: int) -> list:
    # symbols[i][k][m] for m <= k
    return [[[_text(table[i][k][m]) for m in range(k + 1)] for k in range(n)] for i in range(n)]


def _from_lower_triangular(rows, chart: Chart) -> list:
    n = chart.dimension
    if len(_array(rows, "symbols")) != n:
        raise DocumentError(f"Expected symbols for {n} upper indices but got {len(rows)}.")
    table = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        if len(_array(rows[i], f"upper index {i + 1}")) != n:
            raise DocumentError(f"Expected {n} rows of lower indices for upper index {i + 1}.")
        for k in range(n):
            if len(_array(rows[i][k], f"row ({i + 1}, {k + 1})")) != k + 1:
                raise DocumentError(f"Row ({i + 1}, {k + 1}) must hold {k + 1} entries (lower triangular storage).")
            for m in range(k + 1):
                table[i][k][m] = _expression(rows[i][k][m], chart)
                table[i][m][k] = table[i][k][m]
    return table


def christoffel_to_dict(christoffel: Christoffel) -> dict:
    n = christoffel.chart.dimension
    return {"dimension": n, "Gamma": _lower_triangular(christoffel.symbols, n)}


def christoffel_from_dict(document: dict, chart: Chart) -> Christoffel:
    return Christoffel(chart, _from_lower_triangular(_get(document, "Gamma"), chart))


def pi_to_dict(pi: PiSymbols) -> dict:
    n = pi.chart.dimension
    return {"dimension": n, "Pi": _lower_triangular(pi.symbols, n)}


def pi_from_dict(document: dict, chart: Chart) -> PiSymbols:
    try:
        return PiSymbols(chart, _from_lower_triangular(_get(document, "Pi"), chart))
    except ValueError as err:
        raise DocumentError(str(err)) from err


def extended_to_dict(extended: ExtendedChristoffel) -> dict:
    """
    Index 0 is the vertical coordinate x0 = log t, index i the base coordinate xi.
    """
    n = extended.chart.dimension
    return {"dimension": n, "Gamma_hat": _lower_triangular(extended.symbols, n + 1)}


def chart_change_to_dict(change: ChartChange) -> dict:
    return {
        "dimension": change.chart.dimension,
        "forward": [_text(e) for e in change.forward],
        "inverse": [_text(e) for e in change.inverse],
    }


def chart_change_from_dict(document: dict, chart: Chart) -> ChartChange:
    return ChartChange(chart, _vector(_get(document, "forward"), chart), _vector(_get(document, "inverse"), chart))


def lambda_operator_from_dict(document: dict, chart: Chart) -> LambdaOperator:
    """
    {"Aij": [[...]], "Ai": [...], "A": "...", "lambda0": "2"}; a document with "op" holds the operator as DSL text.
    """
    weight = dsl.parse_rational(str(_get(document, "lambda0")))
    if "op" in document:
        if not isinstance(document["op"], str):
            raise DocumentError(f"Field 'op' must hold operator text but got {document['op']!r}.")
        return LambdaOperator(dsl.parse_operator(document["op"], chart), weight)
    second = matrix_from_rows(_get(document, "Aij"), chart)
    n = chart.dimension
    second = [[second[i, k] for k in range(n)] for i in range(n)]
    first = _vector(document.get("Ai", [0] * n), chart)
    zeroth = _expression(document.get("A", 0), chart)
    return LambdaOperator.from_coefficients(chart, second, first, zeroth, weight)
