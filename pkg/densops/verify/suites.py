from ..calculus import *
from ..geometry import *
from ..pencils import *
from ..utils import integration
from ..utils import sampling
from .generators import StructureGenerator
from pathlib import Path
import json
import logging
import sympy
import yaml
import zlib

logger = logging.getLogger('densops.verify.suites')

__all__ = ['UnknownSuiteException', 'RandomSuiteConfig', 'TrialFailure', 'SuiteReport', 'TrialContext',
           'SUITES', 'SUITE_SETTINGS', 'suite_names', 'check_adjoint_numeric', 'adjoint_residual', 'run_suite',
           'run_all', 'nonlinear_change']

module_path = Path(__file__).parent
with open(module_path / 'suites.yml', 'r') as stream:
    SUITE_SETTINGS = yaml.safe_load(stream)

SUITES = {}


class UnknownSuiteException(DensopsException):
    pass


class RandomSuiteConfig(object):
    """
    Settings of a randomized run. Unset values fall back to numerics.yml (seed, tolerance) and suites.yml (trials).

    :param seed: seed of every generator of the run; identical seeds give identical reports
    :param trials: number of trials, None for the suite default
    :param max_order: bound on the order of random operators
    :param degree: bound on the degree of random trigonometric polynomial coefficients
    :param dimensions: chart dimensions cycled through by the trials, None for the suite default
    :param tolerance: relative tolerance of numeric comparisons, None for the suite default
    """

    def __init__(self, seed: int = None, trials: int = None, max_order: int = 2, degree: int = 2,
                 dimensions: tuple = None, tolerance: float = None):
        self.seed = NUMERICS['seed'] if seed is None else int(seed)
        self.trials = trials
        self.max_order = max_order
        self.degree = degree
        self.dimensions = tuple(dimensions) if dimensions is not None else None
        self.tolerance = tolerance

    def __repr__(self):
        return f"RandomSuiteConfig(seed={self.seed}, trials={self.trials}, max_order={self.max_order}, " \
               f"degree={self.degree}, dimensions={self.dimensions}, tolerance={self.tolerance})"


class TrialFailure(object):

    def __init__(self, trial: int, check: str, inputs: dict, lhs: str, rhs: str):
        self.trial = trial
        self.check = check
        self.inputs = inputs
        self.lhs = lhs
        self.rhs = rhs

    def to_dict(self) -> dict:
        return {"trial": self.trial, "check": self.check, "inputs": self.inputs, "lhs": self.lhs, "rhs": self.rhs}


class SuiteReport(object):
    """
    Outcome of a suite. Failures are kept sorted by trial index.
    """

    def __init__(self, suite: str, seed: int, trials: int):
        self.suite = suite
        self.seed = seed
        self.trials = trials
        self.max_residual = 0.0
        self.failures = []

    @property
    def passed(self) -> bool:
        return len(self.failures) == 0

    def add_failure(self, failure: TrialFailure):
        self.failures.append(failure)
        self.failures.sort(key=lambda f: f.trial)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "trials": self.trials,
            "passed": self.passed,
            "max_residual": self.max_residual,
            "failures": [f.to_dict() for f in self.failures],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{self.suite}: {status} trials={self.trials} seed={self.seed} max_residual={self.max_residual!r}"]
        for failure in self.failures:
            lines.append(f"  trial {failure.trial} [{failure.check}]: lhs = {failure.lhs}")
            lines.append(f"  trial {failure.trial} [{failure.check}]: rhs = {failure.rhs}")
            for name, value in failure.inputs.items():
                lines.append(f"    {name} = {value}")
        return "\n".join(lines)

    def __str__(self):
        return self.to_text()


def _text(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, DiffOperator):
        return format_operator(value)
    if isinstance(value, Density):
        return str(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_text(v) for v in value) + "]"
    if isinstance(value, (sympy.Basic, int)):
        return format_expression(value)
    return str(value)


class TrialContext(object):
    """
    State of one trial: its generator, the inputs recorded so far, the largest numeric residual and the first failed
    check.
    """

    def __init__(self, generator: StructureGenerator, config: RandomSuiteConfig, tolerance: float):
        self.generator = generator
        self.chart = generator.chart
        self.config = config
        self.tolerance = tolerance
        self.inputs = {}
        self.residual = 0.0
        self.failure = None

    def record(self, name: str, value):
        self.inputs[name] = _text(value)

    def expect(self, check: str, passed: bool, lhs=None, rhs=None, residual: float = 0.0) -> bool:
        self.residual = max(self.residual, residual)
        if not passed and self.failure is None:
            self.failure = (check, _text(lhs), _text(rhs))
        return passed


def suite(name: str, dimensions: tuple = (1, 2)):
    def register(check):
        SUITES[name] = (check, dimensions)
        return check
    return register


def suite_names() -> list:
    return list(SUITES)


def run_suite(name: str, config: RandomSuiteConfig = None) -> SuiteReport:
    if name not in SUITES:
        raise UnknownSuiteException(f"Unknown suite '{name}'. Known suites: {', '.join(SUITES)}.")
    config = config if config is not None else RandomSuiteConfig()
    check, default_dimensions = SUITES[name]
    settings = SUITE_SETTINGS.get(name, {})
    trials = config.trials if config.trials is not None else settings.get('trials', 25)
    tolerance = config.tolerance if config.tolerance is not None else \
        settings.get('tolerance', NUMERICS['relative_tolerance'])
    dimensions = config.dimensions or default_dimensions
    salt = zlib.crc32(name.encode('utf-8'))
    report = SuiteReport(name, config.seed, trials)
    for trial in range(trials):
        chart = Chart(dimensions[trial % len(dimensions)])
        generator = StructureGenerator(chart, [config.seed, salt, trial], config.degree)
        context = TrialContext(generator, config, tolerance)
        try:
            check(context)
        except DensopsException as err:
            logger.error(f"Suite {name}, trial {trial} raised {type(err).__name__}: {err}")
            context.expect("exception", False, type(err).__name__, str(err))
        report.max_residual = max(report.max_residual, context.residual)
        if context.failure is not None:
            check_name, lhs, rhs = context.failure
            report.add_failure(TrialFailure(trial, check_name, context.inputs, lhs, rhs))
        logger.debug(f"Suite {name}, trial {trial} on {chart}: {'ok' if context.failure is None else 'failed'}")
    logger.info(f"Suite {name}: {len(report.failures)} of {trials} trials failed, max residual {report.max_residual}.")
    return report


def run_all(config: RandomSuiteConfig = None) -> list:
    return [run_suite(name, config) for name in SUITES]


def adjoint_residual(op: DiffOperator, s1: Density, s2: Density):
    """
    :return: (<op s1, s2>, <s1, op* s2>, relative residual)
    """
    lhs = scalar_product(op_apply(op, s1), s2)
    rhs = scalar_product(s1, op_apply(op_adjoint(op), s2))
    if not isinstance(lhs, float) and not isinstance(rhs, float) and simplify(lhs - rhs) == 0:
        return lhs, rhs, 0.0
    return lhs, rhs, sampling.relative_residual(float(lhs), float(rhs))


def check_adjoint_numeric(op: DiffOperator, config: RandomSuiteConfig = None) -> SuiteReport:
    """
    Checks <op s1, s2> = <s1, op* s2> on the torus for random trigonometric densities s1 of weight l and s2 of weight
    1 - l, with l drawn from the weight pool.
    """
    config = config if config is not None else RandomSuiteConfig()
    trials = config.trials if config.trials is not None else SUITE_SETTINGS['scalar-product-duality']['trials']
    tolerance = config.tolerance if config.tolerance is not None else NUMERICS['relative_tolerance']
    report = SuiteReport("adjoint-numeric", config.seed, trials)
    for trial in range(trials):
        generator = StructureGenerator(op.chart, [config.seed, trial], config.degree)
        weight = generator.weight()
        s1 = generator.density(weight)
        s2 = generator.density(1 - weight)
        try:
            lhs, rhs, residual = adjoint_residual(op, s1, s2)
        except DensopsException as err:
            logger.error(f"Adjoint check of {op} failed in trial {trial}: {err}")
            report.add_failure(TrialFailure(trial, "exception", {"s1": str(s1), "s2": str(s2)},
                                            type(err).__name__, str(err)))
            continue
        report.max_residual = max(report.max_residual, residual)
        if residual > tolerance:
            report.add_failure(TrialFailure(trial, "duality", {"s1": str(s1), "s2": str(s2)}, _text(lhs),
                                            _text(rhs)))
    return report


def nonlinear_change(chart: Chart) -> ChartChange:
    """
    Fixed nonlinear change x1' = x1 + x1^3/3 (and x2' = x2 + x1 in two dimensions) with its explicit inverse
    x1 = u - 1/u, u = (3 x1'/2 + (9 x1'^2/4 + 1)^(1/2))^(1/3).
    """
    if chart.dimension > 2:
        raise ValueError("The nonlinear test change is defined for one and two dimensions.")
    x = chart.symbols
    u = (sympy.Rational(3, 2) * x[0] + sympy.sqrt(sympy.Rational(9, 4) * x[0] ** 2 + 1)) ** sympy.Rational(1, 3)
    first = u - 1 / u
    forward = [x[0] + x[0] ** 3 / 3]
    inverse = [first]
    if chart.dimension == 2:
        forward.append(x[1] + x[0])
        inverse.append(x[1] - first)
    return ChartChange(chart, forward, inverse)


@suite("expression-calculus")
def _expression_calculus(context: TrialContext):
    generator = context.generator
    chart = context.chart
    e = generator.smooth()
    f = generator.smooth()
    i = int(generator.rng.integers(chart.dimension))
    j = int(generator.rng.integers(chart.dimension))
    context.record("e", e)
    context.record("f", f)
    context.record("indices", [i, j])
    mixed_ij = diff(diff(e, i, chart), j, chart)
    mixed_ji = diff(diff(e, j, chart), i, chart)
    context.expect("mixed partials", simplify(mixed_ij - mixed_ji) == 0, mixed_ij, mixed_ji)
    product = diff(e * f, i, chart)
    leibniz = diff(e, i, chart) * f + e * diff(f, i, chart)
    context.expect("product rule", is_zero(product - leibniz, chart, EqualityPolicy.SYMBOLIC), product, leibniz)
    context.expect("idempotent simplify", simplify(simplify(e)) == simplify(e), simplify(simplify(e)), e)
    point = generator.rng.uniform(NUMERICS['sample_low'], NUMERICS['sample_high'], chart.dimension)
    exact = evaluate(diff(e, i, chart), point, chart)
    approximate = float(sampling.central_difference(compile_expression(e, chart), point, i,
                                                    NUMERICS['finite_difference_step']))
    residual = sampling.relative_residual(exact, approximate)
    context.expect("finite difference", residual <= context.tolerance, exact, approximate, residual)


@suite("density-algebra")
def _density_algebra(context: TrialContext):
    generator = context.generator
    a = generator.mixed_density()
    b = generator.mixed_density()
    c = generator.density()
    change = generator.affine_change()
    for name, value in (("a", a), ("b", b), ("c", c), ("change", change)):
        context.record(name, value)
    lhs = weight_op(density_mul(a, b))
    rhs = density_mul(weight_op(a), b) + density_mul(a, weight_op(b))
    context.expect("leibniz", lhs == rhs, lhs, rhs)
    lhs = density_mul(density_mul(a, b), c)
    rhs = density_mul(a, density_mul(b, c))
    context.expect("associativity", lhs == rhs, lhs, rhs)
    context.expect("commutativity", density_mul(a, b) == density_mul(b, a), density_mul(a, b), density_mul(b, a))
    back = density_pullback(density_pullback(a, change), change.inverted())
    context.expect("pullback functoriality", back.equals(a), back, a)


@suite("adjoint-involution")
def _adjoint_involution(context: TrialContext):
    op = context.generator.operator(max_order=3)
    context.record("A", op)
    twice = op_adjoint(op_adjoint(op))
    context.expect("involution", op_equal(twice, op, EqualityPolicy.SYMBOLIC), twice, op)


@suite("adjoint-antihomomorphism")
def _adjoint_antihomomorphism(context: TrialContext):
    a = context.generator.operator(max_order=context.config.max_order)
    b = context.generator.operator(max_order=context.config.max_order)
    context.record("A", a)
    context.record("B", b)
    lhs = op_adjoint(op_compose(a, b))
    rhs = op_compose(op_adjoint(b), op_adjoint(a))
    context.expect("antihomomorphism", op_equal(lhs, rhs, EqualityPolicy.SYMBOLIC), lhs, rhs)


@suite("composition-application")
def _composition_application(context: TrialContext):
    a = context.generator.operator(max_order=context.config.max_order)
    b = context.generator.operator(max_order=context.config.max_order)
    d = context.generator.mixed_density()
    for name, value in (("A", a), ("B", b), ("s", d)):
        context.record(name, value)
    lhs = op_apply(op_compose(a, b), d)
    rhs = op_apply(a, op_apply(b, d))
    context.expect("application", lhs.equals(rhs, EqualityPolicy.SYMBOLIC), lhs, rhs)


@suite("scalar-product-duality")
def _scalar_product_duality(context: TrialContext):
    generator = context.generator
    op = generator.operator(max_order=context.config.max_order)
    weight = generator.weight()
    s1 = generator.density(weight)
    s2 = generator.density(1 - weight)
    for name, value in (("A", op), ("s1", s1), ("s2", s2)):
        context.record(name, value)
    lhs, rhs, residual = adjoint_residual(op, s1, s2)
    context.expect("duality", residual <= context.tolerance, lhs, rhs, residual)


@suite("canonical-form")
def _canonical_form(context: TrialContext):
    st = context.generator.symbol_triple()
    context.record("symbol", st)
    op = build_canonical(st)
    context.expect("self-adjoint", is_self_adjoint(op, EqualityPolicy.SYMBOLIC), op, op_adjoint(op))
    constants = op_apply(op, Density.unit(context.chart))
    context.expect("normalisation", constants.is_zero(), constants, 0)
    extracted = extract_symbol(op)
    context.expect("symbol round trip", extracted.equals(st, EqualityPolicy.SYMBOLIC), extracted, st)


@suite("theorem-uniqueness")
def _theorem_uniqueness(context: TrialContext):
    generator = context.generator
    st = generator.symbol_triple()
    weight = generator.lambda0()
    context.record("symbol", st)
    context.record("lambda0", weight)
    pencil = build_canonical(st)
    restricted = restrict(pencil, weight)
    reconstructed = reconstruct_symbol(LambdaOperator(restricted, weight))
    context.expect("symbol recovered", reconstructed.equals(st, EqualityPolicy.SYMBOLIC), reconstructed, st)
    rebuilt = canonical_pencil(LambdaOperator(restricted, weight))
    context.expect("pencil recovered", op_equal(rebuilt, pencil, EqualityPolicy.SYMBOLIC), rebuilt, pencil)
    for forbidden in FORBIDDEN_WEIGHTS:
        try:
            canonical_pencil(LambdaOperator(restrict(pencil, forbidden), forbidden))
            context.expect("forbidden weight", False, forbidden, "ForbiddenWeightError")
        except ForbiddenWeightError:
            pass


@suite("example-crosscheck")
def _example_crosscheck(context: TrialContext):
    generator = context.generator
    X = generator.vector_field()
    Y = generator.vector_field()
    weight = generator.lambda0()
    for name, value in (("X", X), ("Y", Y), ("lambda0", weight)):
        context.record(name, value)
    example = example_pencil(X, Y, weight)
    composed = op_compose(lie_lift(X), lie_lift(Y))
    reconstructed = canonical_pencil(LambdaOperator(restrict(composed, weight), weight))
    context.expect("reconstructed", op_equal(example, reconstructed, EqualityPolicy.SYMBOLIC), example, reconstructed)
    symmetrized = example_pencil_symmetrized(X, Y, weight)
    context.expect("displayed forms", op_equal(example, symmetrized, EqualityPolicy.SYMBOLIC), example, symmetrized)
    context.expect("self-adjoint", is_self_adjoint(example, EqualityPolicy.SYMBOLIC), example, op_adjoint(example))
    context.expect("restriction", pencil_agrees(example, composed, weight, EqualityPolicy.SYMBOLIC),
                   restrict(example, weight), restrict(composed, weight))


@suite("lie-structure")
def _lie_structure(context: TrialContext):
    X = context.generator.vector_field()
    Y = context.generator.vector_field()
    context.record("X", X)
    context.record("Y", Y)
    divergence = divergence_hat(lie_lift(X))
    context.expect("divergence free", divergence == 0, divergence, 0)
    lhs = op_compose(lie_lift(X), lie_lift(Y)) - op_compose(lie_lift(Y), lie_lift(X))
    rhs = lie_lift(commutator(X, Y))
    context.expect("commutator", op_equal(lhs, rhs, EqualityPolicy.SYMBOLIC), lhs, rhs)


@suite("kk-extraction", dimensions=(1, 2, 3))
def _kk_extraction(context: TrialContext):
    generator = context.generator
    chart = context.chart
    n = chart.dimension
    S = generator.invertible_matrix()
    gamma = generator.connection()
    context.record("S", list(S))
    context.record("gamma", gamma)
    B = [sum(S[i, k] * gamma.components[k] for k in range(n)) for i in range(n)]
    extracted = kk_extract(SymbolTriple(chart, S, B, generator.trig_polynomial()))
    context.expect("round trip", extracted.equals(gamma), extracted, gamma)
    degenerate = SymbolTriple(chart, sympy.diag(*([1] * (n - 1) + [0])), [0] * (n - 1) + [1], 0)
    context.expect("range check", not horizontal_distribution_consistent(degenerate), degenerate, "inconsistent")
    try:
        kk_extract(degenerate)
        context.expect("degenerate", False, degenerate, "DegenerateSymbolError")
    except DegenerateSymbolError:
        pass


@suite("projective", dimensions=(1, 2, 3))
def _projective(context: TrialContext):
    generator = context.generator
    chart = context.chart
    n = chart.dimension
    christoffel = generator.christoffel()
    t = generator.covector()
    context.record("Gamma", christoffel)
    context.record("t", t)
    pi = pi_symbols(christoffel)
    for m in range(n):
        trace = simplify(sum(pi[k, k, m] for k in range(n)))
        context.expect("trace free", trace == 0, trace, 0)
    shifted = projective_shift(christoffel, t)
    shifted_pi = pi_symbols(shifted)
    context.expect("shift invariance", shifted_pi.equals(pi, EqualityPolicy.SYMBOLIC), shifted_pi, pi)
    equivalent, recovered = projectively_equivalent(christoffel, shifted, EqualityPolicy.SYMBOLIC)
    context.expect("equivalence", equivalent, equivalent, True)
    if equivalent:
        context.expect("recovered shift", all(simplify(a - b) == 0 for a, b in zip(recovered, t)), recovered, t)
    lifted = thomas_lift(pi)
    context.expect("lift invariance", lifted == thomas_lift(shifted_pi), lifted, thomas_lift(shifted_pi))
    flat = thomas_lift(pi_symbols(Christoffel.zero(chart)))
    fraction = sympy.Rational(-1, n + 1)
    for i in range(1, n + 1):
        for k in range(1, n + 1):
            expected = fraction if i == k else 0
            context.expect("flat lift", flat[i, k, 0] == expected and flat[0, i, k] == 0, flat[i, k, 0], expected)
    context.expect("flat lift", flat[0, 0, 0] == fraction, flat[0, 0, 0], fraction)


@suite("covariance")
def _covariance(context: TrialContext):
    generator = context.generator
    chart = context.chart
    n = chart.dimension
    if int(generator.rng.integers(2)) == 0 or n > 2:
        change = generator.affine_change()
        policy = EqualityPolicy.SYMBOLIC_THEN_NUMERIC
    else:
        change = nonlinear_change(chart)
        policy = EqualityPolicy.NUMERIC
    context.record("change", change)

    d = generator.mixed_density()
    context.record("s", d)
    back = density_pullback(density_pullback(d, change), change.inverted())
    context.expect("pullback functoriality", back.equals(d, policy), back, d)

    gamma = generator.connection()
    second = generator.affine_change()
    context.record("gamma", gamma)
    context.record("second change", second)
    stepwise = gamma_transform(gamma_transform(gamma, change), second)
    composed = gamma_transform(gamma, change.then(second))
    context.expect("gamma composition", stepwise.equals(composed, policy), stepwise, composed)

    op = generator.operator(max_order=2)
    context.record("A", op)
    lhs = density_pullback(op_apply(op, d), change)
    rhs = op_apply(op_conjugate(op, change), density_pullback(d, change))
    context.expect("conjugation", lhs.equals(rhs, policy), lhs, rhs)

    S = generator.symmetric_matrix()
    B = [sum(S[i, k] * gamma.components[k] for k in range(n)) for i in range(n)]
    induced = SymbolTriple(chart, S, B, generator.trig_polynomial())
    context.record("induced symbol", induced)
    moved = extract_symbol(op_conjugate(build_canonical(induced), change))
    before = brans_dicke(induced, gamma)
    after = brans_dicke(moved, gamma_transform(gamma, change))
    context.expect("brans-dicke scalar", expr_equal(after, change.to_new(before), chart, policy), after, before)

    st = generator.symbol_triple()
    christoffel = generator.christoffel()
    context.record("symbol", st)
    context.record("Gamma", christoffel)
    vector, scalar = covariant_parts(st, christoffel)
    moved = extract_symbol(op_conjugate(build_canonical(st), change))
    moved_vector, moved_scalar = covariant_parts(moved, christoffel_transform(christoffel, change))
    context.expect("scalar part", expr_equal(moved_scalar, change.to_new(scalar), chart, policy), moved_scalar,
                   scalar)
    for j in range(n):
        expected = sum(change.to_new(change.jacobian[j, i] * vector[i]) for i in range(n))
        context.expect("vector part", expr_equal(moved_vector[j], expected, chart, policy), moved_vector[j],
                       expected)


@suite("integrator")
def _integrator(context: TrialContext):
    chart = context.chart
    e = context.generator.trig_polynomial(degree=6)
    context.record("integrand", e)
    exact = integration.integrate_torus(e, chart)
    approximate = integration.integrate_torus_quadrature(e, chart)
    residual = sampling.relative_residual(float(exact), approximate)
    context.expect("exact against quadrature", residual <= context.tolerance, exact, approximate, residual)
