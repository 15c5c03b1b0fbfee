import pickle

import pytest
import sympy

from lyapbound import DomainError, ExprSyntaxError, MapSpecError
from lyapbound._expr import X, parse_expr, tokenize


def test_lanford_branch_values(ctx40):
    f1 = parse_expr("(5 - sqrt(25 - 8*x))/2")
    assert f1.evaluate(0, ctx40) == 0
    expected = (5 - ctx40.mp.sqrt(17)) / 2
    assert abs(f1.evaluate(1, ctx40) - expected) < ctx40.guard(2)


@pytest.mark.parametrize(
    "source, x, expected",
    [
        ("-x^2", 3, -9),
        ("2^-1", 0, "0.5"),
        ("x/2/2", 8, 2),
        ("2*x + x*(1 - x)/2", 1, 2),
        ("8^(1/3)", 0, 2),
        ("exp(log(x))", 5, 5),
        ("abs(x - 3)", 1, 2),
    ],
)
def test_precedence_and_functions(ctx40, source, x, expected):
    assert abs(parse_expr(source).evaluate(x, ctx40) - ctx40.mpf(expected)) < ctx40.guard(3)


def test_decimal_literals_are_exact():
    assert parse_expr("0.1").tree == sympy.Rational(1, 10)
    assert parse_expr("2.5e-1").tree == sympy.Rational(1, 4)


def test_equality_ignores_formatting():
    assert parse_expr("x/2") == parse_expr(" x / 2 ")
    assert hash(parse_expr("x/2")) == hash(parse_expr("x /2"))


def test_tokens_carry_positions():
    tokens = tokenize("x +\n  sqrt(x)")
    sqrt = [t for t in tokens if t.text == "sqrt"][0]
    assert (sqrt.line, sqrt.column) == (2, 3)


@pytest.mark.parametrize(
    "source, line, column",
    [
        ("x +* 2", 1, 4),
        ("foo(x)", 1, 1),
        ("x +\n  $", 2, 3),
        ("(x + 1", 1, 7),
        ("x^x", 1, 2),
        ("y + 1", 1, 1),
        ("", 1, 1),
    ],
)
def test_syntax_errors_report_position(source, line, column):
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr(source)
    assert (info.value.line, info.value.column) == (line, column)
    assert info.value.reason == "syntax"


def test_unknown_function_message():
    with pytest.raises(ExprSyntaxError, match="unknown function 'sin'"):
        parse_expr("sin(x)")


def test_symbolic_derivative(ctx40):
    d = parse_expr("x^3").diff()
    assert abs(d.evaluate(2, ctx40) - 12) < ctx40.guard(3)
    assert d.tree == 3 * X**2


def test_abs_derivative_rejects_kink(ctx40):
    d = parse_expr("abs(x - 1/2)").diff()
    assert d.evaluate("0.25", ctx40) == -1
    assert d.evaluate("0.75", ctx40) == 1
    with pytest.raises(DomainError, match="kink"):
        d.evaluate("0.5", ctx40)


def test_domain_errors_name_subexpression(ctx40):
    with pytest.raises(DomainError, match="x - 2"):
        parse_expr("sqrt(x - 2)").evaluate(1, ctx40)
    with pytest.raises(DomainError, match="log"):
        parse_expr("log(x)").evaluate(0, ctx40)
    with pytest.raises(DomainError):
        parse_expr("1/x").evaluate(0, ctx40)


def test_parameter_substitution(ctx40):
    with pytest.raises(MapSpecError, match="unbound"):
        parse_expr("c*x")
    e = parse_expr("c*x", {"c": 0.25})
    assert e.evaluate(2, ctx40) == ctx40.mpf("0.5")
    assert e.tree == X / 4


def test_non_finite_constant_rejected():
    with pytest.raises(MapSpecError):
        parse_expr("x + 1/0")


def test_pickle_drops_compiled_evaluator(ctx40):
    e = parse_expr("sqrt(1 + x)")
    e.evaluate(3, ctx40)
    clone = pickle.loads(pickle.dumps(e))
    assert clone == e
    assert clone.evaluate(3, ctx40) == 2


def test_numpy_evaluator():
    f = parse_expr("(x + 1)/2").to_numpy()
    assert f(1.0) == 1.0


def test_euler_constant(ctx40):
    e = parse_expr("x*exp(1)/3")
    assert e.tree.has(sympy.E)
    assert abs(e.evaluate("0.5", ctx40) - ctx40.mp.e / 6) < ctx40.guard(3)
    assert abs(e.diff().evaluate(0, ctx40) - ctx40.mp.e / 3) < ctx40.guard(3)
