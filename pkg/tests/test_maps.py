import hashlib
from fractions import Fraction

import numpy as np
import pytest
from sklearn.utils._param_validation import InvalidParameterError

from lyapbound import (
    Branch,
    CriticalPointError,
    ExprSyntaxError,
    MapSpec,
    MapSpecError,
    WeakHyperbolicityWarning,
    builtin,
    certify_map,
    eval_branch,
    eval_branch_deriv_abs,
    load_map_config,
    parse_map_spec,
    validate_map,
)
from lyapbound._expr import parse_expr
from lyapbound.maps import eval_forward
from util import LANFORD_CONFIG, slope_one_config

BUILTIN_CASES = [
    ("doubling", None),
    ("lanford", None),
    ("lanford_family", {"c": "0.25"}),
    ("lanford_family", {"c": "0.9"}),
    ("bent_tent", {"c": "0.11"}),
    ("bent_tent", {"c": "-0.2"}),
    ("bent_baker", None),
    ("linear", {"n": 3}),
]


def test_lanford_branch_values(ctx40):
    f1 = builtin("lanford").branches[0]
    assert eval_branch(f1, 0, ctx40) == 0
    assert abs(eval_branch(f1, 1, ctx40) - (5 - ctx40.mp.sqrt(17)) / 2) < ctx40.guard(2)


def test_bent_tent_first_branch_vanishes_at_right_end(ctx40):
    f1 = builtin("bent_tent", {"c": "0.11"}).branches[0]
    assert eval_branch(f1, 1, ctx40) == 0


def test_lanford_family_at_zero_is_doubling(ctx40):
    family = builtin("lanford_family", {"c": 0})
    doubling = builtin("doubling")
    for a, b in zip(family.branches, doubling.branches):
        assert eval_branch(a, Fraction(1, 3), ctx40) == eval_branch(b, Fraction(1, 3), ctx40)


def test_bent_tent_at_zero_is_tent(ctx40):
    spec = builtin("bent_tent", {"c": 0})
    for b in spec.branches:
        for x in ("-0.7", "0", "0.4"):
            assert abs(eval_branch_deriv_abs(b, x, 1, ctx40) - ctx40.mpf("0.5")) < ctx40.guard(2)


def test_bent_baker_left_branch_fixes_zero(ctx40):
    f1 = builtin("bent_baker").branches[0]
    y = eval_branch(f1, 0, ctx40)
    assert abs(y) < ctx40.guard(10)
    assert abs(eval_forward(f1, y, ctx40)) < ctx40.guard(10)


@pytest.mark.parametrize("name, params", BUILTIN_CASES)
def test_forward_map_inverts_each_branch(ctx40, name, params):
    spec = builtin(name, params)
    a, b = spec.interval_mpf(ctx40)
    rng = np.random.default_rng(5)
    for branch in spec.branches:
        for r in rng.random(50):
            x = a + (b - a) * ctx40.mpf(float(r))
            y = eval_branch(branch, x, ctx40)
            assert abs(eval_forward(branch, y, ctx40) - x) < ctx40.guard(10)


@pytest.mark.parametrize("name, params", BUILTIN_CASES)
def test_derivative_matches_finite_difference(ctx60, name, params):
    spec = builtin(name, params)
    a, b = spec.interval_mpf(ctx60)
    h = ctx60.power_of_ten(-20)
    rng = np.random.default_rng(9)
    for branch in spec.branches:
        for r in rng.uniform(0.05, 0.95, 5):
            x = a + (b - a) * ctx60.mpf(float(r))
            fd = (eval_branch(branch, x + h, ctx60) - eval_branch(branch, x - h, ctx60)) / (2 * h)
            assert abs(abs(fd) - eval_branch_deriv_abs(branch, x, 1, ctx60)) < ctx60.power_of_ten(-18)


def test_derivative_power(ctx40):
    f = builtin("doubling").branches[0]
    assert abs(eval_branch_deriv_abs(f, "0.3", 1, ctx40) - ctx40.mpf("0.5")) < ctx40.guard(2)
    t = 1 + ctx40.mpf("0.001")
    assert abs(eval_branch_deriv_abs(f, "0.3", t, ctx40) - ctx40.mpf(2) ** (-t)) < ctx40.guard(2)
    lanford = builtin("lanford").branches[0]
    assert abs(eval_branch_deriv_abs(lanford, 0, 1, ctx40) - ctx40.mpf("0.4")) < ctx40.guard(2)


def test_vanishing_derivative_is_critical_point(ctx40):
    branch = Branch(inverse=parse_expr("x^2/2"), deriv_abs=parse_expr("x"))
    with pytest.raises(CriticalPointError):
        eval_branch_deriv_abs(branch, 0, 1, ctx40)


def test_validate_doubling(ctx40):
    report = validate_map(builtin("doubling"), 64, ctx40)
    assert report.passed
    assert abs(report.expansion_floor - 2) < ctx40.guard(2)
    assert report.grid_size == 64


def test_validate_lanford(ctx40):
    report = validate_map(builtin("lanford"), 1024, ctx40)
    assert report.passed
    assert abs(report.expansion_floor - ctx40.mpf("1.5")) < ctx40.guard(5)
    assert report.max_range_excess <= ctx40.guard(10)


def test_validate_bent_baker(ctx40):
    report = validate_map(builtin("bent_baker"), 1024, ctx40)
    expected = 2 - ctx40.mp.sqrt(6) / 3
    assert report.passed
    assert abs(report.expansion_floor - expected) < ctx40.guard(10)


def test_validate_requires_grid_of_64(ctx40):
    with pytest.raises(InvalidParameterError):
        validate_map(builtin("doubling"), 32, ctx40)


def test_slope_one_branch_fails_validation(ctx40):
    report = validate_map(parse_map_spec(slope_one_config()), 128, ctx40)
    assert not report.passed
    assert any("not expanding" in msg for msg in report.messages)
    with pytest.raises(MapSpecError, match="failed validation"):
        certify_map(parse_map_spec(slope_one_config()), 128, ctx40)


def test_certify_map_attaches_report(ctx40):
    spec = certify_map(builtin("lanford"), 256, ctx40)
    assert spec.report.passed
    assert spec == builtin("lanford")
    assert abs(spec.expansion_floor - ctx40.mpf("1.5")) < ctx40.guard(5)


def test_config_equals_builtin():
    spec = parse_map_spec(LANFORD_CONFIG)
    assert spec == builtin("lanford")
    assert [b.label for b in spec.branches] == ["left", "right"]


def test_config_synthesizes_derivative(ctx40):
    spec = parse_map_spec(
        """
interval = [0, 1]
[[branch]]
inverse = "x/2"
[[branch]]
inverse = "(x + 1)/2"
"""
    )
    for b in spec.branches:
        assert abs(eval_branch_deriv_abs(b, "0.7", 1, ctx40) - ctx40.mpf("0.5")) < ctx40.guard(2)
    assert spec == builtin("doubling")


def test_config_parameter_binding(ctx40):
    spec = parse_map_spec(
        """
name = "lanford_family"
interval = [0, 1]
[parameter]
c = 0.25
[[branch]]
inverse = "(2 + c - sqrt((2 + c)^2 - 4*c*x))/(2*c)"
[[branch]]
inverse = "(2 + c - sqrt((2 + c)^2 - 4*c*(x + 1)))/(2*c)"
"""
    )
    assert spec.parameter == Fraction(1, 4)
    assert spec == builtin("lanford_family", {"c": "0.25"})


@pytest.mark.parametrize(
    "source, message",
    [
        ('interval = [0, 1]\n[[branch]]\ninverse = "x/2"\n', "at least 2 branches"),
        ('[[branch]]\ninverse = "x/2"\n[[branch]]\ninverse = "(x+1)/2"\n', "missing 'interval'"),
        ('interval = [1, 0]\n[[branch]]\ninverse = "x/2"\n[[branch]]\ninverse = "(x+1)/2"\n', "a < b"),
        ('interval = [0, 1]\ncolour = 1\n[[branch]]\ninverse = "x"\n[[branch]]\ninverse = "x"\n', "unknown"),
        ('interval = [0, 1]\n[[branch]]\nlabel = "a"\n[[branch]]\ninverse = "x"\n', "missing 'inverse'"),
    ],
)
def test_config_errors(source, message):
    with pytest.raises(MapSpecError, match=message):
        parse_map_spec(source)


def test_expression_error_names_branch():
    source = 'interval = [0, 1]\n[[branch]]\ninverse = "x/2"\n[[branch]]\ninverse = "(x + 1)/"\n'
    with pytest.raises(ExprSyntaxError, match="branch 2") as info:
        parse_map_spec(source)
    assert info.value.column == 9


def test_toml_error_has_position():
    with pytest.raises(ExprSyntaxError) as info:
        parse_map_spec('interval = [0, 1\n[[branch]]\n')
    assert info.value.line >= 1


def test_builtin_errors():
    with pytest.raises(MapSpecError, match="unknown built-in"):
        builtin("gauss")
    with pytest.raises(MapSpecError):
        builtin("lanford_family", {"c": 1})
    with pytest.raises(MapSpecError):
        builtin("lanford_family")
    with pytest.raises(MapSpecError):
        builtin("bent_tent", {"c": "0.6"})
    with pytest.raises(MapSpecError):
        builtin("linear", {"n": 1})


def test_weak_hyperbolicity_warnings():
    with pytest.warns(WeakHyperbolicityWarning):
        builtin("lanford_family", {"c": "0.98"})
    with pytest.warns(WeakHyperbolicityWarning):
        builtin("bent_tent", {"c": "-0.25"})


def test_map_needs_two_branches():
    b = Branch(inverse=parse_expr("x"), deriv_abs=parse_expr("1"))
    with pytest.raises(MapSpecError):
        MapSpec((0, 1), [b])


def test_load_map_config_hashes_content(tmp_path):
    path = tmp_path / "lanford.toml"
    path.write_text(LANFORD_CONFIG)
    spec, digest = load_map_config(path)
    assert spec == builtin("lanford")
    assert digest == hashlib.sha256(LANFORD_CONFIG.encode()).hexdigest()


def test_expansion_floor_property():
    assert builtin("doubling").expansion_floor == 2
