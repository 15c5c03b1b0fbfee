import numpy as np
import pytest
from sklearn.utils._param_validation import InvalidParameterError

from lyapbound import OutOfRangeError, make_context
from lyapbound.chebyshev_ops import (
    ChebPoly,
    cheb_basis_eval,
    chebyshev_interpolant,
    chebyshev_nodes,
    clenshaw_eval,
    integrate,
    lagrange_node_eval,
    lagrange_row,
    to_reference,
    values_to_coeffs,
)


def test_nodes_are_cosines_in_decreasing_order(ctx40):
    nodes = chebyshev_nodes(4, (0, 1), ctx40)
    mp = ctx40.mp
    assert abs(nodes.nodes[0] - mp.cos(mp.pi / 8)) < ctx40.guard(2)
    assert all(a > b for a, b in zip(nodes.nodes, nodes.nodes[1:]))
    assert all(-1 < u < 1 for u in nodes.nodes)
    for u, x in zip(nodes.nodes, nodes.mapped_nodes):
        assert abs(x - (u + 1) / 2) < ctx40.guard(2)


def test_even_node_set_is_symmetric(ctx40):
    nodes = chebyshev_nodes(10, (-1, 1), ctx40).nodes
    for k in range(5):
        assert abs(nodes[k] + nodes[9 - k]) < ctx40.guard(5)


def test_single_node_is_zero(ctx40):
    nodes = chebyshev_nodes(1, (0, 1), ctx40)
    assert nodes.nodes[0] == 0
    assert nodes.mapped_nodes[0] == ctx40.mpf("0.5")


def test_invalid_node_count():
    with pytest.raises(InvalidParameterError):
        chebyshev_nodes(0, (0, 1), make_context(30))


def test_basis_values(ctx40):
    assert abs(cheb_basis_eval(3, "0.5", ctx40) + 1) < ctx40.guard(2)
    assert cheb_basis_eval(0, "0.3", ctx40) == 1
    assert abs(cheb_basis_eval(200, 1, ctx40) - 1) < ctx40.guard(2)
    with pytest.raises(OutOfRangeError):
        cheb_basis_eval(2, "1.5", ctx40)


def test_values_to_coeffs_recovers_single_basis_function(ctx40):
    nodes = chebyshev_nodes(4, (-1, 1), ctx40)
    values = [cheb_basis_eval(2, u, ctx40) for u in nodes.nodes]
    coeffs = values_to_coeffs(values, ctx40).coeffs
    assert abs(coeffs[2] - 1) < ctx40.guard(5)
    for j in (0, 1, 3):
        assert abs(coeffs[j]) < ctx40.guard(5)


def test_values_to_coeffs_rejects_empty(ctx40):
    with pytest.raises(ValueError):
        values_to_coeffs([], ctx40)


def test_transform_inverts_evaluation_at_nodes(ctx40):
    rng = np.random.default_rng(7)
    m = 20
    coeffs = tuple(ctx40.mpf(float(c)) for c in rng.uniform(-1, 1, m))
    p = ChebPoly(coeffs=coeffs, interval=(ctx40.mpf(0), ctx40.mpf(2)))
    nodes = chebyshev_nodes(m, (0, 2), ctx40)
    back = values_to_coeffs([clenshaw_eval(p, x, ctx40) for x in nodes.mapped_nodes], ctx40, (0, 2)).coeffs
    assert max(abs(a - b) for a, b in zip(coeffs, back)) < ctx40.guard(5)


def test_clenshaw_matches_direct_sum(ctx40):
    rng = np.random.default_rng(3)
    coeffs = tuple(ctx40.mpf(float(c)) for c in rng.uniform(-1, 1, 51))
    p = ChebPoly(coeffs=coeffs, interval=(ctx40.mpf(-1), ctx40.mpf(1)))
    for u in rng.uniform(-1, 1, 10):
        u = ctx40.mpf(float(u))
        direct = ctx40.mp.fsum(c * cheb_basis_eval(j, u, ctx40) for j, c in enumerate(coeffs))
        assert abs(clenshaw_eval(p, u, ctx40) - direct) < ctx40.guard(5)


def test_clenshaw_outside_interval(ctx40):
    p = ChebPoly(coeffs=(ctx40.mpf(1),), interval=(ctx40.mpf(0), ctx40.mpf(1)))
    with pytest.raises(OutOfRangeError):
        clenshaw_eval(p, "1.01", ctx40)


def test_rounding_overshoot_is_clamped(ctx40):
    interval = (ctx40.mpf(0), ctx40.mpf(1))
    assert to_reference(1 + ctx40.power_of_ten(-39), interval, ctx40) == 1
    with pytest.raises(OutOfRangeError):
        to_reference(1 + ctx40.power_of_ten(-10), interval, ctx40)


def test_lagrange_closed_form_example(ctx40):
    nodes = chebyshev_nodes(3, (-1, 1), ctx40)
    assert abs(lagrange_node_eval(nodes, 1, "0.5", ctx40) - ctx40.mpf(2) / 3) < ctx40.guard(5)


def test_lagrange_interpolation_property(ctx40):
    nodes = chebyshev_nodes(9, (-1, 1), ctx40)
    for j in range(9):
        for k in range(9):
            value = lagrange_node_eval(nodes, j, nodes.nodes[k], ctx40)
            expected = 1 if j == k else 0
            assert abs(value - expected) < ctx40.guard(10)


def test_lagrange_partition_of_unity(ctx40):
    nodes = chebyshev_nodes(12, (-1, 1), ctx40)
    rng = np.random.default_rng(11)
    for y in rng.uniform(-1, 1, 100):
        row = lagrange_row(nodes, ctx40.mpf(float(y)), ctx40)
        assert abs(ctx40.mp.fsum(row) - 1) < ctx40.guard(10)


def test_lagrange_row_agrees_with_single_evaluations(ctx40):
    nodes = chebyshev_nodes(7, (-1, 1), ctx40)
    row = lagrange_row(nodes, "0.3", ctx40)
    for j in range(7):
        assert abs(row[j] - lagrange_node_eval(nodes, j, "0.3", ctx40)) < ctx40.guard(5)


def test_integrate(ctx40):
    one = ChebPoly(coeffs=(ctx40.mpf(1),), interval=(ctx40.mpf(0), ctx40.mpf(2)))
    assert abs(integrate(one, ctx40) - 2) < ctx40.guard(5)
    t2 = ChebPoly(coeffs=(0, 0, ctx40.mpf(1)), interval=(ctx40.mpf(-1), ctx40.mpf(1)))
    assert abs(integrate(t2, ctx40) + ctx40.mpf(2) / 3) < ctx40.guard(5)
    t1 = ChebPoly(coeffs=(0, ctx40.mpf(1)), interval=(ctx40.mpf(-1), ctx40.mpf(1)))
    assert integrate(t1, ctx40) == 0


def test_interpolant_integrates_exponential(ctx40):
    mp = ctx40.mp
    p = chebyshev_interpolant(mp.exp, 30, (0, 1), ctx40)
    assert abs(integrate(p, ctx40) - (mp.e - 1)) < ctx40.guard(5)
