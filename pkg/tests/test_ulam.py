import numpy as np
import pytest
from sklearn.utils._param_validation import InvalidParameterError

from lyapbound import builtin, invariant_density
from lyapbound.chebyshev_ops import clenshaw_eval
from lyapbound.ulam import ulam_estimate
from util import LANFORD


def test_doubling_histogram_is_flat():
    estimate = ulam_estimate(builtin("doubling"), n_cells=1000, samples_per_cell=4)
    np.testing.assert_allclose(estimate.density, 1.0, rtol=1e-6)
    assert estimate.eigenvalue == pytest.approx(1.0, abs=1e-6)
    assert estimate.lyapunov == pytest.approx(np.log(2), abs=1e-6)
    np.testing.assert_allclose(estimate.density_at([0.0, 0.5, 1.0]), 1.0, rtol=1e-6)


def test_lanford_lyapunov_estimate():
    estimate = ulam_estimate(builtin("lanford"), n_cells=5000)
    assert estimate.eigenvalue == pytest.approx(1.0, abs=5e-2)
    assert estimate.lyapunov == pytest.approx(float(LANFORD), abs=5e-3)


def test_lanford_histogram_matches_collocation_density(ctx40):
    lanford = builtin("lanford")
    estimate = ulam_estimate(lanford, n_cells=5000, seed=3)
    rho = invariant_density(lanford, 16, ctx40)
    centers = 0.5 * (estimate.edges[:-1] + estimate.edges[1:])
    for x in (0.1, 0.5, 0.9):
        window = np.abs(centers - x) < 0.01
        expected = float(clenshaw_eval(rho, x, ctx40))
        assert estimate.density[window].mean() == pytest.approx(expected, rel=2e-2)


def test_ulam_is_seeded():
    lanford = builtin("lanford")
    first = ulam_estimate(lanford, n_cells=200, seed=11)
    second = ulam_estimate(lanford, n_cells=200, seed=11)
    np.testing.assert_array_equal(first.density, second.density)


def test_ulam_argument_checks():
    with pytest.raises(InvalidParameterError):
        ulam_estimate(builtin("doubling"), n_cells=2)
    with pytest.raises(InvalidParameterError):
        ulam_estimate(builtin("doubling"), samples_per_cell=0)
