"""Chebyshev machinery at arbitrary precision.

Everything here works in reference coordinates u in [-1, 1]; quantities on a
map domain [a, b] are transported with :func:`to_reference` and
:func:`from_reference` at operation boundaries.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from numbers import Integral

from sklearn.utils._param_validation import Interval, validate_params

from ._base import MapSpecError, OutOfRangeError, PrecisionContext

logger = logging.getLogger(__name__)

# Guard digits absorbed by O(m^2) transforms for m <= 1000.
GUARD_DIGITS = 5


@dataclass(frozen=True)
class NodeSet:
    """Roots of T_m, descending, with their images on ``interval``.

    Attributes
    ----------
    m : int
        Number of nodes.
    nodes : tuple
        ``cos(pi (2k+1) / (2m))`` for k = 0..m-1.
    interval : tuple
        ``(a, b)`` of the map domain.
    mapped_nodes : tuple
        ``a + (nodes[k] + 1)(b - a)/2``.
    derivatives : tuple
        ``T_m'(nodes[j])``, needed by the Lagrange quotient formula.
    """

    m: int
    nodes: tuple
    interval: tuple
    mapped_nodes: tuple
    derivatives: tuple


@dataclass(frozen=True)
class ChebPoly:
    """Polynomial stored by its Chebyshev coefficients over ``interval``."""

    coeffs: tuple
    interval: tuple

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ValueError("ChebPoly needs at least one coefficient")

    @property
    def degree(self):
        return len(self.coeffs) - 1


###############################################################################
# Coordinates


def _interval_mpf(interval, ctx):
    try:
        a, b = interval
    except (TypeError, ValueError):
        raise MapSpecError(f"The parameter 'interval' should be a pair (a, b), but got {interval!r}")
    a, b = ctx.mpf(a), ctx.mpf(b)
    if not a < b:
        raise MapSpecError(f"The parameter 'interval' should satisfy a < b, but got [{a}, {b}]")
    return a, b


def _clamp_unit(u, ctx, what="u"):
    # Rounding can push a point a few ulps past an endpoint; anything further is an error.
    if abs(u) <= 1:
        return u
    if abs(u) - 1 <= ctx.guard(GUARD_DIGITS):
        return ctx.mp.one if u > 0 else -ctx.mp.one
    raise OutOfRangeError(f"{what}={ctx.mp.nstr(u, 15)} lies outside [-1, 1]")


def to_reference(x, interval, ctx):
    """Affine image of ``x`` in [-1, 1]; raises ``OutOfRangeError`` off the interval."""
    a, b = interval
    u = (2 * ctx.mpf(x) - a - b) / (b - a)
    try:
        return _clamp_unit(u, ctx)
    except OutOfRangeError:
        raise OutOfRangeError(f"x={ctx.mp.nstr(ctx.mpf(x), 15)} lies outside [{a}, {b}]")


def from_reference(u, interval):
    a, b = interval
    return a + (u + 1) * (b - a) / 2


###############################################################################
# Nodes and basis


@validate_params(
    {
        "m": [Interval(Integral, 1, None, closed="left")],
        "ctx": [PrecisionContext],
    },
    prefer_skip_nested_validation=True,
)
def chebyshev_nodes(m, interval, ctx):
    """Chebyshev nodes of the first kind, computed at full context precision.

    Parameters
    ----------
    m : int
        Node count. ``m = 1`` gives the single node 0 (degree-0 collocation).
    interval : pair
        Map domain ``(a, b)``.
    ctx : PrecisionContext

    Returns
    -------
    NodeSet
    """
    mp = ctx.mp
    interval = _interval_mpf(interval, ctx)
    nodes, derivatives = [], []
    for k in range(m):
        phase = mp.mpf(2 * k + 1) / (2 * m)
        nodes.append(mp.cospi(phase))
        # sin(m theta_k) = (-1)^k exactly at the roots of T_m.
        derivatives.append((m if k % 2 == 0 else -m) / mp.sinpi(phase))
    mapped = tuple(from_reference(u, interval) for u in nodes)
    return NodeSet(m=m, nodes=tuple(nodes), interval=interval, mapped_nodes=mapped, derivatives=tuple(derivatives))


@lru_cache(maxsize=32)
def _cos_table(m, ctx):
    # cos(j * theta_k) = table[j(2k+1) mod 4m] with theta_k = (2k+1) pi / (2m)
    mp = ctx.mp
    return tuple(mp.cospi(mp.mpf(r) / (2 * m)) for r in range(4 * m))


@validate_params(
    {"j": [Interval(Integral, 0, None, closed="left")], "ctx": [PrecisionContext]},
    prefer_skip_nested_validation=True,
)
def cheb_basis_eval(j, u, ctx):
    """T_j(u) = cos(j arccos u).

    The trigonometric form is exact on [-1, 1] at any precision and does not
    accumulate recurrence error near the endpoints for large ``j``.
    """
    u = ctx.mpf(u)
    if abs(u) > 1:
        raise OutOfRangeError(f"u={ctx.mp.nstr(u, 15)} lies outside [-1, 1]; map into reference coordinates first")
    return _basis(j, u, ctx)


def _basis(j, u, ctx):
    mp = ctx.mp
    return mp.cos(j * mp.acos(u))


###############################################################################
# Transforms and evaluation


def values_to_coeffs(values, ctx, interval=(-1, 1)):
    """Chebyshev coefficients of the interpolant of ``values``.

    ``values[k]`` must be the sample at ``chebyshev_nodes(len(values))[k]``.
    Uses the discrete orthogonality of T_j on the nodes::

        a_0 = (1/m) sum_k v_k,    a_j = (2/m) sum_k v_k T_j(x_k)

    Returns
    -------
    ChebPoly
        Degree ``len(values) - 1``.
    """
    m = len(values)
    if m == 0:
        raise ValueError("values_to_coeffs needs at least one value")
    mp = ctx.mp
    interval = _interval_mpf(interval, ctx)
    v = [ctx.mpf(x) for x in values]
    table = _cos_table(m, ctx)
    four_m = 4 * m
    coeffs = []
    for j in range(m):
        s = mp.fdot(v, (table[(j * (2 * k + 1)) % four_m] for k in range(m)))
        coeffs.append(s / m if j == 0 else 2 * s / m)
    return ChebPoly(coeffs=tuple(coeffs), interval=interval)


def chebyshev_interpolant(func, m, interval, ctx):
    """Sample ``func`` at ``m`` Chebyshev nodes on ``interval`` and interpolate."""
    nodes = chebyshev_nodes(m, interval, ctx)
    return values_to_coeffs([func(x) for x in nodes.mapped_nodes], ctx, nodes.interval)


def _clenshaw(coeffs, u, ctx):
    b1 = b2 = ctx.mp.zero
    u2 = 2 * u
    for a in reversed(coeffs[1:]):
        b1, b2 = u2 * b1 - b2 + a, b1
    return coeffs[0] + u * b1 - b2


def clenshaw_eval(p, x, ctx):
    """Value of ``p`` at ``x`` in ``p.interval`` by Clenshaw's backward recurrence."""
    u = to_reference(x, p.interval, ctx)
    return _clenshaw(p.coeffs, u, ctx)


def integrate(p, ctx):
    """Integral of ``p`` over its interval from its coefficients.

    Uses int_{-1}^{1} T_j = 2 / (1 - j^2) for even j and 0 for odd j.
    """
    mp = ctx.mp
    a, b = p.interval
    total = mp.fsum(c * mp.mpf(2) / (1 - j * j) for j, c in enumerate(p.coeffs) if j % 2 == 0)
    return total * (b - a) / 2


###############################################################################
# Lagrange basis on the nodes


def _near_node_threshold(ctx):
    return ctx.power_of_ten(-ctx.mp.mpf(ctx.digits) / 2)


def _node_product(nodes, j, y):
    xj = nodes.nodes[j]
    value = 1
    for k, xk in enumerate(nodes.nodes):
        if k != j:
            value *= (y - xk) / (xj - xk)
    return value


def lagrange_node_eval(nodes, j, y, ctx):
    """Lagrange basis polynomial for node ``j`` at ``y`` in [-1, 1].

    Evaluates T_m(y) / (T_m'(x_j) (y - x_j)). Within 10^(-digits/2) of the
    node the quotient loses half the digit budget to cancellation, so the
    explicit product over the other nodes is used instead.
    """
    if not 0 <= j < nodes.m:
        raise IndexError(f"node index {j} out of range for m={nodes.m}")
    y = _clamp_unit(ctx.mpf(y), ctx, "y")
    xj = nodes.nodes[j]
    if abs(y - xj) < _near_node_threshold(ctx):
        return _node_product(nodes, j, y)
    return _basis(nodes.m, y, ctx) / (nodes.derivatives[j] * (y - xj))


def lagrange_row(nodes, y, ctx):
    """All ``m`` Lagrange basis values at ``y``, sharing one T_m(y) evaluation."""
    y = _clamp_unit(ctx.mpf(y), ctx, "y")
    t_m = _basis(nodes.m, y, ctx)
    threshold = _near_node_threshold(ctx)
    row = []
    for j, (xj, dj) in enumerate(zip(nodes.nodes, nodes.derivatives)):
        diff = y - xj
        row.append(_node_product(nodes, j, y) if abs(diff) < threshold else t_m / (dj * diff))
    return row
