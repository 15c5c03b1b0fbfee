"""Collocation of the transfer operator on Chebyshev nodes."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from numbers import Integral

import numpy as np
from sklearn.utils._param_validation import Interval, validate_params

from ._base import ConvergenceError, DomainError, MapSpecError, PositivityError, PrecisionContext
from .chebyshev_ops import (
    ChebPoly,
    chebyshev_nodes,
    clenshaw_eval,
    integrate,
    lagrange_row,
    to_reference,
    values_to_coeffs,
)
from .maps import MapSpec, eval_branch, eval_branch_deriv_abs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CollocationMatrix:
    """``entries[j, k] = [L_t l_j](x_k)``; a read-only object array."""

    m: int
    t: object
    entries: np.ndarray
    map_name: str = ""


@dataclass(frozen=True)
class EigenPair:
    eigenvalue: object
    vector: tuple
    residual: object
    iterations: int


@dataclass(frozen=True)
class QuadratureResult:
    value: object
    error: object


###############################################################################
# Transfer operator


def apply_transfer(map, t, h, x, ctx):
    """[L_t h](x) = sum_i |f_i'(x)|^t h(f_i(x)).

    Parameters
    ----------
    map : MapSpec
    t : real
        Exponent of the derivative weights.
    h : ChebPoly
        Function on ``map.interval``.
    x : real
        Point of ``map.interval``.
    ctx : PrecisionContext
    """
    mp = ctx.mp
    t = ctx.mpf(t)
    x = ctx.mpf(x)
    to_reference(x, map.interval_mpf(ctx), ctx)
    terms = []
    for b in map.branches:
        terms.append(eval_branch_deriv_abs(b, x, t, ctx) * clenshaw_eval(h, eval_branch(b, x, ctx), ctx))
    return mp.fsum(terms)


def _column(map, t, nodes, k, ctx):
    mp = ctx.mp
    x = nodes.mapped_nodes[k]
    column = [mp.zero] * nodes.m
    for b in map.branches:
        # One |f_i'|^t per (branch, node); the Lagrange row shares T_m(u).
        weight = eval_branch_deriv_abs(b, x, t, ctx)
        u = to_reference(eval_branch(b, x, ctx), nodes.interval, ctx)
        for j, value in enumerate(lagrange_row(nodes, u, ctx)):
            column[j] += weight * value
    for j, value in enumerate(column):
        if not mp.isfinite(value):
            raise DomainError(f"non-finite collocation entry at (j={j}, k={k})")
    return column


def build_collocation_matrix(map, t, nodes, ctx, workers=1):
    """Matrix of the projected transfer operator on the Lagrange basis.

    Parameters
    ----------
    map : MapSpec
    t : real
    nodes : NodeSet
        Built for ``map.interval``.
    ctx : PrecisionContext
    workers : int, default=1
        Columns are independent; more than one worker builds them on a
        thread pool.

    Returns
    -------
    CollocationMatrix
    """
    if nodes.interval != map.interval_mpf(ctx):
        raise MapSpecError(f"nodes were built for {nodes.interval}, map {map.describe()} lives on {map.interval}")
    t = ctx.mpf(t)
    m = nodes.m
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            columns = list(executor.map(lambda k: _column(map, t, nodes, k, ctx), range(m)))
    else:
        columns = [_column(map, t, nodes, k, ctx) for k in range(m)]
    entries = np.empty((m, m), dtype=object)
    for k, column in enumerate(columns):
        # Ones interpolate exactly, so the sum is sum_i |f_i'(x_k)|^t.
        if not ctx.mp.fsum(column) > 0:
            raise DomainError(f"collocation column {k} has nonpositive sum; derivative vanishes at node {k}")
        entries[:, k] = column
    entries.flags.writeable = False
    logger.info(f"Collocation matrix built: map={map.describe()} m={m} t={ctx.mp.nstr(t, 12)}")
    return CollocationMatrix(m=m, t=t, entries=entries, map_name=map.describe())


###############################################################################
# Power iteration


def _as_entries(M, ctx):
    if isinstance(M, CollocationMatrix):
        return M.entries
    rows = [[ctx.mpf(v) for v in row] for row in M]
    entries = np.empty((len(rows), len(rows)), dtype=object)
    for j, row in enumerate(rows):
        if len(row) != len(rows):
            raise ValueError("collocation matrix must be square")
        entries[j, :] = row
    return entries


def _projected_iterations(residual, previous, span, tol, mp):
    """Iterations still needed at the contraction rate seen over ``span`` steps, or None if stalled."""
    rate = (residual / previous) ** (mp.one / span)
    if not rate < 1:
        return None
    return int(mp.ceil(mp.log(tol / residual) / mp.log(rate)))


def leading_left_eigenpair(M, tol=None, max_iter=None, ctx=None):
    """Leading left eigenpair by power iteration.

    Starts from the all-ones vector and normalizes each iterate by its
    largest entry. Stops once ``max |v M - lambda v| <= tol`` with
    ``lambda = max(v M)``.

    Parameters
    ----------
    M : CollocationMatrix or square nested sequence
    tol : real, optional
        Default ``10^(-digits + 20)``.
    max_iter : int, optional
        Hard cap on the iterations. When omitted the cap follows the
        observed contraction: past ``10 * digits`` iterations the run goes
        on while the residual contracts fast enough to reach ``tol``
        within ``100 * digits`` iterations, and stops early once it stalls.
    ctx : PrecisionContext

    Returns
    -------
    EigenPair
        ``vector`` has maximum entry 1 and is strictly positive.
    """
    if ctx is None:
        raise TypeError("leading_left_eigenpair() needs a PrecisionContext 'ctx'")
    mp = ctx.mp
    A = _as_entries(M, ctx)
    tol = ctx.guard(20) if tol is None else ctx.mpf(tol)
    if not tol > 0:
        raise ValueError(f"The parameter 'tol' should be positive, got {tol}")
    if max_iter is not None and (not isinstance(max_iter, Integral) or max_iter < 1):
        raise ValueError(f"The parameter 'max_iter' should be an integer >= 1, got {max_iter}")
    adaptive = max_iter is None
    soft_cap = 10 * ctx.digits
    cap = 100 * ctx.digits if adaptive else max_iter

    v = np.array([mp.one] * A.shape[0], dtype=object)
    residual = checkpoint = None
    n_iter = 0
    while n_iter < cap:
        n_iter += 1
        w = v.dot(A)
        lam = max(w)
        if not lam > 0:
            raise PositivityError(f"power iteration produced nonpositive eigenvalue estimate {mp.nstr(lam, 10)}")
        residual = max(abs(wi - lam * vi) for wi, vi in zip(w, v))
        if residual <= tol:
            if min(v) <= 0:
                raise PositivityError(
                    f"leading eigenvector has nonpositive entry {mp.nstr(min(v), 10)}; raise m"
                )
            logger.info(f"Eigenvalue {mp.nstr(lam, 20)} after {n_iter} iterations (residual {mp.nstr(residual, 5)})")
            return EigenPair(eigenvalue=lam, vector=tuple(v), residual=residual, iterations=n_iter)
        if n_iter % 50 == 0:
            logger.debug(f"  Iteration {n_iter}: lambda={mp.nstr(lam, 20)} residual={mp.nstr(residual, 5)}")
            if adaptive and n_iter >= soft_cap and checkpoint is not None:
                remaining = _projected_iterations(residual, checkpoint, 50, tol, mp)
                if remaining is None or n_iter + remaining > cap:
                    break
                logger.debug(f"  Residual still contracting, about {remaining} more iterations")
            checkpoint = residual
        v = w / lam
    raise ConvergenceError(
        f"power iteration did not converge in {n_iter} iterations (residual {mp.nstr(residual, 5)})",
        residual=residual,
        iterations=n_iter,
    )


###############################################################################
# Test polynomials and density


def _solve_eigenfunction(map, t, m, ctx, opts=None):
    opts = opts or {}
    nodes = chebyshev_nodes(m, map.interval, ctx)
    M = build_collocation_matrix(map, t, nodes, ctx, workers=opts.get("workers", 1))
    pair = leading_left_eigenpair(M, opts.get("tol"), opts.get("max_iter"), ctx)
    return values_to_coeffs(pair.vector, ctx, nodes.interval), pair


@validate_params(
    {
        "map": [MapSpec],
        "m": [Interval(Integral, 8, None, closed="left")],
        "ctx": [PrecisionContext],
        "opts": [dict, None],
    },
    prefer_skip_nested_validation=True,
)
def build_test_polynomial(map, t, m, ctx, opts=None):
    """Chebyshev expansion of the leading eigenfunction of ``M^t``.

    The node values are the left eigenvector (maximum 1); the result has
    degree ``m - 1`` on ``map.interval``.
    """
    poly, _ = _solve_eigenfunction(map, t, m, ctx, opts)
    return poly


@validate_params(
    {
        "map": [MapSpec],
        "m": [Interval(Integral, 8, None, closed="left")],
        "ctx": [PrecisionContext],
        "opts": [dict, None],
    },
    prefer_skip_nested_validation=True,
)
def invariant_density(map, m, ctx, opts=None):
    """Fixed point of L_1, normalized to integral 1 over the map interval."""
    p = build_test_polynomial(map, 1, m, ctx, opts)
    mass = integrate(p, ctx)
    if not mass > 0:
        raise PositivityError(f"density candidate has nonpositive integral {ctx.mp.nstr(mass, 10)}")
    return ChebPoly(coeffs=tuple(c / mass for c in p.coeffs), interval=p.interval)


def density_lyapunov(map, rho, ctx):
    """Lyapunov exponent as the integral of log|f'| against ``rho``.

    Changing variables on each monotone piece gives
    ``-int_I sum_i |f_i'| log|f_i'| rho(f_i) du``, which only needs inverse
    branches. Integrated by tanh-sinh quadrature.

    Returns
    -------
    QuadratureResult
        Value and the quadrature error estimate.
    """
    mp = ctx.mp
    a, b = map.interval_mpf(ctx)

    def integrand(u):
        total = mp.zero
        for br in map.branches:
            d = eval_branch_deriv_abs(br, u, 1, ctx)
            total += d * mp.log(d) * clenshaw_eval(rho, eval_branch(br, u, ctx), ctx)
        return -total

    value, error = mp.quad(integrand, [a, b], error=True)
    logger.info(f"Density Lyapunov exponent {mp.nstr(value, 20)} (quadrature error {mp.nstr(error, 5)})")
    return QuadratureResult(value=value, error=error)
