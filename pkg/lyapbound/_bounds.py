"""Certified sup bounds, pressure bounds and Lyapunov enclosures."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral

import numpy as np
from sklearn.utils._param_validation import Interval, validate_params, validate_parameter_constraints

from ._base import (
    CertificateError,
    CertificateViolationError,
    ConvergenceError,
    EnclosureError,
    MapSpecError,
    PositivityError,
    PrecisionContext,
    PrecisionError,
    _as_fraction,
    make_context,
)
from ._collocation import _solve_eigenfunction, apply_transfer
from .chebyshev_ops import GUARD_DIGITS, ChebPoly, _clenshaw, chebyshev_nodes, clenshaw_eval, values_to_coeffs
from .maps import MapSpec

logger = logging.getLogger(__name__)

DEFAULT_OPTIONS = {
    "refine_factor": 4,
    "grid_factor": 8,
    "tail_threshold": None,
    "tol": None,
    "max_iter": None,
    "workers": 1,
}

_option_constraints = {
    "refine_factor": [Interval(Integral, 1, None, closed="left")],
    "grid_factor": [Interval(Integral, 1, None, closed="left")],
    "tail_threshold": "no_validation",
    "tol": "no_validation",
    "max_iter": [Interval(Integral, 1, None, closed="left"), None],
    "workers": [Interval(Integral, 1, None, closed="left")],
}


@dataclass(frozen=True)
class SupCertificate:
    """Upper bound for the supremum of a function over the map interval.

    ``bound = dense_max + tail_pad``; ``dense_max`` is the largest value of
    the refined interpolant on the evaluation grid, rounded outward by a
    relative ``10^(-digits + 5)``.
    """

    bound: object
    dense_max: object
    tail_pad: object
    refine_degree: int
    tail_ratio: object


@dataclass(frozen=True)
class PressureBound:
    t: object
    rho: object
    certificate: SupCertificate
    poly_degree: int


@dataclass(frozen=True)
class LyapunovEnclosure:
    lower: object
    upper: object
    epsilon: object
    alpha: object
    beta: object
    m: int
    digits: int
    map_name: str
    certificates: tuple
    width: object
    eigenvalues: tuple = ()
    min_bounds: tuple = ()
    polynomials: tuple = ()


@dataclass(frozen=True)
class MonteCarloReport:
    max_ratio: object
    gap_to_certificate: object
    n_points: int
    trials: int
    seed: int
    generator: str = "PCG64"


def check_options(opts, ctx):
    """Merge ``opts`` over ``DEFAULT_OPTIONS`` and resolve context defaults.

    ``tail_threshold`` defaults to ``10^(-digits/2)`` and ``tol`` to
    ``10^(-digits + 20)``; both become context scalars.
    """
    opts = dict(opts or {})
    unknown = set(opts) - set(DEFAULT_OPTIONS)
    if unknown:
        raise ValueError(f"unknown options: {', '.join(sorted(unknown))}; valid are {', '.join(DEFAULT_OPTIONS)}")
    merged = {**DEFAULT_OPTIONS, **opts}
    validate_parameter_constraints(_option_constraints, merged, caller_name="check_options")
    if merged["tail_threshold"] is None:
        merged["tail_threshold"] = ctx.power_of_ten(-ctx.mp.mpf(ctx.digits) / 2)
    if merged["tol"] is None:
        merged["tol"] = ctx.guard(20)
    for key in ("tail_threshold", "tol"):
        merged[key] = ctx.mpf(merged[key])
        if not merged[key] > 0:
            raise ValueError(f"The option '{key}' should be positive, got {merged[key]}")
    return merged


###############################################################################
# Sup certificates


def _certify_sup(func, m, interval, opts, ctx):
    mp = ctx.mp
    refine_degree = opts["refine_factor"] * m
    nodes = chebyshev_nodes(refine_degree, interval, ctx)
    poly = values_to_coeffs([func(x) for x in nodes.mapped_nodes], ctx, nodes.interval)

    magnitudes = [abs(c) for c in poly.coeffs]
    tail = magnitudes[-max(1, refine_degree // 4) :]
    peak = max(magnitudes)
    tail_ratio = max(tail) / peak if peak > 0 else mp.zero
    if tail_ratio > opts["tail_threshold"]:
        raise CertificateError(
            f"insufficient analytic resolution; raise m or K (tail ratio {mp.nstr(tail_ratio, 5)} "
            f"> {mp.nstr(opts['tail_threshold'], 5)} at degree {refine_degree})"
        )
    tail_pad = 2 * mp.fsum(tail)

    n_grid = max(2, opts["grid_factor"] * refine_degree)
    dense_max = max(_clenshaw(poly.coeffs, mp.cospi(mp.mpf(i) / (n_grid - 1)), ctx) for i in range(n_grid))
    dense_max += abs(dense_max) * ctx.guard(GUARD_DIGITS)
    bound = dense_max + tail_pad
    logger.debug(
        f"Sup certificate: degree={refine_degree} dense_max={mp.nstr(dense_max, 20)} "
        f"tail_pad={mp.nstr(tail_pad, 5)} tail_ratio={mp.nstr(tail_ratio, 5)}"
    )
    return SupCertificate(
        bound=bound, dense_max=dense_max, tail_pad=tail_pad, refine_degree=refine_degree, tail_ratio=tail_ratio
    )


def certify_min_positive(p, opts, ctx):
    """Certified lower bound for min p over its interval; must be positive.

    Runs the sup certificate on ``-p``. Raises ``PositivityError`` when the
    bound is not positive and ``CertificateError`` on tail-decay failure.
    """
    if not any(p.coeffs):
        raise ValueError("certify_min_positive needs a nonzero polynomial")
    opts = check_options(opts, ctx)
    cert = _certify_sup(lambda x: -clenshaw_eval(p, x, ctx), len(p.coeffs), p.interval, opts, ctx)
    lower = -cert.bound
    if not lower > 0:
        raise PositivityError(f"test polynomial not certified positive (lower bound {ctx.mp.nstr(lower, 10)}); raise m")
    return lower


def sup_ratio(map, t, p, opts, ctx):
    """Certified upper bound for sup over I of [L_t p](x) / p(x).

    Parameters
    ----------
    map : MapSpec
    t : real
    p : ChebPoly
        Positive on ``map.interval``.
    opts : dict or None
        ``refine_factor`` K, ``grid_factor`` G and ``tail_threshold``.
    ctx : PrecisionContext

    Returns
    -------
    SupCertificate
    """
    opts = check_options(opts, ctx)
    t = ctx.mpf(t)

    def ratio(x):
        px = clenshaw_eval(p, x, ctx)
        if not px > 0:
            raise PositivityError(f"test polynomial is nonpositive at x={ctx.mp.nstr(x, 15)}")
        return apply_transfer(map, t, p, x, ctx) / px

    return _certify_sup(ratio, len(p.coeffs), map.interval_mpf(ctx), opts, ctx)


def pressure_log_bound(map, t, p, opts, ctx):
    """Upper bound rho >= P(t) from the sup ratio of the test polynomial."""
    cert = sup_ratio(map, t, p, opts, ctx)
    if not cert.bound > 0:
        raise PositivityError(f"sup ratio bound {ctx.mp.nstr(cert.bound, 10)} is not positive")
    rho = ctx.mp.log(cert.bound)
    logger.info(f"Pressure bound at t={ctx.mp.nstr(ctx.mpf(t), 12)}: rho={ctx.mp.nstr(rho, 20)}")
    return PressureBound(t=ctx.mpf(t), rho=rho, certificate=cert, poly_degree=p.degree)


###############################################################################
# Enclosure


def _exact_epsilon(epsilon, ctx):
    eps = _as_fraction(epsilon, "epsilon") if not hasattr(epsilon, "_mpf_") else None
    if eps is not None and not 0 < eps < 1:
        raise ValueError(f"The parameter 'epsilon' should be in (0, 1), but got {epsilon}")
    value = ctx.mpf(eps if eps is not None else epsilon)
    if not 0 < value < 1:
        raise ValueError(f"The parameter 'epsilon' should be in (0, 1), but got {epsilon}")
    return value


def required_digits(epsilon, ctx):
    """Smallest digit budget accepted for ``epsilon``: 2.5 (-log10 eps) + 30."""
    # rounded so that exact powers of ten land on whole digit counts
    return 2.5 * round(float(-ctx.mp.log10(epsilon)), 9) + 30


def _pressure_pipeline(map, t, m, opts, ctx):
    poly, pair = _solve_eigenfunction(map, t, m, ctx, opts)
    lower = certify_min_positive(poly, opts, ctx)
    return pressure_log_bound(map, t, poly, opts, ctx), pair.eigenvalue, lower, poly


@validate_params(
    {
        "map": [MapSpec],
        "m": [Interval(Integral, 8, None, closed="left")],
        "ctx": [PrecisionContext],
        "opts": [dict, None],
    },
    prefer_skip_nested_validation=True,
)
def lyapunov_enclosure(map, epsilon, m, ctx, opts=None):
    """Two-sided enclosure ``[alpha/eps, beta/eps]`` of the Lyapunov exponent.

    Test polynomials p (t = 1 + eps) and q (t = 1 - eps) come from the
    collocation eigenvectors; both must be certified positive. Then
    ``alpha = -log sup L_{1+eps}p/p`` and ``beta = log sup L_{1-eps}q/q``.

    Parameters
    ----------
    map : MapSpec
    epsilon : str, Fraction or float
        Converted exactly; floats go through their shortest repr.
    m : int
        Collocation nodes.
    ctx : PrecisionContext
        Needs at least ``2.5 (-log10 eps) + 30`` digits.
    opts : dict, optional
        See ``DEFAULT_OPTIONS``.

    Returns
    -------
    LyapunovEnclosure
    """
    mp = ctx.mp
    eps = _exact_epsilon(epsilon, ctx)
    needed = required_digits(eps, ctx)
    if ctx.digits < needed:
        raise PrecisionError(f"epsilon={mp.nstr(eps, 5)} needs at least {math.ceil(needed)} digits, got {ctx.digits}")
    floor = map.expansion_floor
    if floor is None or not floor > 1:
        raise MapSpecError(f"map {map.describe()} is not uniformly expanding (floor {floor})")
    if not map.mixing:
        logger.warning(f"map {map.describe()} is not asserted to be mixing; the enclosure assumes it is")
    opts = check_options(opts, ctx)

    ts = (1 + eps, 1 - eps)
    if opts["workers"] > 1:
        with ThreadPoolExecutor(max_workers=2) as executor:
            futures = [executor.submit(_pressure_pipeline, map, t, m, opts, ctx) for t in ts]
            results = [f.result() for f in futures]
    else:
        results = [_pressure_pipeline(map, t, m, opts, ctx) for t in ts]
    (plus, lam_plus, min_p, p), (minus, lam_minus, min_q, q) = results

    alpha, beta = -plus.rho, minus.rho
    if not (alpha > 0 and beta > 0):
        raise EnclosureError(
            f"epsilon too large for this m/digits: alpha={mp.nstr(alpha, 10)} beta={mp.nstr(beta, 10)}"
        )
    lower, upper = alpha / eps, beta / eps
    if lower > upper:
        raise CertificateError(f"inconsistent enclosure: lower {mp.nstr(lower, 20)} > upper {mp.nstr(upper, 20)}")
    logger.info(
        f"Enclosure for {map.describe()}: [{mp.nstr(lower, 25)}, {mp.nstr(upper, 25)}] "
        f"width={mp.nstr(upper - lower, 5)} (m={m}, digits={ctx.digits})"
    )
    return LyapunovEnclosure(
        lower=lower,
        upper=upper,
        epsilon=eps,
        alpha=alpha,
        beta=beta,
        m=m,
        digits=ctx.digits,
        map_name=map.describe(),
        certificates=(plus.certificate, minus.certificate),
        width=upper - lower,
        eigenvalues=(lam_plus, lam_minus),
        min_bounds=(min_p, min_q),
        polynomials=(p, q),
    )


@validate_params(
    {
        "map": [MapSpec],
        "target_digits": [Interval(Integral, 1, None, closed="left")],
        "ctx": [PrecisionContext, None],
        "opts": [dict, None],
        "m_start": [Interval(Integral, 8, None, closed="left")],
        "m_max": [Interval(Integral, 8, None, closed="left")],
    },
    prefer_skip_nested_validation=True,
)
def adaptive_enclosure(map, target_digits, ctx=None, opts=None, m_start=16, m_max=512):
    """Enclosure of width at most ``10^(-target_digits)``.

    Uses eps = 10^(-d) with ceil(2.5 d) + 30 digits (or ``ctx`` when it has
    more) and doubles m from ``m_start`` until the width target is met.
    """
    epsilon = Fraction(1, 10**target_digits)
    digits = math.ceil(2.5 * target_digits) + 30
    if ctx is None or ctx.digits < digits:
        ctx = make_context(digits)
    target = ctx.power_of_ten(-target_digits)
    m, last = m_start, None
    while m <= m_max:
        try:
            enclosure = lyapunov_enclosure(map, epsilon, m, ctx, opts)
        except (PositivityError, CertificateError, EnclosureError, ConvergenceError) as exc:
            logger.info(f"m={m} failed ({exc.reason}); doubling")
            last = exc
        else:
            if enclosure.width <= target:
                return enclosure
            logger.info(f"m={m} width {ctx.mp.nstr(enclosure.width, 5)} above target; doubling")
            last = enclosure
        m *= 2
    if isinstance(last, Exception):
        raise last
    raise CertificateError(
        f"width target 1e-{target_digits} not reached by m={m_max} (best width {ctx.mp.nstr(last.width, 5)})"
    )


###############################################################################
# Monte Carlo cross-check


def _open_unit_samples(rng, n):
    """``n`` uniform draws strictly inside (0, 1); endpoint draws are redrawn."""
    r = rng.uniform(0.0, 1.0, n)
    while True:
        bad = (r <= 0) | (r >= 1)
        if not bad.any():
            return r
        r[bad] = rng.uniform(0.0, 1.0, int(bad.sum()))


@validate_params(
    {
        "map": [MapSpec],
        "p": [ChebPoly],
        "n_points": [Interval(Integral, 1, None, closed="left")],
        "trials": [Interval(Integral, 1, None, closed="left")],
        "seed": [Interval(Integral, 0, None, closed="left")],
        "ctx": [PrecisionContext],
        "certificate": [SupCertificate, None],
        "opts": [dict, None],
    },
    prefer_skip_nested_validation=True,
)
def monte_carlo_check(map, t, p, n_points, trials, seed, ctx, certificate=None, opts=None):
    """Sample the ratio L_t p / p at seeded uniform points and compare with its certificate.

    Raises ``CertificateViolationError`` when any sample exceeds the
    certified bound.
    """
    mp = ctx.mp
    t = ctx.mpf(t)
    certificate = certificate or sup_ratio(map, t, p, opts, ctx)
    a, b = map.interval_mpf(ctx)
    rng = np.random.default_rng(seed)
    max_ratio = -mp.inf
    for _ in range(trials):
        for r in _open_unit_samples(rng, n_points):
            x = a + (b - a) * ctx.mpf(float(r))
            max_ratio = max(max_ratio, apply_transfer(map, t, p, x, ctx) / clenshaw_eval(p, x, ctx))
    gap = certificate.bound - max_ratio
    if gap < 0:
        raise CertificateViolationError(
            f"sampled ratio {mp.nstr(max_ratio, 25)} exceeds certified bound {mp.nstr(certificate.bound, 25)}"
        )
    logger.info(f"Monte Carlo: max ratio {mp.nstr(max_ratio, 20)}, gap {mp.nstr(gap, 5)}")
    return MonteCarloReport(max_ratio=max_ratio, gap_to_certificate=gap, n_points=n_points, trials=trials, seed=seed)
