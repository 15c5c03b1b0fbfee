"""Expanding full-branch interval maps described by their inverse branches."""

import hashlib
import logging
import re
import tomllib
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from numbers import Integral

import sympy
from sklearn.utils._param_validation import Interval, validate_params

from ._base import (
    CriticalPointError,
    DomainError,
    ExprSyntaxError,
    MapSpecError,
    PrecisionContext,
    WeakHyperbolicityWarning,
    _as_fraction,
    _check_interval,
    make_context,
)
from ._expr import X, Expr, parse_expr

logger = logging.getLogger(__name__)

BUILTINS = ("doubling", "lanford", "lanford_family", "bent_tent", "bent_baker", "linear")
DEFAULT_GRID_SIZE = 1024


@dataclass(frozen=True)
class Branch:
    """One inverse branch ``f_k: I -> I``.

    ``deriv_abs`` holds f_k' (its sign is dropped at evaluation). ``forward``
    is the piece of the forward map undoing this branch, when known.
    """

    inverse: Expr
    deriv_abs: Expr = field(compare=False)
    label: str = field(default="", compare=False)
    forward: Expr = field(default=None, compare=False)


@dataclass(frozen=True)
class ValidationReport:
    map_name: str
    grid_size: int
    expansion_floor: object
    branch_floors: tuple
    max_range_excess: object
    passed: bool
    messages: tuple = ()
    note: str = "grid-based check: certifies the grid points only"

    def summary(self):
        status = "pass" if self.passed else "fail"
        floors = ", ".join(sf(f) for f in self.branch_floors)
        return (
            f"map={self.map_name} grid={self.grid_size} status={status} "
            f"expansion_floor={sf(self.expansion_floor)} branch_floors=[{floors}] "
            f"max_range_excess={sf(self.max_range_excess)}"
        )


def sf(value, n=12):
    """Short display of a scalar (reporting only)."""
    if value is None:
        return "nan"
    return value.context.nstr(value, n) if hasattr(value, "_mpf_") else str(value)


@dataclass(frozen=True)
class MapSpec:
    """An expanding full-branch map on ``interval``.

    Two specs compare equal when their intervals and inverse branches agree;
    name, parameter and derivative expressions are descriptive.
    """

    interval: tuple
    branches: tuple
    name: str = field(default="custom", compare=False)
    parameter: object = field(default=None, compare=False)
    mixing: bool = field(default=True, compare=False)
    report: ValidationReport = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "interval", _check_interval(self.interval))
        object.__setattr__(self, "branches", tuple(self.branches))
        if len(self.branches) < 2:
            raise MapSpecError(f"map {self.name!r} needs at least 2 branches, got {len(self.branches)}")
        for b in self.branches:
            if not isinstance(b, Branch):
                raise MapSpecError(f"expected Branch, got {type(b).__name__}")

    @property
    def n_branches(self):
        return len(self.branches)

    @cached_property
    def expansion_floor(self):
        report = self.report or validate_map(self, DEFAULT_GRID_SIZE, make_context(30))
        return report.expansion_floor

    def interval_mpf(self, ctx):
        a, b = self.interval
        return ctx.mpf(a), ctx.mpf(b)

    def describe(self):
        if self.parameter is None:
            return self.name
        return f"{self.name}({self.parameter})"


###############################################################################
# Branch evaluation


def eval_branch(b, x, ctx):
    """f_k(x) at context precision."""
    return b.inverse.evaluate(x, ctx)


def eval_branch_deriv_abs(b, x, t, ctx):
    """|f_k'(x)|^t computed as exp(t log|f_k'(x)|)."""
    mp = ctx.mp
    d = b.deriv_abs.evaluate(x, ctx)
    if d == 0 or not mp.isfinite(d):
        raise CriticalPointError(
            f"branch {b.label or b.inverse} has derivative {mp.nstr(d, 10)} at x={mp.nstr(ctx.mpf(x), 15)}"
        )
    return mp.exp(ctx.mpf(t) * mp.log(abs(d)))


def eval_forward(b, y, ctx):
    if b.forward is None:
        raise MapSpecError(f"branch {b.label or b.inverse} has no forward expression")
    return b.forward.evaluate(y, ctx)


###############################################################################
# Validation


@validate_params(
    {
        "spec": [MapSpec],
        "grid_size": [Interval(Integral, 64, None, closed="left")],
        "ctx": [PrecisionContext],
    },
    prefer_skip_nested_validation=True,
)
def validate_map(spec, grid_size, ctx):
    """Check contraction and range of every branch on an equispaced grid.

    Parameters
    ----------
    spec : MapSpec
    grid_size : int
        Number of grid points, endpoints included.
    ctx : PrecisionContext

    Returns
    -------
    ValidationReport
        ``expansion_floor`` is the minimum over branches and grid points of
        1/|f_k'|; the report passes when it exceeds 1 and every branch image
        stays in the interval up to rounding.
    """
    mp = ctx.mp
    a, b = spec.interval_mpf(ctx)
    tol = ctx.guard(10)
    grid = [a + (b - a) * i / (grid_size - 1) for i in range(grid_size)]
    messages = []
    floors = []
    excess = mp.zero
    for k, branch in enumerate(spec.branches):
        label = branch.label or f"branch {k + 1}"
        floor = mp.inf
        for x in grid:
            try:
                y = eval_branch(branch, x, ctx)
                d = abs(branch.deriv_abs.evaluate(x, ctx))
            except DomainError as exc:
                messages.append(f"{label}: {exc}")
                floor = None
                break
            excess = max(excess, a - y, y - b)
            floor = min(floor, 1 / d) if d > 0 else floor
            if d == 0:
                messages.append(f"{label}: derivative vanishes at x={mp.nstr(x, 15)}")
        floors.append(floor)
    valid_floors = [f for f in floors if f is not None]
    expansion_floor = min(valid_floors) if len(valid_floors) == len(floors) else None
    if expansion_floor is not None and expansion_floor <= 1:
        messages.append(f"not expanding: expansion floor {mp.nstr(expansion_floor, 15)} <= 1")
    if excess > tol:
        messages.append(f"branch images leave the interval by {mp.nstr(excess, 15)}")
    passed = not messages
    report = ValidationReport(
        map_name=spec.describe(),
        grid_size=grid_size,
        expansion_floor=expansion_floor,
        branch_floors=tuple(floors),
        max_range_excess=excess,
        passed=passed,
        messages=tuple(messages),
    )
    logger.info(report.summary())
    return report


def certify_map(spec, grid_size=DEFAULT_GRID_SIZE, ctx=None):
    """Return ``spec`` with a passing validation report attached."""
    report = validate_map(spec, grid_size, ctx or make_context(30))
    if not report.passed:
        raise MapSpecError(f"map {spec.describe()} failed validation: " + "; ".join(report.messages))
    return replace(spec, report=report)


###############################################################################
# Built-in maps


def _branch(inverse, deriv, forward, label, params=None):
    def as_expr(value):
        if isinstance(value, str):
            return parse_expr(value, params)
        return Expr(sympy.sympify(value))

    return Branch(inverse=as_expr(inverse), deriv_abs=as_expr(deriv), label=label, forward=as_expr(forward))


def _linear(n, name):
    branches = [
        _branch(f"(x + {k})/{n}", f"1/{n}", f"{n}*x - {k}", f"f{k + 1}")
        for k in range(n)
    ]
    return MapSpec((0, 1), branches, name=name, parameter=None if name == "doubling" else n)


def _lanford():
    branches = [
        _branch("(5 - sqrt(25 - 8*x))/2", "2/sqrt(25 - 8*x)", "2*x + x*(1 - x)/2", "f1"),
        _branch("(5 - sqrt(17 - 8*x))/2", "2/sqrt(17 - 8*x)", "2*x + x*(1 - x)/2 - 1", "f2"),
    ]
    return MapSpec((0, 1), branches, name="lanford")


def _lanford_family(c):
    if c == 0:
        spec = _linear(2, "lanford_family")
        return replace(spec, parameter=c)
    params = {"c": c}
    branches = [
        _branch(
            "(2 + c - sqrt((2 + c)^2 - 4*c*x))/(2*c)",
            "1/sqrt((2 + c)^2 - 4*c*x)",
            "2*x + c*x*(1 - x)",
            "f1",
            params,
        ),
        _branch(
            "(2 + c - sqrt((2 + c)^2 - 4*c*(x + 1)))/(2*c)",
            "1/sqrt((2 + c)^2 - 4*c*(x + 1))",
            "2*x + c*x*(1 - x) - 1",
            "f2",
            params,
        ),
    ]
    return MapSpec((0, 1), branches, name="lanford_family", parameter=c)


def _bent_tent(c):
    params = {"c": c}
    branches = [
        _branch(
            "(1 - x)/(2*c*x + 2*(c + 1))",
            "-(1 + 2*c)/(2*(1 + c + c*x)^2)",
            "(1 - 2*(c + 1)*x)/(1 + 2*c*x)",
            "f1",
            params,
        ),
        _branch(
            "-(1 - x)/(2*c*x + 2*(c + 1))",
            "(1 + 2*c)/(2*(1 + c + c*x)^2)",
            "(1 + 2*(c + 1)*x)/(1 - 2*c*x)",
            "f2",
            params,
        ),
    ]
    return MapSpec((-1, 1), branches, name="bent_tent", parameter=c)


def _bent_baker():
    # Forward map g(x) = a x^3 - 2 sqrt6 x^2 + (2 + 2 sqrt6/3) x mod 1 with a = 4 sqrt6/3.
    # With y = x - 1/2, g = 1 + a y^3 + s y, s = g'(1/2) = 2 - sqrt6/3; each inverse
    # solves the depressed cubic a y^3 + s y = w by Cardano (one real root).
    a = 4 * sympy.sqrt(6) / 3
    s = 2 - sympy.sqrt(6) / 3
    p = s / a
    half = sympy.Rational(1, 2)
    g = a * X**3 - 2 * sympy.sqrt(6) * X**2 + (2 + 2 * sympy.sqrt(6) / 3) * X
    branches = []
    for k, w in enumerate((X - 1, X)):
        root = sympy.Pow(w / (2 * a) + sympy.sqrt(w**2 / (4 * a**2) + p**3 / 27), sympy.Rational(1, 3))
        y = root - p / (3 * root)
        branches.append(_branch(half + y, 1 / (3 * a * y**2 + s), g - k, f"f{k + 1}"))
    return MapSpec((0, 1), branches, name="bent_baker")


def _param(params, key, name):
    if not params or key not in params:
        raise MapSpecError(f"built-in map {name!r} requires parameter {key!r}")
    return _as_fraction(params[key], key)


def builtin(name, params=None):
    """One of the built-in maps.

    Parameters
    ----------
    name : str
        ``doubling``, ``lanford``, ``lanford_family`` (parameter ``c`` with
        0 <= c < 1; c = 0 is the doubling map), ``bent_tent`` (``c`` with
        -1/4 <= c <= 1/2, defined on [-1, 1]), ``bent_baker`` or ``linear``
        (parameter ``n`` >= 2 branches of slope n).
    params : dict, optional

    Returns
    -------
    MapSpec
    """
    if name == "doubling":
        return _linear(2, "doubling")
    if name == "lanford":
        return _lanford()
    if name == "bent_baker":
        return _bent_baker()
    if name == "linear":
        n = _param(params, "n", name)
        if n.denominator != 1 or n < 2:
            raise MapSpecError(f"The parameter 'n' of 'linear' should be an integer >= 2, got {n}")
        return _linear(int(n), "linear")
    if name == "lanford_family":
        c = _param(params, "c", name)
        if not 0 <= c < 1:
            raise MapSpecError(f"The parameter 'c' of 'lanford_family' should be in [0, 1), got {c}")
        if c > Fraction(96, 100):
            warnings.warn(
                f"lanford_family with c={float(c)} is weakly hyperbolic", WeakHyperbolicityWarning, stacklevel=2
            )
        return _lanford_family(c)
    if name == "bent_tent":
        c = _param(params, "c", name)
        if not Fraction(-1, 4) <= c <= Fraction(1, 2):
            raise MapSpecError(f"The parameter 'c' of 'bent_tent' should be in [-1/4, 1/2], got {c}")
        if c < Fraction(-24, 100) or c > Fraction(45, 100):
            warnings.warn(f"bent_tent with c={float(c)} is weakly hyperbolic", WeakHyperbolicityWarning, stacklevel=2)
        return _bent_tent(c)
    raise MapSpecError(f"unknown built-in map {name!r}; choose from {', '.join(BUILTINS)}")


###############################################################################
# Configuration files

_TOP_KEYS = {"name", "interval", "mixing", "parameter", "branch"}
_BRANCH_KEYS = {"inverse", "deriv_abs", "label", "forward"}
_TOML_POSITION = re.compile(r"\(at line (\d+), column (\d+)\)")


def parse_map_spec(source):
    """Build a :class:`MapSpec` from TOML text.

    Example::

        name = "lanford"
        interval = [0, 1]

        [[branch]]
        inverse = "(5 - sqrt(25 - 8*x))/2"

        [[branch]]
        inverse = "(5 - sqrt(17 - 8*x))/2"

    ``deriv_abs`` is derived symbolically from ``inverse`` when omitted;
    ``[parameter] c = ...`` binds ``c`` in every expression.
    """
    try:
        doc = tomllib.loads(source)
    except tomllib.TOMLDecodeError as exc:
        match = _TOML_POSITION.search(str(exc))
        line, column = (int(match.group(1)), int(match.group(2))) if match else (1, 1)
        raise ExprSyntaxError(_TOML_POSITION.sub("", str(exc)).strip(), line, column)

    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise MapSpecError(f"unknown map config keys: {', '.join(sorted(unknown))}")
    if "interval" not in doc:
        raise MapSpecError("map config is missing 'interval'")

    params = doc.get("parameter") or {}
    if set(params) - {"c"}:
        raise MapSpecError(f"only parameter 'c' is supported, got {', '.join(sorted(params))}")
    params = {k: _as_fraction(v, k) for k, v in params.items()}

    raw_branches = doc.get("branch", [])
    if len(raw_branches) < 2:
        raise MapSpecError(f"map config needs at least 2 branches, got {len(raw_branches)}")
    branches = [_parse_branch(k, raw, params) for k, raw in enumerate(raw_branches)]

    mixing = doc.get("mixing", True)
    if not isinstance(mixing, bool):
        raise MapSpecError(f"'mixing' should be true or false, got {mixing!r}")
    return MapSpec(
        interval=tuple(doc["interval"]),
        branches=branches,
        name=str(doc.get("name", "custom")),
        parameter=params.get("c"),
        mixing=mixing,
    )


def _parse_branch(k, raw, params):
    unknown = set(raw) - _BRANCH_KEYS
    if unknown:
        raise MapSpecError(f"branch {k + 1}: unknown keys {', '.join(sorted(unknown))}")
    if "inverse" not in raw:
        raise MapSpecError(f"branch {k + 1}: missing 'inverse'")
    try:
        inverse = parse_expr(raw["inverse"], params)
        deriv = parse_expr(raw["deriv_abs"], params) if "deriv_abs" in raw else inverse.diff()
        forward = parse_expr(raw["forward"], params) if "forward" in raw else None
    except ExprSyntaxError as exc:
        raise ExprSyntaxError(f"branch {k + 1}: {exc.message}", exc.line, exc.column, exc.source)
    return Branch(inverse=inverse, deriv_abs=deriv, label=str(raw.get("label", f"f{k + 1}")), forward=forward)


def load_map_config(path):
    """Read a map config file; returns ``(MapSpec, sha256 hex digest of the file)``."""
    with open(path, "rb") as fp:
        content = fp.read()
    digest = hashlib.sha256(content).hexdigest()
    spec = parse_map_spec(content.decode("utf-8"))
    logger.info(f"Loaded map {spec.describe()} from {path} (sha256 {digest[:12]})")
    return spec, digest
