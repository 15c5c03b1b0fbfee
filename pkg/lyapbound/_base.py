"""Precision context, error hierarchy and shared checks."""

from fractions import Fraction
from numbers import Integral

import mpmath
import sympy
from sklearn.utils._param_validation import Interval, validate_params

MIN_DIGITS = 30


###############################################################################
# Errors


class LyapBoundError(Exception):
    """Base class for every failure the pipeline reports.

    ``reason`` is a stable machine-readable key and ``exit_code`` is the
    status the command-line front end exits with.
    """

    reason = "error"
    exit_code = 1


class MapSpecError(LyapBoundError, ValueError):
    reason = "map_spec"
    exit_code = 2


class ExprSyntaxError(MapSpecError):
    reason = "syntax"

    def __init__(self, message, line=1, column=1, source=""):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        super().__init__(f"{message} at line {line}, column {column}" + (f" in {source!r}" if source else ""))


class PrecisionError(LyapBoundError, ValueError):
    reason = "precision_refusal"
    exit_code = 3


class PositivityError(LyapBoundError, ArithmeticError):
    reason = "positivity_failure"
    exit_code = 4


class CertificateError(LyapBoundError, ArithmeticError):
    reason = "certificate_refused"
    exit_code = 5


class ConvergenceError(LyapBoundError, ArithmeticError):
    reason = "non_convergence"
    exit_code = 6

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class EnclosureError(LyapBoundError, ArithmeticError):
    reason = "epsilon_too_large"
    exit_code = 7


class CertificateViolationError(LyapBoundError, AssertionError):
    reason = "certificate_violation"
    exit_code = 8


class DomainError(LyapBoundError, ValueError):
    reason = "domain_error"
    exit_code = 9


class OutOfRangeError(DomainError):
    pass


class CriticalPointError(DomainError):
    pass


class ValidationFailedError(LyapBoundError):
    reason = "validation_failed"
    exit_code = 10


class SweepFailedError(LyapBoundError):
    reason = "sweep_failed"
    exit_code = 11


class WeakHyperbolicityWarning(UserWarning):
    """Parameter lies where the map is only weakly expanding."""


###############################################################################
# Precision context


class PrecisionContext:
    """Decimal-digit budget for all arithmetic of one computation.

    Each context owns a private :class:`mpmath.MPContext`, so scalars made
    through ``ctx.mp`` carry ``digits`` significant digits regardless of what
    other contexts (or threads) are doing.

    Parameters
    ----------
    digits : int
        Decimal significant digits, at least ``MIN_DIGITS``.
    """

    __slots__ = ("digits", "mp")

    def __init__(self, digits):
        mp = mpmath.MPContext()
        mp.dps = int(digits)
        object.__setattr__(self, "digits", int(digits))
        object.__setattr__(self, "mp", mp)

    def __setattr__(self, name, value):
        raise AttributeError("PrecisionContext is immutable")

    def __reduce__(self):
        return (PrecisionContext, (self.digits,))

    def __eq__(self, other):
        return isinstance(other, PrecisionContext) and other.digits == self.digits

    def __hash__(self):
        return hash(("PrecisionContext", self.digits))

    def __repr__(self):
        return f"PrecisionContext(digits={self.digits})"

    def mpf(self, value):
        """Convert ``value`` to a scalar of this context.

        Accepts ints, decimal strings, ``Fraction``, sympy rationals, floats
        and scalars of any mpmath context.
        """
        mp = self.mp
        if isinstance(value, (Fraction, sympy.Rational)):
            num, den = (value.numerator, value.denominator) if isinstance(value, Fraction) else (value.p, value.q)
            return mp.mpf(int(num)) / int(den)
        if isinstance(value, sympy.Expr):
            raise TypeError(f"cannot convert symbolic value {value} without evaluation")
        if isinstance(value, str):
            return mp.mpf(value.strip())
        return mp.mpf(value)

    def power_of_ten(self, k):
        return self.mp.mpf(10) ** k

    def guard(self, g=5):
        """Tolerance ``10^(-digits + g)``."""
        return self.power_of_ten(-self.digits + g)

    def to_digits(self, x):
        """Full-precision decimal digit string (deterministic)."""
        return self.mp.nstr(self.mpf(x), self.digits, strip_zeros=False)


@validate_params(
    {"digits": [Interval(Integral, MIN_DIGITS, None, closed="left")]},
    prefer_skip_nested_validation=True,
)
def make_context(digits):
    """Create a :class:`PrecisionContext` with ``digits`` decimal digits.

    Below ``MIN_DIGITS`` the logarithm of quantities within O(epsilon) of 1
    keeps no meaningful digits, so such budgets are rejected.
    """
    return PrecisionContext(digits)


###############################################################################
# Shared checks


def _check_interval(interval, name="interval"):
    """Validate an ``(a, b)`` pair and return it as exact ``Fraction``s."""
    try:
        a, b = interval
    except (TypeError, ValueError):
        raise MapSpecError(f"The parameter '{name}' should be a pair (a, b), but got {interval!r}")
    a, b = _as_fraction(a, name), _as_fraction(b, name)
    if not a < b:
        raise MapSpecError(f"The parameter '{name}' should satisfy a < b, but got [{a}, {b}]")
    return a, b


def _as_fraction(value, name="value"):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, bool):
        raise MapSpecError(f"The parameter '{name}' should be numeric, but got {value!r}")
    if isinstance(value, (int, str)):
        try:
            return Fraction(value.strip() if isinstance(value, str) else value)
        except ValueError:
            raise MapSpecError(f"The parameter '{name}' should be numeric, but got {value!r}")
    if isinstance(value, float):
        return Fraction(repr(value))
    raise MapSpecError(f"The parameter '{name}' should be numeric, but got {value!r}")
