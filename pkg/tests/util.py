"""Reference values and small helpers shared by the tests."""

from lyapbound.chebyshev_ops import ChebPoly

# Published Lyapunov exponents (leading digits).
LANFORD = "0.65766178000659767754158241382383206574324"
LANFORD_FAMILY_QUARTER = "0.68510206857610906837894112063533684747"
BENT_TENT_011 = "0.68493332722256432968562254664822305"
BENT_BAKER = "0.649463149320698529076"
BENT_BAKER_FROYLAND = "0.64946"


def constant_poly(ctx, interval, value=1, m=1):
    """``value`` as a degree ``m - 1`` Chebyshev expansion on ``interval``."""
    coeffs = (ctx.mpf(value),) + tuple(ctx.mp.zero for _ in range(m - 1))
    return ChebPoly(coeffs=coeffs, interval=(ctx.mpf(interval[0]), ctx.mpf(interval[1])))


def close(a, b, tol):
    return abs(a - b) <= tol


def contains(enclosure, value, ctx, slack=0):
    value = ctx.mpf(value)
    return enclosure.lower - slack <= value <= enclosure.upper + slack


def slope_one_config():
    return """
name = "slope_one"
interval = [0, 1]

[[branch]]
inverse = "x/2"

[[branch]]
inverse = "x"
"""


LANFORD_CONFIG = """
name = "lanford"
interval = [0, 1]

[[branch]]
inverse = "(5 - sqrt(25 - 8*x))/2"
label = "left"

[[branch]]
inverse = "(5 - sqrt(17 - 8*x))/2"
label = "right"
"""
