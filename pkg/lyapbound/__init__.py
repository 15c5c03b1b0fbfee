"""
The :mod:`lyapbound` package computes certified enclosures of Lyapunov
exponents of expanding full-branch interval maps.
"""

__version__ = "0.3.0"

from ._base import (
    CertificateError,
    CertificateViolationError,
    ConvergenceError,
    CriticalPointError,
    DomainError,
    EnclosureError,
    ExprSyntaxError,
    LyapBoundError,
    MapSpecError,
    OutOfRangeError,
    PositivityError,
    PrecisionContext,
    PrecisionError,
    WeakHyperbolicityWarning,
    make_context,
)
from ._bounds import (
    LyapunovEnclosure,
    PressureBound,
    SupCertificate,
    adaptive_enclosure,
    certify_min_positive,
    lyapunov_enclosure,
    monte_carlo_check,
    pressure_log_bound,
    sup_ratio,
)
from ._collocation import (
    CollocationMatrix,
    EigenPair,
    apply_transfer,
    build_collocation_matrix,
    build_test_polynomial,
    density_lyapunov,
    invariant_density,
    leading_left_eigenpair,
)
from .maps import (
    Branch,
    MapSpec,
    builtin,
    certify_map,
    eval_branch,
    eval_branch_deriv_abs,
    load_map_config,
    parse_map_spec,
    validate_map,
)
from .utils import sweep

__all__ = [
    "make_context",
    "PrecisionContext",
    "builtin",
    "parse_map_spec",
    "load_map_config",
    "certify_map",
    "validate_map",
    "eval_branch",
    "eval_branch_deriv_abs",
    "Branch",
    "MapSpec",
    "apply_transfer",
    "build_collocation_matrix",
    "leading_left_eigenpair",
    "build_test_polynomial",
    "invariant_density",
    "density_lyapunov",
    "CollocationMatrix",
    "EigenPair",
    "certify_min_positive",
    "sup_ratio",
    "pressure_log_bound",
    "lyapunov_enclosure",
    "adaptive_enclosure",
    "monte_carlo_check",
    "sweep",
    "SupCertificate",
    "PressureBound",
    "LyapunovEnclosure",
    "LyapBoundError",
    "MapSpecError",
    "ExprSyntaxError",
    "PrecisionError",
    "PositivityError",
    "CertificateError",
    "ConvergenceError",
    "EnclosureError",
    "CertificateViolationError",
    "DomainError",
    "OutOfRangeError",
    "CriticalPointError",
    "WeakHyperbolicityWarning",
    "chebyshev_ops",
    "ulam",
    "utils",
]
