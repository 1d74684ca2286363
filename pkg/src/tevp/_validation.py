"""Small input-validation helpers used across the package."""
import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import DomainError


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be positive and finite, got {value}")
    return value


def check_wavenumber(kappa):
    return check_positive(kappa, "kappa")


def check_contrast(Q):
    """Validate the refractive index contrast; Q = 1 is degenerate."""
    Q = check_positive(Q, "Q")
    if abs(Q - 1.0) < 1e-12:
        raise DomainError("Q = 1 is degenerate (no contrast)")
    return Q


def check_epsilon(eps, upper=1.0):
    if not isinstance(eps, numbers.Real) or not 0.0 <= float(eps) < upper:
        raise DomainError(f"epsilon must lie in [0, {upper}), got {eps!r}")
    return float(eps)


def check_dimension(d):
    if d not in (2, 3):
        raise DomainError(f"dimension must be 2 or 3, got {d!r}")
    return int(d)


def check_points(points, d):
    """Return ``points`` as a float array of shape (n, d)."""
    pts = check_array(np.atleast_2d(np.asarray(points, dtype=float)), ensure_2d=True)
    if pts.shape[1] != d:
        raise DomainError(f"points must have {d} columns, got shape {pts.shape}")
    return pts


def check_kappa_range(kappa_range):
    lo, hi = (float(v) for v in kappa_range)
    if not (0 < lo < hi and np.isfinite(hi)):
        raise DomainError(f"invalid kappa range {kappa_range!r}")
    return lo, hi
