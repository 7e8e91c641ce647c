"""Input validation helpers used by every estimator and operation."""

import numbers

import numpy as np

from .exceptions import ParameterError, ValidationError


def as_matrix(X, name="X", *, allow_1d=False):
    """Coerce to a finite float64 2-D array.

    Raises ValidationError on non-finite entries or wrong dimensionality.
    """
    X = np.asarray(X, dtype=np.float64)
    if allow_1d and X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got ndim={X.ndim}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValidationError(f"{name} must have at least one row and column, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError(f"{name} contains non-finite entries")
    return X


def check_square(A, name="A"):
    A = as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {A.shape}")
    return A


def check_symmetric(A, name="A", tol=1e-10):
    """Validate symmetry within an absolute tolerance scaled by the matrix magnitude."""
    A = check_square(A, name)
    scale = max(1.0, float(np.abs(A).max()))
    if np.abs(A - A.T).max() > tol * scale:
        raise ValidationError(f"{name} is not symmetric within tolerance {tol}")
    return A


def check_distance_matrix(D, name="D"):
    """Validate a dense distance matrix: symmetric, zero diagonal, nonnegative."""
    D = check_symmetric(D, name, tol=1e-8)
    if np.abs(np.diag(D)).max() > 1e-9 * max(1.0, float(D.max())):
        raise ValidationError(f"{name} must have a zero diagonal")
    if D.min() < 0:
        raise ValidationError(f"{name} must be nonnegative")
    return D


def check_count(value, name, minimum=1, maximum=None):
    if not isinstance(value, numbers.Integral):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ParameterError(f"{name} must be <= {maximum}, got {value}")
    return value


def rng_from_seed(seed):
    """Seeded generator; estimators derive all randomness from this."""
    if not isinstance(seed, numbers.Integral):
        raise ParameterError(f"seed must be an integer, got {seed!r}")
    return np.random.default_rng(int(seed))
