"""Input validation helpers used at every public entry point."""

import numpy as np

from .errors import ShapeMismatch

SYMMETRY_TOL = 1e-12


def as_matrix(value, name="matrix"):
    """Coerce to a 2-D float array with finite entries."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ShapeMismatch(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def as_vector(value, name="vector"):
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size == 0:
        raise ShapeMismatch(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def check_square(arr, name="matrix"):
    if arr.shape[0] != arr.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got {arr.shape}")
    return arr


def check_same_shape(a, b, name_a="first", name_b="second"):
    if a.shape != b.shape:
        raise ShapeMismatch(
            f"{name_a} {a.shape} and {name_b} {b.shape} must have equal shapes")


def check_symmetric(arr, name="matrix", tol=SYMMETRY_TOL):
    check_square(arr, name)
    scale = max(1.0, float(np.abs(arr).max()))
    if np.abs(arr - arr.T).max() > tol * scale:
        raise ValueError(f"{name} is not symmetric to tolerance {tol}")
    return 0.5 * (arr + arr.T)


def check_spd(arr, name="matrix", tol=SYMMETRY_TOL):
    """Symmetric positive definite check; returns the symmetrized matrix."""
    sym = check_symmetric(arr, name, tol)
    if np.min(np.linalg.eigvalsh(sym)) <= 0:
        raise ValueError(f"{name} must be positive definite")
    return sym


def check_binary(arr, name="indicator"):
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise ValueError(f"{name} entries must be 0 or 1")
    return arr
