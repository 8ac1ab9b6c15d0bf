"""Input validation helpers used at the public boundaries of every module.

The conventions mirror scikit-learn's ``check_array`` style: helpers coerce
to ``float64`` ndarrays, validate the stated contract, and raise ``ValueError``
with the offending shapes/values in the message.
"""

import numpy as np


def check_grid(data, name: str = "grid", ndim=None) -> np.ndarray:
    """Coerce to a dense float64 grid and validate finiteness and rank.

    Grids are dense row-major arrays of rank 1..3. ``ndim`` may be an int or
    a tuple of admissible ranks.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    if arr.ndim not in (1, 2, 3):
        raise ValueError(f"{name} must have rank 1, 2 or 3, got rank {arr.ndim}")
    if ndim is not None:
        allowed = (ndim,) if isinstance(ndim, int) else tuple(ndim)
        if arr.ndim not in allowed:
            raise ValueError(f"{name} must have rank in {allowed}, got rank {arr.ndim}")
    check_finite(arr, name)
    return arr


def check_finite(arr: np.ndarray, name: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        raise ValueError(f"{name} contains {bad} non-finite values")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, op: str = "operation") -> None:
    if a.shape != b.shape:
        raise ValueError(f"{op} requires identical shapes, got {a.shape} and {b.shape}")


def check_coord(coord, ndim: int) -> np.ndarray:
    """Coerce a normalized grid coordinate; out-of-range values are *not* an error
    (samplers clamp), but the dimensionality must match."""
    c = np.atleast_1d(np.asarray(coord, dtype=np.float64))
    if c.shape != (ndim,):
        raise ValueError(f"coordinate must have {ndim} components, got shape {c.shape}")
    check_finite(c, "coordinate")
    return c


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return value


def check_image(img, name: str = "image") -> np.ndarray:
    """An image is an (H, W, 3) float array; values are expected in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    check_finite(arr, name)
    return arr


def check_unit_vector(v, name: str = "direction", tol: float = 1e-9) -> np.ndarray:
    vec = np.asarray(v, dtype=np.float64).reshape(3)
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"{name} must be unit length within {tol}, got norm {norm!r}")
    return vec
