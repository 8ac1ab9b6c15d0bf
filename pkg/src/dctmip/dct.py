"""Orthonormal DCT-II (forward) and DCT-III (inverse) in 1-D and separably in 2-D.

The orthonormal normalization (sqrt(1/N) for k=0, sqrt(2/N) otherwise) makes the
transform matrix orthogonal, so forward and inverse are transposes of one
another: energy is preserved and the adjoint of the inverse transform is the
forward transform, which is the gradient rule the trainer relies on.

Coefficient index (0, ..., 0) is the DC term; increasing index means increasing
spatial frequency. A frequency grid has the same extents as the spatial grid it
transforms. All functions here are pure and thread-safe.
"""

from functools import lru_cache

import numpy as np

from .validation import check_grid


@lru_cache(maxsize=64)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix C with C[k, m] = s_k cos(pi k (2m+1) / (2n)).

    C is orthogonal: C @ C.T == I. Forward transform of a column vector x is
    C @ x; the inverse is C.T @ X.
    """
    if n < 1:
        raise ValueError(f"transform size must be >= 1, got {n}")
    k = np.arange(n)[:, None].astype(np.float64)
    m = np.arange(n)[None, :].astype(np.float64)
    mat = np.cos(np.pi * k * (2.0 * m + 1.0) / (2.0 * n))
    mat *= np.sqrt(2.0 / n)
    mat[0, :] *= np.sqrt(0.5)
    mat.setflags(write=False)
    return mat


def dct_forward(grid) -> np.ndarray:
    """Orthonormal DCT-II of a 1-D or 2-D grid, applied separably in 2-D."""
    g = check_grid(grid, "grid", ndim=(1, 2))
    if g.ndim == 1:
        return dct_matrix(g.shape[0]) @ g
    # rows then columns; the two orderings commute
    return dct_matrix(g.shape[0]) @ g @ dct_matrix(g.shape[1]).T


def dct_inverse(freq) -> np.ndarray:
    """Inverse of ``dct_forward`` (orthonormal DCT-III)."""
    f = check_grid(freq, "frequency grid", ndim=(1, 2))
    if f.ndim == 1:
        return dct_matrix(f.shape[0]).T @ f
    return dct_matrix(f.shape[0]).T @ f @ dct_matrix(f.shape[1])
