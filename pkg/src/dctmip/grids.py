"""Dense 1-D/2-D/3-D value grids: elementwise arithmetic and multilinear sampling.

A grid is a plain row-major ndarray (last axis fastest) of rank 1..3 holding
finite real feature values; ``validation.check_grid`` is the admission test.
Layout is fixed row-major so serialized grids (see ``container``) are portable.

Grids are treated as immutable after construction. The optimizer mutates its
parameter tensors in place between rendering passes; concurrent reads are safe,
reads concurrent with such updates are forbidden by contract.
"""

import numpy as np

from .validation import check_coord, check_finite, check_grid, check_same_shape


def elementwise_mul(a, b) -> np.ndarray:
    """Elementwise product ``c[i] = a[i] * b[i]`` of two equally shaped grids."""
    ga = check_grid(a, "left operand")
    gb = check_grid(b, "right operand")
    check_same_shape(ga, gb, "elementwise_mul")
    with np.errstate(over="ignore"):  # overflow surfaces as a non-finite error below
        out = ga * gb
    return check_finite(out, "elementwise_mul result")


def lerp_sample(grid, coord) -> float:
    """Multilinear interpolation of ``grid`` at a normalized coordinate.

    ``coord`` lives in [0, 1]^d with 0 at the first node and 1 at the last node
    of each axis; out-of-range components clamp to the boundary (rays may graze
    the bounding box, so this is not an error). A coordinate on a node returns
    that node value exactly. Extents must be >= 2 per axis.
    """
    g = check_grid(grid, "grid")
    c = check_coord(coord, g.ndim)
    if any(n < 2 for n in g.shape):
        raise ValueError(f"lerp_sample requires extents >= 2 per axis, got {g.shape}")

    c = np.clip(c, 0.0, 1.0)
    # continuous index per axis, node i at i / (n - 1)
    pos = c * (np.asarray(g.shape, dtype=np.float64) - 1.0)
    lo = np.minimum(pos.astype(np.int64), np.asarray(g.shape) - 2)
    frac = pos - lo

    value = 0.0
    for corner in range(2 ** g.ndim):
        idx = []
        weight = 1.0
        for axis in range(g.ndim):
            bit = (corner >> axis) & 1
            idx.append(lo[axis] + bit)
            weight *= frac[axis] if bit else (1.0 - frac[axis])
        value += weight * g[tuple(idx)]
    return float(value)


def lerp_sample_many(grid, coords) -> np.ndarray:
    """Vectorized ``lerp_sample`` over an (M, d) coordinate array."""
    g = check_grid(grid, "grid")
    pts = np.asarray(coords, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != g.ndim:
        raise ValueError(f"coords must have shape (M, {g.ndim}), got {pts.shape}")
    if any(n < 2 for n in g.shape):
        raise ValueError(f"lerp_sample requires extents >= 2 per axis, got {g.shape}")

    pts = np.clip(pts, 0.0, 1.0)
    pos = pts * (np.asarray(g.shape, dtype=np.float64) - 1.0)
    lo = np.minimum(pos.astype(np.int64), np.asarray(g.shape) - 2)
    frac = pos - lo

    out = np.zeros(pts.shape[0], dtype=np.float64)
    for corner in range(2 ** g.ndim):
        idx = []
        weight = np.ones(pts.shape[0], dtype=np.float64)
        for axis in range(g.ndim):
            bit = (corner >> axis) & 1
            idx.append(lo[:, axis] + bit)
            weight = weight * (frac[:, axis] if bit else 1.0 - frac[:, axis])
        out += weight * g[tuple(idx)]
    return out
