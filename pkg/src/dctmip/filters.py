"""Anti-aliasing core: scale-specific Gaussian low-pass filters and frequency masks.

Per scale the pipeline is: shared frequency grid -> Gaussian top-left low-pass
filter (sigma = N / (2n) for reduction factor n) -> learnable frequency mask ->
inverse DCT. Filtering limits bandwidth, not extent: every scale keeps the
shared grid's resolution so the renderer can use one coordinate frame.

Two readings of the mask equation are implemented behind ``mode``:

* ``"literal"``: out = sigmoid(f * M) - epsilon, the equation exactly as
  written. Sign-destroying and bounded to (-epsilon, 1 - epsilon).
* ``"multiplicative"``: out = f * (sigmoid(M) - epsilon), a gating reading.
  Recommended preset for quality experiments.

Filters are constants, never trained; masks are the trainable refinement.
Filter construction and application are pure functions.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import dct
from .validation import check_finite, check_grid, check_positive, check_same_shape

MASK_MODES = ("literal", "multiplicative")

DEFAULT_EPSILON = 0.5  # sigmoid(0) - 0.5 == 0, so zero coefficients stay zero in literal mode

# default mask initialization per mode; multiplicative +4 gives a gate of
# sigmoid(4) - 0.5 ~= 0.482, close to a fixed linear scaling at the start
MASK_INIT = {"literal": 1.0, "multiplicative": 4.0}


@dataclass(frozen=True)
class ScaleConfig:
    """Resolution-reduction ladder: factor 1 is full resolution."""

    num_scales: int = 4
    reduction_factors: tuple = (1.0, 2.0, 4.0, 8.0)

    def __post_init__(self):
        if self.num_scales < 1:
            raise ValueError(f"num_scales must be >= 1, got {self.num_scales}")
        factors = tuple(float(n) for n in self.reduction_factors)
        if len(factors) != self.num_scales:
            raise ValueError(
                f"expected {self.num_scales} reduction factors, got {len(factors)}"
            )
        if factors[0] != 1.0:
            raise ValueError(f"first reduction factor must be 1, got {factors[0]}")
        if any(b <= a for a, b in zip(factors, factors[1:])):
            raise ValueError(f"reduction factors must be strictly increasing: {factors}")
        object.__setattr__(self, "reduction_factors", factors)


@dataclass(frozen=True)
class LearnableMask:
    """Trainable per-coefficient mask values plus the fixed gating threshold."""

    values: np.ndarray
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        check_grid(self.values, "mask values", ndim=(1, 2))
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")


def sigma_for_scale(extent: int, reduction: float) -> float:
    """Gaussian filter width sigma = N / (2n) for extent N and reduction factor n."""
    if extent < 2:
        raise ValueError(f"extent must be >= 2, got {extent}")
    reduction = float(reduction)
    if reduction < 1.0:
        raise ValueError(f"reduction factor must be >= 1, got {reduction}")
    return extent / (2.0 * reduction)


@lru_cache(maxsize=256)
def _cached_lpf(shape: tuple, sigma: float) -> np.ndarray:
    axes = [np.arange(n, dtype=np.float64) ** 2 for n in shape]
    if len(shape) == 1:
        sq = axes[0]
    else:
        sq = axes[0][:, None] + axes[1][None, :]
    weights = np.exp(-sq / (2.0 * sigma * sigma))
    weights.setflags(write=False)
    return weights


def build_lpf(shape, sigma: float) -> np.ndarray:
    """Gaussian top-left attenuation weights for a 1-D or 2-D frequency grid.

    w[u] = exp(-u^2 / (2 sigma^2)) (1-D) and w[u, v] = exp(-(u^2+v^2)/(2 sigma^2))
    (2-D), with indices measured from the DC corner. The DC weight is exactly 1
    and weights are non-increasing along every axis.
    """
    sigma = check_positive(sigma, "sigma")
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    shape = tuple(int(n) for n in shape)
    if len(shape) not in (1, 2) or any(n < 1 for n in shape):
        raise ValueError(f"filter shape must be 1-D or 2-D with positive extents, got {shape}")
    return _cached_lpf(shape, sigma)


def apply_lpf(freq, weights) -> np.ndarray:
    """Attenuate frequency coefficients: elementwise product with filter weights."""
    f = check_grid(freq, "frequency grid", ndim=(1, 2))
    w = check_grid(weights, "filter weights", ndim=(1, 2))
    check_same_shape(f, w, "apply_lpf")
    return f * w


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def apply_mask(filtered, mask: LearnableMask, mode: str = "literal") -> np.ndarray:
    """Gate filtered coefficients with a learnable mask (see module docstring)."""
    f = check_grid(filtered, "filtered grid", ndim=(1, 2))
    check_same_shape(f, mask.values, "apply_mask")
    if mode == "literal":
        out = _sigmoid(f * mask.values) - mask.epsilon
    elif mode == "multiplicative":
        out = f * (_sigmoid(mask.values) - mask.epsilon)
    else:
        raise ValueError(f"mode must be one of {MASK_MODES}, got {mode!r}")
    return check_finite(out, "masked grid")


def filter_bank(shape, cfg: ScaleConfig) -> list:
    """One low-pass filter per scale, sigma from the per-axis extent."""
    extent = shape if isinstance(shape, (int, np.integer)) else shape[0]
    return [build_lpf(shape, sigma_for_scale(int(extent), n)) for n in cfg.reduction_factors]


def expand_to_scales(f_shared, cfg: ScaleConfig, masks, mode: str = "literal",
                     filters=None) -> list:
    """Expand one shared frequency grid into per-scale spatial grids.

    Per scale: apply_lpf -> apply_mask -> dct_inverse. Outputs all share the
    input's extent. ``filters`` overrides the default bank (used by ablations);
    ``masks`` is one ``LearnableMask`` per scale. Deterministic: identical
    inputs give bit-identical outputs.
    """
    f = check_grid(f_shared, "shared frequency grid", ndim=(1, 2))
    if len(masks) != cfg.num_scales:
        raise ValueError(f"expected {cfg.num_scales} masks, got {len(masks)}")
    if filters is None:
        filters = filter_bank(f.shape, cfg)
    if len(filters) != cfg.num_scales:
        raise ValueError(f"expected {cfg.num_scales} filters, got {len(filters)}")

    out = []
    for weights, mask in zip(filters, masks):
        filtered = apply_lpf(f, weights)
        masked = apply_mask(filtered, mask, mode=mode)
        out.append(dct.dct_inverse(masked))
    return out


def to_grayscale_u8(values) -> np.ndarray:
    """Normalize an array to uint8 [0, 255] for mask/feature-map export.

    Constant inputs map to mid-gray rather than dividing by a zero range.
    """
    arr = np.asarray(values, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    if hi - lo < 1e-12:
        return np.full(arr.shape, 127, dtype=np.uint8)
    norm = (arr - lo) / (hi - lo)
    return np.clip(np.rint(norm * 255.0), 0, 255).astype(np.uint8)
