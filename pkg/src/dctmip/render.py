"""Volumetric quadrature of the emission-absorption rendering integral.

Standard piecewise-constant quadrature over the ray interval clipped to the
unit scene box: with per-segment optical depth tau_i = sigma_i * delta_i,

    alpha_i = 1 - exp(-tau_i)
    T_i     = exp(-sum_{j<i} tau_j)
    C       = sum_i T_i alpha_i c_i  +  T_final * background

Samples sit at segment start points (first-order quadrature); ``jitter``
moves each sample uniformly within its segment for stratified training noise.
The mip level is chosen per ray from the pixel footprint at the clipped
interval's midpoint distance. Rendering never writes to the field: it is safe
to parallelize across rays against frozen parameters.
"""

from dataclasses import dataclass

import numpy as np
import torch

from .field import select_scale_batch

# the trainable field lives in the unit cube; rays are clipped to it
SCENE_LO = 0.0
SCENE_HI = 1.0


@dataclass(frozen=True)
class RenderSettings:
    samples_per_ray: int = 64
    background: tuple = (1.0, 1.0, 1.0)
    jitter: bool = False
    # appearance decoding is skipped for samples whose compositing weight is
    # below this; 0 disables the optimization (used by gradient checks)
    weight_threshold: float = 1e-4

    def __post_init__(self):
        if self.samples_per_ray < 2:
            raise ValueError(f"samples_per_ray must be >= 2, got {self.samples_per_ray}")
        bg = tuple(float(c) for c in self.background)
        if len(bg) != 3 or any(not 0.0 <= c <= 1.0 for c in bg):
            raise ValueError(f"background must be RGB in [0, 1]^3, got {self.background}")
        object.__setattr__(self, "background", bg)


def ray_box_spans(origins: np.ndarray, dirs: np.ndarray, near: float, far: float):
    """Clip [near, far] against the unit box; returns (t0, t1) with t1 <= t0 on miss."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        lo = (SCENE_LO - origins) * inv
        hi = (SCENE_HI - origins) * inv
    t_near = np.minimum(lo, hi)
    t_far = np.maximum(lo, hi)
    # axes with zero direction: inside slab -> (-inf, inf), outside -> empty
    zero = dirs == 0.0
    inside = (origins >= SCENE_LO) & (origins <= SCENE_HI)
    t_near = np.where(zero, np.where(inside, -np.inf, np.inf), t_near)
    t_far = np.where(zero, np.where(inside, np.inf, -np.inf), t_far)
    t0 = np.maximum(t_near.max(axis=1), near)
    t1 = np.minimum(t_far.min(axis=1), far)
    return t0, t1


def render_rays(
    field,
    origins,
    dirs,
    footprint: float,
    near: float,
    far: float,
    settings: RenderSettings,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """Differentiable batch renderer; returns unclamped (M, 3) colors.

    ``field`` needs: ``torch_dtype``, ``select_scale(footprint)``,
    ``density_at(coords, scale)`` and ``rgb_at(coords, dirs, scale)``.
    """
    if not near < far:
        raise ValueError(f"near must be < far, got near={near}, far={far}")
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    n_rays = origins.shape[0]
    dtype = field.torch_dtype
    background = torch.tensor(settings.background, dtype=dtype)
    out = background.repeat(n_rays, 1)
    if n_rays == 0:
        return out

    t0, t1 = ray_box_spans(origins, dirs, near, far)
    hit = t1 > t0
    if not hit.any():
        return out

    t_mid = 0.5 * (t0 + t1)
    num_scales = getattr(field, "num_scales", 1)
    levels = np.zeros(n_rays, dtype=np.int64)
    if num_scales > 1:
        levels[hit] = select_scale_batch(
            footprint * t_mid[hit], field.base_footprint, num_scales
        )

    s = settings.samples_per_ray
    for level in np.unique(levels[hit]):
        sel = hit & (levels == level)
        idx = np.nonzero(sel)[0]
        o = torch.from_numpy(origins[sel]).to(dtype)
        d = torch.from_numpy(dirs[sel]).to(dtype)
        seg0 = torch.from_numpy(t0[sel]).to(dtype)
        h = (torch.from_numpy(t1[sel]).to(dtype) - seg0) / s  # (B,)

        offsets = torch.arange(s, dtype=dtype)
        if settings.jitter:
            u = torch.rand(len(idx), s, dtype=dtype, generator=generator)
            t = seg0[:, None] + (offsets[None, :] + u) * h[:, None]
        else:
            t = seg0[:, None] + offsets[None, :] * h[:, None]

        coords = o[:, None, :] + t[..., None] * d[:, None, :]  # (B, S, 3)
        flat = coords.reshape(-1, 3)
        sigma = field.density_at(flat, int(level)).reshape(len(idx), s)

        tau = sigma * h[:, None]
        cum = torch.cumsum(tau, dim=1)
        trans = torch.exp(-(cum - tau))  # exclusive prefix: T_i
        alpha = 1.0 - torch.exp(-tau)
        weights = trans * alpha  # (B, S)
        t_final = torch.exp(-cum[:, -1])

        rgb = torch.zeros(len(idx) * s, 3, dtype=dtype)
        keep = (weights > settings.weight_threshold).reshape(-1)
        if settings.weight_threshold <= 0.0:
            keep = torch.ones_like(keep)
        if keep.any():
            dirs_flat = d[:, None, :].expand(-1, s, -1).reshape(-1, 3)
            rgb_kept = field.rgb_at(flat[keep], dirs_flat[keep], int(level))
            rgb = rgb.index_put((torch.nonzero(keep, as_tuple=True)[0],), rgb_kept)
        rgb = rgb.reshape(len(idx), s, 3)

        color = (weights[..., None] * rgb).sum(dim=1) + t_final[:, None] * background[None, :]
        out = out.index_put((torch.from_numpy(idx),), color)
    return out


def render_ray(field, ray, settings: RenderSettings, near: float = 0.0, far: float = 10.0):
    """Render a single ray; returns an RGB tuple (clamped to [0, 1])."""
    color = render_rays(
        field,
        ray.origin[None, :],
        ray.direction[None, :],
        ray.footprint,
        near,
        far,
        settings,
    )
    return tuple(float(c) for c in color[0].clamp(0.0, 1.0))


def render_image(field, cam, settings: RenderSettings, seed: int | None = None) -> np.ndarray:
    """Render every pixel of ``cam``; returns (H, W, 3) float64 in [0, 1].

    Deterministic when ``jitter`` is off; with jitter on, a fixed ``seed``
    reproduces the image exactly.
    """
    from .cameras import make_rays

    origins, dirs = make_rays(cam)
    generator = None
    if settings.jitter:
        generator = torch.Generator().manual_seed(0 if seed is None else int(seed))
    with torch.no_grad():
        colors = render_rays(
            field, origins, dirs, cam.footprint, cam.near, cam.far, settings,
            generator=generator,
        )
    img = colors.clamp(0.0, 1.0).double().numpy().reshape(cam.height, cam.width, 3)
    return img
