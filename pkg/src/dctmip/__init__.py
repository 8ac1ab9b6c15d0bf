"""Anti-aliased multi-scale grid radiance fields trained in the DCT domain.

A shared grid is optimized in the frequency domain and expanded into per-scale
spatial grids through scale-specific Gaussian low-pass filters and learnable
frequency masks, rendered with volumetric quadrature, and supervised against
multi-scale ground truth.
"""

from .cameras import Camera, Ray, make_rays
from .estimator import DctMipField
from .errors import CheckpointError, ConfigError, DatasetError, NumericError
from .field import (
    FieldConfig,
    FieldSample,
    MultiScaleField,
    VMDecomposition,
    reconstruct_point,
    select_scale,
)
from .filters import (
    LearnableMask,
    ScaleConfig,
    apply_lpf,
    apply_mask,
    build_lpf,
    expand_to_scales,
    sigma_for_scale,
)
from .datasets import MultiScaleDataset, load_dataset, load_nerf_synthetic, make_dataset
from .metrics import MetricReport, psnr, ssim
from .render import RenderSettings, render_image, render_ray
from .scenes import Box, CheckerBox, Sphere, SyntheticScene, default_scene, oracle_render
from .training import TrainConfig, evaluate_field, run_ablation, train_loop

__version__ = "0.1.0"

__all__ = [
    "Box",
    "Camera",
    "CheckerBox",
    "CheckpointError",
    "ConfigError",
    "DatasetError",
    "DctMipField",
    "FieldConfig",
    "FieldSample",
    "LearnableMask",
    "MetricReport",
    "MultiScaleDataset",
    "MultiScaleField",
    "NumericError",
    "Ray",
    "RenderSettings",
    "ScaleConfig",
    "Sphere",
    "SyntheticScene",
    "TrainConfig",
    "VMDecomposition",
    "apply_lpf",
    "apply_mask",
    "build_lpf",
    "default_scene",
    "evaluate_field",
    "expand_to_scales",
    "load_dataset",
    "load_nerf_synthetic",
    "make_dataset",
    "make_rays",
    "oracle_render",
    "psnr",
    "reconstruct_point",
    "render_image",
    "render_ray",
    "run_ablation",
    "select_scale",
    "sigma_for_scale",
    "ssim",
    "train_loop",
]
