"""End-to-end optimization of the multi-scale field against multi-scale images.

Two-phase schedule: the first ``warmup_steps`` optimize the factors directly in
the spatial domain (no frequency pipeline); at the boundary the factors are
transformed once into DCT coefficients and training continues through the full
low-pass filter / mask / inverse-DCT expansion. ``baseline=True`` skips the
handoff entirely, which is the no-anti-aliasing reference model (equivalent to
all-pass filters with no masks, since the orthonormal transform is lossless).

Each batch draws rays from one uniformly random (view, scale) pair so all
scales are supervised equally. One optimizer thread owns the parameters; the
gradient apply plus cache invalidation is exclusive.
"""

from dataclasses import dataclass, asdict

import numpy as np
import torch

from .cameras import make_rays
from .errors import ConfigError, NumericError
from .field import FieldConfig, MultiScaleField
from .filters import MASK_MODES, ScaleConfig
from .metrics import MetricReport, psnr, ssim, SSIM_WINDOW
from .render import RenderSettings, render_image, render_rays

ABLATION_FLAGS = ("no_mask", "no_lpf", "shared_lpf", "baseline")


@dataclass(frozen=True)
class TrainConfig:
    # schedule (desk-scale defaults keep the 7:40 warmup ratio of the full recipe)
    total_steps: int = 4000
    warmup_steps: int = 700
    batch_rays: int = 1024
    samples_per_ray: int = 64
    lr_grid: float = 0.02  # frequency factors and masks
    lr_decoder: float = 1e-3
    lr_decay_ratio: float = 0.1  # lr multiplier reached at the final step; 1 = constant
    seed: int = 0
    # model
    grid_size: int = 64
    rank_density: int = 4
    rank_appearance: int = 12
    decoder_hidden: int = 32
    dir_freqs: int = 2
    density_scale: float = 10.0
    init_scale: float = 0.1
    mask_mode: str = "literal"
    epsilon: float = 0.5
    mask_init: float | None = None
    dtype: str = "float32"
    num_scales: int | None = None  # None: take the dataset's scale ladder
    # ablations (at most one)
    no_mask: bool = False
    no_lpf: bool = False
    shared_lpf: bool = False
    baseline: bool = False
    # rendering / logging
    weight_threshold: float = 1e-4
    log_every: int = 50
    eval_every: int = 0  # probe PSNR cadence; 0 disables

    def __post_init__(self):
        if self.total_steps < 0:
            raise ConfigError(f"total_steps must be >= 0, got {self.total_steps}")
        if self.total_steps > 0 and not 0 <= self.warmup_steps < self.total_steps:
            raise ConfigError(
                f"warmup_steps must satisfy 0 <= warmup < total ({self.warmup_steps} "
                f"vs {self.total_steps})"
            )
        if self.lr_grid <= 0 or self.lr_decoder <= 0:
            raise ConfigError("learning rates must be positive")
        if not 0 < self.lr_decay_ratio <= 1:
            raise ConfigError(f"lr_decay_ratio must be in (0, 1], got {self.lr_decay_ratio}")
        if self.batch_rays < 1:
            raise ConfigError(f"batch_rays must be >= 1, got {self.batch_rays}")
        if self.mask_mode not in MASK_MODES:
            raise ConfigError(f"mask_mode must be one of {MASK_MODES}, got {self.mask_mode!r}")
        flags = [name for name in ABLATION_FLAGS if getattr(self, name)]
        if len(flags) > 1:
            raise ConfigError(f"at most one ablation flag may be set, got {flags}")

    def field_config(self, dataset) -> FieldConfig:
        factors = tuple(float(f) for f in dataset.scale_factors)
        if self.num_scales is not None and self.num_scales != len(factors):
            raise ConfigError(
                f"config expects {self.num_scales} scales but the dataset provides "
                f"{len(factors)} ({factors})"
            )
        return FieldConfig(
            grid_size=self.grid_size,
            rank_density=self.rank_density,
            rank_appearance=self.rank_appearance,
            scales=ScaleConfig(num_scales=len(factors), reduction_factors=factors),
            mask_mode=self.mask_mode,
            epsilon=self.epsilon,
            mask_init=self.mask_init,
            decoder_hidden=self.decoder_hidden,
            dir_freqs=self.dir_freqs,
            density_scale=self.density_scale,
            init_scale=self.init_scale,
            no_lpf=self.no_lpf,
            no_mask=self.no_mask,
            shared_lpf=self.shared_lpf,
            dtype=self.dtype,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def mse_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean squared error over a ray batch; shapes must match exactly."""
    if pred.shape != target.shape:
        raise ValueError(f"loss requires matching shapes, got {pred.shape} and {target.shape}")
    diff = pred - target
    return (diff * diff).mean()


def gradient_set(field: MultiScaleField) -> dict:
    """Per-parameter gradients mirroring every trainable tensor (zeros if unset)."""
    out = {}
    for name, param in field.named_parameters():
        grad = param.grad
        out[name] = (
            np.zeros(param.shape, dtype=np.float64)
            if grad is None
            else grad.detach().cpu().double().numpy()
        )
    return out


def check_finite_gradients(field: MultiScaleField, step: int) -> None:
    for name, param in field.named_parameters():
        if param.grad is not None and not torch.isfinite(param.grad).all():
            raise NumericError(f"non-finite gradient in parameter {name!r} at step {step}")


def _make_optimizer(field: MultiScaleField, cfg: TrainConfig) -> torch.optim.Adam:
    groups = [
        {"params": list(field.factors.values()), "lr": cfg.lr_grid},
        {"params": list(field.masks.values()), "lr": cfg.lr_grid},
        {"params": list(field.decoder.parameters()), "lr": cfg.lr_decoder},
    ]
    return torch.optim.Adam(groups)


def _sample_batch(dataset, cfg: TrainConfig, rng: np.random.Generator):
    scale = int(rng.integers(dataset.num_scales))
    view = int(rng.integers(len(dataset.train_cameras)))
    cam = dataset.camera("train", scale, view)
    img = dataset.train_images[scale][view]
    px = rng.integers(cam.width, size=cfg.batch_rays)
    py = rng.integers(cam.height, size=cfg.batch_rays)
    origins, dirs = make_rays(cam, np.stack([px, py], axis=1))
    targets = img[py, px]
    return cam, origins, dirs, targets


def train_loop(cfg: TrainConfig, dataset, on_step=None):
    """Optimize a field against the dataset; returns (field, history).

    ``history`` is a list of per-log-step records (step, loss, phase, lr, and
    probe PSNRs when ``eval_every`` is active) suitable for line-delimited
    serialization.
    """
    if dataset.num_scales < 1 or not dataset.train_cameras:
        raise ConfigError("dataset must provide at least one scale and one training view")

    field_cfg = cfg.field_config(dataset)  # validates scale compatibility before step 0
    torch.manual_seed(cfg.seed)
    field = MultiScaleField(field_cfg, seed=cfg.seed, base_footprint=dataset.base_footprint())
    rng = np.random.default_rng(cfg.seed)
    jitter_gen = torch.Generator().manual_seed(cfg.seed + 1)
    optimizer = _make_optimizer(field, cfg)
    settings = RenderSettings(
        samples_per_ray=cfg.samples_per_ray,
        background=dataset.background,
        jitter=True,
        weight_threshold=cfg.weight_threshold,
    )
    dtype = field.torch_dtype
    history = []

    for step in range(cfg.total_steps):
        if step == cfg.warmup_steps and not cfg.baseline and field.domain == "spatial":
            field.enter_frequency_domain()
            # moment estimates from the spatial phase do not transfer to
            # frequency coefficients; restart the optimizer state
            optimizer = _make_optimizer(field, cfg)

        cam, origins, dirs, targets = _sample_batch(dataset, cfg, rng)
        colors = render_rays(
            field, origins, dirs, cam.footprint, cam.near, cam.far, settings,
            generator=jitter_gen,
        )
        loss = mse_loss(colors, torch.from_numpy(targets).to(dtype))
        if not torch.isfinite(loss):
            raise NumericError(f"non-finite loss at step {step}")

        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        check_finite_gradients(field, step)

        decay = cfg.lr_decay_ratio ** ((step + 1) / max(cfg.total_steps, 1))
        for group, base_lr in zip(optimizer.param_groups, (cfg.lr_grid, cfg.lr_grid, cfg.lr_decoder)):
            group["lr"] = base_lr * decay
        optimizer.step()
        field.invalidate_cache()

        if cfg.log_every and (step % cfg.log_every == 0 or step == cfg.total_steps - 1):
            record = {
                "step": step,
                "loss": float(loss.detach()),
                "phase": field.domain,
                "lr": float(optimizer.param_groups[0]["lr"]),
            }
            if cfg.eval_every and dataset.test_cameras and (
                step % cfg.eval_every == 0 or step == cfg.total_steps - 1
            ):
                record["probe_psnr"] = _probe_psnr(field, dataset, settings)
            history.append(record)
            if on_step is not None:
                on_step(record)
    return field, history


def _probe_psnr(field: MultiScaleField, dataset, settings: RenderSettings) -> list:
    """PSNR of the first held-out view at every scale."""
    probe_settings = RenderSettings(
        samples_per_ray=settings.samples_per_ray,
        background=settings.background,
        jitter=False,
        weight_threshold=settings.weight_threshold,
    )
    values = []
    for s in range(dataset.num_scales):
        cam = dataset.camera("test", s, 0)
        img = render_image(field, cam, probe_settings)
        values.append(round(psnr(img, dataset.test_images[s][0]), 4))
    return values


def evaluate_field(field: MultiScaleField, dataset, samples_per_ray: int | None = None,
                   weight_threshold: float = 1e-4) -> MetricReport:
    """Render every test view at every scale and report per-scale PSNR/SSIM.

    SSIM is undefined for images smaller than its 11x11 window (the 1/8 scale
    of a 64 px dataset); those scales report ``None`` and the SSIM average
    covers the defined scales only.
    """
    if dataset.num_scales != field.num_scales:
        raise ConfigError(
            f"checkpoint has {field.num_scales} scales but dataset provides "
            f"{dataset.num_scales}"
        )
    if not dataset.test_cameras:
        raise ConfigError("dataset has no test views to evaluate")
    settings = RenderSettings(
        samples_per_ray=samples_per_ray or 64,
        background=dataset.background,
        jitter=False,
        weight_threshold=weight_threshold,
    )
    labels, psnrs, ssims = [], [], []
    for s, factor in enumerate(dataset.scale_factors):
        labels.append(f"x{factor}")
        per_view_psnr, per_view_ssim = [], []
        for v in range(len(dataset.test_cameras)):
            cam = dataset.camera("test", s, v)
            img = render_image(field, cam, settings)
            ref = dataset.test_images[s][v]
            per_view_psnr.append(psnr(img, ref))
            if min(cam.height, cam.width) >= SSIM_WINDOW:
                per_view_ssim.append(ssim(img, ref))
        psnrs.append(float(np.mean(per_view_psnr)))
        ssims.append(float(np.mean(per_view_ssim)) if per_view_ssim else None)
    return MetricReport(scale_labels=labels, psnr_per_scale=psnrs, ssim_per_scale=ssims)


def run_ablation(cfg: TrainConfig, dataset):
    """Train one Table-2-style ablation variant and evaluate it.

    Exactly one of ``no_mask``, ``no_lpf``, ``shared_lpf`` must be set; the
    no-anti-aliasing reference is the separate ``baseline`` training mode.
    Returns (field, history, MetricReport).
    """
    flags = [name for name in ("no_mask", "no_lpf", "shared_lpf") if getattr(cfg, name)]
    if len(flags) != 1 or cfg.baseline:
        raise ConfigError(
            f"run_ablation requires exactly one of no_mask/no_lpf/shared_lpf, got "
            f"{flags + (['baseline'] if cfg.baseline else [])}"
        )
    field, history = train_loop(cfg, dataset)
    report = evaluate_field(
        field, dataset, samples_per_ray=cfg.samples_per_ray,
        weight_threshold=cfg.weight_threshold,
    )
    return field, history, report
