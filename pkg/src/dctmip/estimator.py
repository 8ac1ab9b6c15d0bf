"""Scikit-learn style estimator facade over the training pipeline.

``DctMipField`` follows the estimator protocol: hyperparameters are plain
constructor arguments (so ``get_params`` / ``set_params`` / ``clone`` work and
the model composes with parameter searches), ``fit`` consumes a
``MultiScaleDataset``, and fitted state lives in trailing-underscore
attributes.
"""

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .field import MultiScaleField
from .render import RenderSettings, render_image
from .training import TrainConfig, evaluate_field, train_loop


class DctMipField(BaseEstimator):
    """Anti-aliased multi-scale grid radiance field trained in the DCT domain.

    Parameters mirror ``training.TrainConfig``; see that class for semantics.
    After ``fit``, ``field_`` holds the trained ``MultiScaleField`` and
    ``history_`` the training log records.
    """

    def __init__(
        self,
        grid_size=64,
        rank_density=4,
        rank_appearance=12,
        mask_mode="literal",
        epsilon=0.5,
        mask_init=None,
        total_steps=4000,
        warmup_steps=700,
        batch_rays=1024,
        samples_per_ray=64,
        lr_grid=0.02,
        lr_decoder=1e-3,
        lr_decay_ratio=0.1,
        seed=0,
        no_mask=False,
        no_lpf=False,
        shared_lpf=False,
        baseline=False,
        weight_threshold=1e-4,
        dtype="float32",
    ):
        self.grid_size = grid_size
        self.rank_density = rank_density
        self.rank_appearance = rank_appearance
        self.mask_mode = mask_mode
        self.epsilon = epsilon
        self.mask_init = mask_init
        self.total_steps = total_steps
        self.warmup_steps = warmup_steps
        self.batch_rays = batch_rays
        self.samples_per_ray = samples_per_ray
        self.lr_grid = lr_grid
        self.lr_decoder = lr_decoder
        self.lr_decay_ratio = lr_decay_ratio
        self.seed = seed
        self.no_mask = no_mask
        self.no_lpf = no_lpf
        self.shared_lpf = shared_lpf
        self.baseline = baseline
        self.weight_threshold = weight_threshold
        self.dtype = dtype

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            total_steps=self.total_steps,
            warmup_steps=self.warmup_steps,
            batch_rays=self.batch_rays,
            samples_per_ray=self.samples_per_ray,
            lr_grid=self.lr_grid,
            lr_decoder=self.lr_decoder,
            lr_decay_ratio=self.lr_decay_ratio,
            seed=self.seed,
            grid_size=self.grid_size,
            rank_density=self.rank_density,
            rank_appearance=self.rank_appearance,
            mask_mode=self.mask_mode,
            epsilon=self.epsilon,
            mask_init=self.mask_init,
            no_mask=self.no_mask,
            no_lpf=self.no_lpf,
            shared_lpf=self.shared_lpf,
            baseline=self.baseline,
            weight_threshold=self.weight_threshold,
            dtype=self.dtype,
        )

    def fit(self, dataset, y=None):
        """Train on a ``MultiScaleDataset``; returns self."""
        cfg = self._train_config()
        self.field_, self.history_ = train_loop(cfg, dataset)
        self.background_ = dataset.background
        return self

    def _check_fitted(self) -> MultiScaleField:
        if not hasattr(self, "field_"):
            raise NotFittedError("this DctMipField instance is not fitted yet; call fit first")
        return self.field_

    def predict(self, cameras, seed=None):
        """Render novel views; the mip level follows each camera's pixel footprint."""
        field = self._check_fitted()
        settings = RenderSettings(
            samples_per_ray=self.samples_per_ray,
            background=self.background_,
            jitter=False,
            weight_threshold=self.weight_threshold,
        )
        single = not isinstance(cameras, (list, tuple))
        cams = [cameras] if single else list(cameras)
        images = [render_image(field, cam, settings, seed=seed) for cam in cams]
        return images[0] if single else images

    def score(self, dataset, y=None) -> float:
        """Mean PSNR (dB) over the dataset's held-out views and scales."""
        field = self._check_fitted()
        report = evaluate_field(
            field, dataset, samples_per_ray=self.samples_per_ray,
            weight_threshold=self.weight_threshold,
        )
        return report.psnr_avg

    def evaluate(self, dataset):
        """Full per-scale ``MetricReport`` on the dataset's test split."""
        return evaluate_field(
            self._check_fitted(), dataset, samples_per_ray=self.samples_per_ray,
            weight_threshold=self.weight_threshold,
        )

    def save_checkpoint(self, path) -> None:
        self._check_fitted().save_checkpoint(path, step=self.total_steps)
