"""Image quality metrics (PSNR, SSIM) and per-scale evaluation reports.

Both metrics run in float64 on linear-stored values, matching how renders are
written to disk. SSIM uses the canonical published parameters: 11x11 Gaussian
window with sigma 1.5, C1 = (0.01 peak)^2, C2 = (0.03 peak)^2, valid-mode
windows, channels averaged. Pure functions, freely concurrent.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .validation import check_image, check_same_shape

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(a, b, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE); identical images give ``math.inf``."""
    img_a = check_image(a, "first image")
    img_b = check_image(b, "second image")
    check_same_shape(img_a, img_b, "psnr")
    if peak <= 0:
        raise ValueError(f"peak must be positive, got {peak}")
    mse = float(np.mean((img_a - img_b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(a, b, peak: float = 1.0) -> float:
    """Mean structural similarity over all valid 11x11 windows, channel-averaged."""
    img_a = check_image(a, "first image")
    img_b = check_image(b, "second image")
    check_same_shape(img_a, img_b, "ssim")
    h, w = img_a.shape[:2]
    if min(h, w) < SSIM_WINDOW:
        raise ValueError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM, got {h}x{w}"
        )
    win = _gaussian_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    scores = []
    for ch in range(3):
        x = sliding_window_view(img_a[:, :, ch], (SSIM_WINDOW, SSIM_WINDOW))
        y = sliding_window_view(img_b[:, :, ch], (SSIM_WINDOW, SSIM_WINDOW))
        mu_x = np.einsum("ijkl,kl->ij", x, win)
        mu_y = np.einsum("ijkl,kl->ij", y, win)
        xx = np.einsum("ijkl,kl->ij", x * x, win) - mu_x**2
        yy = np.einsum("ijkl,kl->ij", y * y, win) - mu_y**2
        xy = np.einsum("ijkl,kl->ij", x * y, win) - mu_x * mu_y
        ssim_map = ((2 * mu_x * mu_y + c1) * (2 * xy + c2)) / (
            (mu_x**2 + mu_y**2 + c1) * (xx + yy + c2)
        )
        scores.append(float(ssim_map.mean()))
    return float(np.mean(scores))


@dataclass
class MetricReport:
    """Per-scale PSNR/SSIM plus arithmetic-mean average columns.

    SSIM entries may be ``None`` where the metric is undefined (images smaller
    than the window); the SSIM average covers the defined scales only.
    """

    scale_labels: list
    psnr_per_scale: list
    ssim_per_scale: list

    @property
    def psnr_avg(self) -> float:
        return float(np.mean(self.psnr_per_scale))

    @property
    def ssim_avg(self):
        defined = [v for v in self.ssim_per_scale if v is not None]
        return float(np.mean(defined)) if defined else None

    def to_dict(self) -> dict:
        def enc(v):
            if v is None:
                return None
            return "inf" if math.isinf(v) else round(float(v), 6)

        return {
            "scales": list(self.scale_labels),
            "psnr": [enc(v) for v in self.psnr_per_scale] + [enc(self.psnr_avg)],
            "ssim": [enc(v) for v in self.ssim_per_scale] + [enc(self.ssim_avg)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        def fmt(v, digits):
            return "--" if v is None else f"{v:.{digits}f}"

        header = ["scale"] + list(self.scale_labels) + ["avg"]
        psnr_row = ["psnr"] + [fmt(v, 2) for v in self.psnr_per_scale] + [fmt(self.psnr_avg, 2)]
        ssim_row = ["ssim"] + [fmt(v, 4) for v in self.ssim_per_scale] + [fmt(self.ssim_avg, 4)]
        widths = [
            max(len(row[i]) for row in (header, psnr_row, ssim_row))
            for i in range(len(header))
        ]
        lines = [
            "  ".join(cell.rjust(width) for cell, width in zip(row, widths))
            for row in (header, psnr_row, ssim_row)
        ]
        return "\n".join(lines)
