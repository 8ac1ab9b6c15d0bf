"""8-bit PNG reading/writing for linear-stored images.

Values are clamped-linear: no transfer function is applied in either direction,
a stored byte b means the linear value b / 255.
"""

import numpy as np
from PIL import Image

from .validation import check_image


def to_u8(img) -> np.ndarray:
    arr = check_image(img)
    return np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)


def save_png(path, img) -> None:
    Image.fromarray(to_u8(img), mode="RGB").save(path, format="PNG")


def save_gray_png(path, values_u8: np.ndarray) -> None:
    Image.fromarray(np.asarray(values_u8, dtype=np.uint8), mode="L").save(path, format="PNG")


def load_png(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0
