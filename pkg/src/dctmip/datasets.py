"""Multi-scale dataset handling: generation, disk layout, and camera loading.

Disk layout (``save_dataset``):

    manifest.json              scale factors, resolution, camera intrinsics,
                               split sizes, background, seed, base footprint
    transforms_train.json      NeRF-synthetic camera file (loadable below)
    transforms_test.json
    train/x{factor}/r_{i:03d}.png   one PNG per view per scale
    test/x{factor}/r_{i:03d}.png

Each scale is rendered independently by the analytic oracle at its own
resolution (never downsampled from the full-resolution render), so the ground
truth is alias-free at every scale.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cameras import Camera, look_at
from .errors import DatasetError
from .images import load_png, save_png
from .scenes import SyntheticScene, default_scene, oracle_render

SCENE_CENTER = np.array([0.5, 0.5, 0.5])
DEFAULT_SCALE_FACTORS = (1, 2, 4, 8)
DEFAULT_CAMERA_ANGLE_X = 0.8  # radians
DEFAULT_RADIUS = 1.8

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass
class MultiScaleDataset:
    """Posed images at every scale factor, split into train and test views."""

    scale_factors: tuple
    train_cameras: list
    test_cameras: list
    train_images: list  # [scale_idx][view] -> (H_k, W_k, 3) float in [0, 1]
    test_images: list
    background: tuple = (1.0, 1.0, 1.0)
    seed: int = 0

    @property
    def num_scales(self) -> int:
        return len(self.scale_factors)

    def cameras(self, split: str) -> list:
        return self.train_cameras if split == "train" else self.test_cameras

    def images(self, split: str) -> list:
        return self.train_images if split == "train" else self.test_images

    def camera(self, split: str, scale_idx: int, view: int) -> Camera:
        return self.cameras(split)[view].downscaled(self.scale_factors[scale_idx])

    def base_footprint(self) -> float:
        """Mean world-space width of a full-resolution pixel at scene distance."""
        fps = [
            float(np.linalg.norm(cam.origin - SCENE_CENTER)) / cam.focal
            for cam in self.train_cameras
        ]
        return float(np.mean(fps))


def orbit_cameras(
    n_views: int,
    width: int,
    height: int,
    radius: float = DEFAULT_RADIUS,
    camera_angle_x: float = DEFAULT_CAMERA_ANGLE_X,
    elevation_range=(0.35, 0.95),  # radians above the horizontal
    phase: float = 0.0,
) -> list:
    """Deterministic golden-angle orbit around the scene center, looking in."""
    focal = 0.5 * width / math.tan(0.5 * camera_angle_x)
    near = radius - 0.95
    far = radius + 0.95
    cams = []
    for i in range(n_views):
        az = phase + i * _GOLDEN_ANGLE
        frac = (i + 0.5) / n_views
        el = elevation_range[0] + frac * (elevation_range[1] - elevation_range[0])
        eye = SCENE_CENTER + radius * np.array(
            [math.cos(az) * math.cos(el), math.sin(az) * math.cos(el), math.sin(el)]
        )
        cams.append(
            Camera(
                focal=focal,
                width=width,
                height=height,
                pose=look_at(eye, SCENE_CENTER),
                near=near,
                far=far,
            )
        )
    return cams


def build_multiscale(
    scene: SyntheticScene,
    cameras: list,
    supersample: int = 32,
    scale_factors=DEFAULT_SCALE_FACTORS,
) -> list:
    """Oracle-render every camera at every scale; returns images[scale_idx][view].

    Every scale is rendered with the same per-pixel stratification, which keeps
    the silhouette-coverage error (the accuracy bottleneck) uniform across
    scales. The full resolution must be divisible by the largest scale factor.
    """
    if supersample < 1:
        raise DatasetError(f"supersample must be >= 1, got {supersample}")
    factors = tuple(int(f) for f in scale_factors)
    if not cameras:
        return [[] for _ in factors]
    top = max(factors)
    for cam in cameras:
        if cam.width % top or cam.height % top:
            raise DatasetError(
                f"full resolution {cam.width}x{cam.height} not divisible by {top}"
            )
    images = []
    for factor in factors:
        per_scale = []
        for cam in cameras:
            per_scale.append(oracle_render(scene, cam.downscaled(factor), supersample))
        images.append(per_scale)
    return images


def make_dataset(
    scene: SyntheticScene | None = None,
    n_train: int = 16,
    n_test: int = 4,
    full_res: int = 64,
    supersample: int = 32,
    seed: int = 0,
    scale_factors=DEFAULT_SCALE_FACTORS,
) -> MultiScaleDataset:
    """Generate the default desk-scale dataset (16 + 4 views on an orbit)."""
    if scene is None:
        scene = default_scene(seed)
    train_cams = orbit_cameras(n_train, full_res, full_res)
    test_cams = orbit_cameras(n_test, full_res, full_res, phase=0.5 * _GOLDEN_ANGLE)
    return MultiScaleDataset(
        scale_factors=tuple(int(f) for f in scale_factors),
        train_cameras=train_cams,
        test_cameras=test_cams,
        train_images=build_multiscale(scene, train_cams, supersample, scale_factors),
        test_images=build_multiscale(scene, test_cams, supersample, scale_factors),
        background=scene.background,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# disk round-trip
# ---------------------------------------------------------------------------

def _transforms_dict(cameras: list, split: str, width: int) -> dict:
    angle = 2.0 * math.atan(0.5 * width / cameras[0].focal)
    frames = []
    for i, cam in enumerate(cameras):
        mat = np.eye(4)
        mat[:3, :] = cam.pose
        frames.append(
            {"file_path": f"./{split}/x1/r_{i:03d}", "transform_matrix": mat.tolist()}
        )
    return {"camera_angle_x": angle, "frames": frames}


def save_dataset(ds: MultiScaleDataset, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cam0 = ds.train_cameras[0]
    manifest = {
        "scale_factors": list(ds.scale_factors),
        "full_width": cam0.width,
        "full_height": cam0.height,
        "near": cam0.near,
        "far": cam0.far,
        "background": list(ds.background),
        "seed": ds.seed,
        "splits": {"train": len(ds.train_cameras), "test": len(ds.test_cameras)},
        "base_footprint": ds.base_footprint(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    for split in ("train", "test"):
        cams = ds.cameras(split)
        if not cams:
            continue
        (out / f"transforms_{split}.json").write_text(
            json.dumps(_transforms_dict(cams, split, cam0.width), indent=2)
        )
        for s, factor in enumerate(ds.scale_factors):
            sub = out / split / f"x{factor}"
            sub.mkdir(parents=True, exist_ok=True)
            for i, img in enumerate(ds.images(split)[s]):
                save_png(sub / f"r_{i:03d}.png", img)


def load_dataset(dataset_dir) -> MultiScaleDataset:
    root = Path(dataset_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise DatasetError(f"{root}: missing manifest.json (not a dataset directory)")
    manifest = json.loads(manifest_path.read_text())
    factors = tuple(int(f) for f in manifest["scale_factors"])

    cameras = {}
    images = {}
    for split in ("train", "test"):
        n = manifest["splits"][split]
        if n == 0:
            cameras[split], images[split] = [], [[] for _ in factors]
            continue
        cameras[split] = load_nerf_synthetic(
            root / f"transforms_{split}.json",
            width=manifest["full_width"],
            height=manifest["full_height"],
            near=manifest["near"],
            far=manifest["far"],
        )
        if len(cameras[split]) != n:
            raise DatasetError(
                f"{root}: manifest lists {n} {split} views, transforms file has "
                f"{len(cameras[split])}"
            )
        images[split] = [
            [load_png(root / split / f"x{f}" / f"r_{i:03d}.png") for i in range(n)]
            for f in factors
        ]
    return MultiScaleDataset(
        scale_factors=factors,
        train_cameras=cameras["train"],
        test_cameras=cameras["test"],
        train_images=images["train"],
        test_images=images["test"],
        background=tuple(manifest["background"]),
        seed=int(manifest["seed"]),
    )


def load_nerf_synthetic(
    path,
    width: int | None = None,
    height: int | None = None,
    near: float = 2.0,
    far: float = 6.0,
) -> list:
    """Load cameras from a NeRF-synthetic ``transforms*.json`` file.

    ``camera_angle_x`` gives the horizontal field of view:
    focal = 0.5 * width / tan(0.5 * camera_angle_x). If no resolution is given
    the first frame's image is probed for one.
    """
    path = Path(path)
    try:
        meta = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise DatasetError(f"{path}: no such camera file") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: malformed JSON at byte offset {exc.pos}: {exc.msg}") from exc

    if "camera_angle_x" not in meta:
        raise DatasetError(f"{path}: missing required field 'camera_angle_x'")
    if "frames" not in meta:
        raise DatasetError(f"{path}: missing required field 'frames'")

    if width is None or height is None:
        first = meta["frames"][0] if meta["frames"] else {}
        rel = first.get("file_path")
        if rel is None:
            raise DatasetError(f"{path}: missing required field 'frames[0].file_path'")
        img_path = (path.parent / rel).with_suffix(".png")
        if not img_path.exists():
            raise DatasetError(
                f"{path}: no resolution given and first image {img_path} not found"
            )
        probe = load_png(img_path)
        height, width = probe.shape[:2]

    focal = 0.5 * width / math.tan(0.5 * float(meta["camera_angle_x"]))
    cameras = []
    for i, frame in enumerate(meta["frames"]):
        for field_name in ("transform_matrix", "file_path"):
            if field_name not in frame:
                raise DatasetError(f"{path}: missing required field 'frames[{i}].{field_name}'")
        mat = np.asarray(frame["transform_matrix"], dtype=np.float64)
        if mat.shape != (4, 4):
            raise DatasetError(
                f"{path}: frames[{i}].transform_matrix must be 4x4, got {mat.shape}"
            )
        try:
            cameras.append(
                Camera(
                    focal=focal,
                    width=int(width),
                    height=int(height),
                    pose=mat[:3, :],
                    near=near,
                    far=far,
                )
            )
        except ValueError as exc:
            raise DatasetError(f"{path}: frames[{i}]: {exc}") from exc
    return cameras
