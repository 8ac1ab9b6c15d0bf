"""Pinhole cameras and ray generation.

Convention: camera space has +x right, +y up, looking down -z (the Blender /
NeRF-synthetic convention). ``pose`` is the 3x4 camera-to-world rigid
transform. Pixel (i, j) is column i, row j with the ray through the pixel
center. A ray's ``footprint`` is the world-space width one pixel subtends at
unit distance from the origin: pixel size / focal length.
"""

from dataclasses import dataclass

import numpy as np

from .validation import check_finite, check_unit_vector

ROTATION_TOL = 1e-6


@dataclass(frozen=True)
class Camera:
    focal: float  # pixels
    width: int
    height: int
    pose: np.ndarray  # (3, 4) camera-to-world
    near: float
    far: float

    def __post_init__(self):
        if self.focal <= 0:
            raise ValueError(f"focal length must be positive, got {self.focal}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        pose = np.asarray(self.pose, dtype=np.float64)
        if pose.shape != (3, 4):
            raise ValueError(f"pose must be a 3x4 matrix, got shape {pose.shape}")
        check_finite(pose, "pose")
        rot = pose[:, :3]
        residual = float(np.abs(rot @ rot.T - np.eye(3)).max())
        if residual > ROTATION_TOL:
            raise ValueError(
                f"pose rotation is not orthonormal (residual {residual:.3e} > {ROTATION_TOL})"
            )
        if not self.near < self.far:
            raise ValueError(f"near must be < far, got near={self.near}, far={self.far}")
        object.__setattr__(self, "pose", pose)

    @property
    def rotation(self) -> np.ndarray:
        return self.pose[:, :3]

    @property
    def origin(self) -> np.ndarray:
        return self.pose[:, 3]

    @property
    def footprint(self) -> float:
        """World units per pixel at unit distance."""
        return 1.0 / self.focal

    def downscaled(self, factor: int) -> "Camera":
        """Same field of view at 1/factor resolution (focal in pixels shrinks)."""
        if self.width % factor or self.height % factor:
            raise ValueError(
                f"resolution {self.width}x{self.height} not divisible by {factor}"
            )
        return Camera(
            focal=self.focal / factor,
            width=self.width // factor,
            height=self.height // factor,
            pose=self.pose,
            near=self.near,
            far=self.far,
        )


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray  # unit vector
    footprint: float

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        direction = check_unit_vector(self.direction, "ray direction")
        check_finite(origin, "ray origin")
        if self.footprint <= 0:
            raise ValueError(f"footprint must be positive, got {self.footprint}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction)


def make_rays(cam: Camera, pixels=None):
    """Rays through pixel centers.

    ``pixels`` is an (M, 2) array of integer (column, row) pairs; None means
    every pixel in row-major order. Returns (origins (M, 3), dirs (M, 3) unit).
    The per-pixel footprint is the camera's scalar ``footprint``.
    """
    if pixels is None:
        cols, rows = np.meshgrid(np.arange(cam.width), np.arange(cam.height), indexing="xy")
        pixels = np.stack([cols.ravel(), rows.ravel()], axis=1)
    else:
        pixels = np.asarray(pixels)
        if pixels.size == 0:
            return np.zeros((0, 3)), np.zeros((0, 3))
        if pixels.ndim != 2 or pixels.shape[1] != 2:
            raise ValueError(f"pixels must have shape (M, 2), got {pixels.shape}")
        if (
            pixels[:, 0].min() < 0
            or pixels[:, 0].max() >= cam.width
            or pixels[:, 1].min() < 0
            or pixels[:, 1].max() >= cam.height
        ):
            raise ValueError("pixel indices outside image bounds")

    return make_rays_fractional(cam, pixels[:, 0] + 0.5, pixels[:, 1] + 0.5)


def make_rays_fractional(cam: Camera, px, py):
    """Rays through continuous pixel positions (px, py) in [0, W] x [0, H]."""
    px = np.asarray(px, dtype=np.float64).ravel()
    py = np.asarray(py, dtype=np.float64).ravel()
    x = (px - 0.5 * cam.width) / cam.focal
    y = -(py - 0.5 * cam.height) / cam.focal
    dirs_cam = np.stack([x, y, -np.ones_like(x)], axis=1)
    dirs = dirs_cam @ cam.rotation.T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.broadcast_to(cam.origin, dirs.shape).copy()
    return origins, dirs


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Camera-to-world pose with -z toward ``target`` (3x4)."""
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    forward = target - eye
    forward = forward / np.linalg.norm(forward)
    up = np.asarray(up, dtype=np.float64)
    right = np.cross(forward, up)
    if np.linalg.norm(right) < 1e-8:  # looking along up; pick another axis
        right = np.cross(forward, np.array([0.0, 1.0, 0.0]))
    right = right / np.linalg.norm(right)
    true_up = np.cross(right, forward)
    pose = np.empty((3, 4))
    pose[:, 0] = right
    pose[:, 1] = true_up
    pose[:, 2] = -forward
    pose[:, 3] = eye
    return pose
