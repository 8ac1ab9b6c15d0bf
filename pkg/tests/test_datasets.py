"""Multi-scale dataset generation, disk round-trips, and the camera loader."""

import json
import math

import numpy as np
import pytest

from dctmip.datasets import (
    MultiScaleDataset,
    build_multiscale,
    load_dataset,
    load_nerf_synthetic,
    make_dataset,
    orbit_cameras,
    save_dataset,
)
from dctmip.dct import dct_forward
from dctmip.errors import DatasetError
from dctmip.scenes import default_scene, oracle_render


@pytest.fixture(scope="module")
def small_dataset():
    return make_dataset(n_train=3, n_test=2, full_res=32, supersample=4, seed=1)


class TestBuildMultiscale:
    def test_scale_resolutions(self, small_dataset):
        ds = small_dataset
        assert ds.scale_factors == (1, 2, 4, 8)
        for s, factor in enumerate(ds.scale_factors):
            img = ds.train_images[s][0]
            assert img.shape == (32 // factor, 32 // factor, 3)

    def test_non_divisible_resolution_rejected(self):
        scene = default_scene(0)
        cams = orbit_cameras(1, 48, 48)
        with pytest.raises(DatasetError, match="divisible"):
            build_multiscale(scene, cams, supersample=2, scale_factors=(1, 2, 4, 32))

    def test_same_seed_identical(self):
        a = make_dataset(n_train=2, n_test=1, full_res=16, supersample=2, seed=3)
        b = make_dataset(n_train=2, n_test=1, full_res=16, supersample=2, seed=3)
        for s in range(a.num_scales):
            for v in range(2):
                np.testing.assert_array_equal(a.train_images[s][v], b.train_images[s][v])

    def test_base_footprint_positive_and_consistent(self, small_dataset):
        fp = small_dataset.base_footprint()
        cam = small_dataset.train_cameras[0]
        dist = np.linalg.norm(cam.origin - np.array([0.5, 0.5, 0.5]))
        assert fp == pytest.approx(dist / cam.focal, rel=1e-6)


class TestGroundTruthSpectra:
    @pytest.fixture(scope="class")
    def views(self):
        scene = default_scene(0)
        cam = orbit_cameras(1, 64, 64)[0]
        return {
            "full": oracle_render(scene, cam, supersample=32),
            "eighth": oracle_render(scene, cam.downscaled(8), supersample=128),
            "eighth_point": oracle_render(scene, cam.downscaled(8), supersample=1),
        }

    @staticmethod
    def high_band_fraction(img):
        hi = total = 0.0
        for ch in range(3):
            spec = dct_forward(img[:, :, ch] - img[:, :, ch].mean())
            energy = spec**2
            n = energy.shape[0]
            u, v = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
            hi += energy[(u + v) >= n].sum()
            total += energy.sum()
        return hi / total

    def test_coarse_ground_truth_band_limited(self, views):
        # area-averaged 1/8 ground truth carries little top-band energy, while
        # point sampling the same view aliases heavily into that band
        frac_supersampled = self.high_band_fraction(views["eighth"])
        frac_point = self.high_band_fraction(views["eighth_point"])
        assert frac_supersampled < 0.06
        assert frac_point > 2.0 * frac_supersampled

    def test_direct_coarse_render_differs_from_box_downsampling(self, views):
        # the downsample path convolves with an extra fine-pixel box, so the two
        # coarse ground truths differ by a small but persistent margin
        down = views["full"].reshape(8, 8, 8, 8, 3).mean(axis=(1, 3))
        mean_diff = np.abs(views["eighth"] - down).mean()
        assert mean_diff > 3e-5


class TestDiskRoundTrip:
    def test_save_load_preserves_cameras_and_images(self, small_dataset, tmp_path):
        out = tmp_path / "ds"
        save_dataset(small_dataset, out)
        loaded = load_dataset(out)
        assert loaded.scale_factors == small_dataset.scale_factors
        assert len(loaded.train_cameras) == 3
        assert len(loaded.test_cameras) == 2
        for cam_a, cam_b in zip(loaded.train_cameras, small_dataset.train_cameras):
            np.testing.assert_allclose(cam_a.pose, cam_b.pose, atol=1e-12)
            assert cam_a.focal == pytest.approx(cam_b.focal, rel=1e-9)
        # images round-trip through 8-bit quantization
        for s in range(4):
            stored = loaded.train_images[s][0]
            original = small_dataset.train_images[s][0]
            assert np.abs(stored - original).max() <= 0.5 / 255 + 1e-12

    def test_manifest_contents(self, small_dataset, tmp_path):
        out = tmp_path / "ds"
        save_dataset(small_dataset, out)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["scale_factors"] == [1, 2, 4, 8]
        assert manifest["splits"] == {"train": 3, "test": 2}
        assert manifest["full_width"] == 32

    def test_missing_manifest_rejected(self, tmp_path):
        with pytest.raises(DatasetError, match="manifest"):
            load_dataset(tmp_path)


class TestNerfSyntheticLoader:
    def write(self, tmp_path, payload):
        path = tmp_path / "transforms_train.json"
        path.write_text(json.dumps(payload) if isinstance(payload, dict) else payload)
        return path

    def test_identity_transform_looks_down_minus_z(self, tmp_path):
        path = self.write(tmp_path, {
            "camera_angle_x": 0.7,
            "frames": [{"file_path": "./r_0", "transform_matrix": np.eye(4).tolist()}],
        })
        cams = load_nerf_synthetic(path, width=100, height=80)
        cam = cams[0]
        np.testing.assert_allclose(cam.origin, [0.0, 0.0, 0.0], atol=0)
        np.testing.assert_allclose(cam.rotation, np.eye(3), atol=0)
        # -z in camera space maps to -z in world space
        np.testing.assert_allclose(cam.rotation @ [0, 0, -1], [0, 0, -1], atol=0)

    def test_focal_from_camera_angle(self, tmp_path):
        path = self.write(tmp_path, {
            "camera_angle_x": math.pi / 2,
            "frames": [{"file_path": "./r_0", "transform_matrix": np.eye(4).tolist()}],
        })
        cams = load_nerf_synthetic(path, width=800, height=800)
        assert cams[0].focal == pytest.approx(400.0, rel=1e-12)

    def test_malformed_json_reports_byte_offset(self, tmp_path):
        path = self.write(tmp_path, '{"camera_angle_x": 0.7, "frames": [}')
        with pytest.raises(DatasetError, match="byte offset"):
            load_nerf_synthetic(path, width=8, height=8)

    def test_missing_field_named(self, tmp_path):
        path = self.write(tmp_path, {"frames": []})
        with pytest.raises(DatasetError, match="camera_angle_x"):
            load_nerf_synthetic(path, width=8, height=8)
        path = self.write(tmp_path, {
            "camera_angle_x": 0.7,
            "frames": [{"transform_matrix": np.eye(4).tolist()}],
        })
        with pytest.raises(DatasetError, match=r"frames\[0\].file_path"):
            load_nerf_synthetic(path, width=8, height=8)

    def test_non_orthonormal_rotation_reports_residual(self, tmp_path):
        mat = np.eye(4)
        mat[0, 0] = 1.5
        path = self.write(tmp_path, {
            "camera_angle_x": 0.7,
            "frames": [{"file_path": "./r_0", "transform_matrix": mat.tolist()}],
        })
        with pytest.raises(DatasetError, match="residual"):
            load_nerf_synthetic(path, width=8, height=8)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DatasetError, match="no such"):
            load_nerf_synthetic(tmp_path / "nope.json", width=8, height=8)


class TestCameraAccess:
    def test_downscaled_cameras_per_scale(self, small_dataset):
        cam = small_dataset.camera("train", 2, 0)
        assert cam.width == 8
        assert cam.focal == pytest.approx(small_dataset.train_cameras[0].focal / 4)
