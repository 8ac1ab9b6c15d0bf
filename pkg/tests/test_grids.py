"""Grid substrate: elementwise arithmetic and multilinear sampling."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dctmip.grids import elementwise_mul, lerp_sample, lerp_sample_many


class TestElementwiseMul:
    def test_identity_mask(self):
        np.testing.assert_array_equal(
            elementwise_mul([1.0, 2.0, 3.0], [1.0, 1.0, 1.0]), [1.0, 2.0, 3.0]
        )

    def test_annihilator(self):
        np.testing.assert_array_equal(elementwise_mul([2.0, 3.0], [0.0, 0.0]), [0.0, 0.0])

    def test_direct_arithmetic(self):
        np.testing.assert_array_equal(
            elementwise_mul([1.5, -2.0], [2.0, 0.5]), [3.0, -1.0]
        )

    def test_shape_mismatch_reports_both_shapes(self):
        with pytest.raises(ValueError, match=r"\(2,\).*\(3,\)"):
            elementwise_mul([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_commutative_bitwise(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(5, 6))
        b = rng.normal(size=(5, 6))
        np.testing.assert_array_equal(elementwise_mul(a, b), elementwise_mul(b, a))

    def test_associative_with_fixed_grouping(self):
        rng = np.random.default_rng(8)
        a, b, c = (rng.normal(size=12) for _ in range(3))
        left = elementwise_mul(elementwise_mul(a, b), c)
        np.testing.assert_array_equal(left, elementwise_mul(elementwise_mul(a, b), c))
        np.testing.assert_allclose(left, elementwise_mul(a, elementwise_mul(b, c)), rtol=1e-15)

    def test_nonfinite_result_rejected(self):
        big = np.full(3, 1e200)
        with pytest.raises(ValueError, match="non-finite"):
            elementwise_mul(big, big)

    def test_nonfinite_input_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            elementwise_mul([np.nan, 1.0], [1.0, 1.0])


class TestLerpSample:
    def test_node_hit(self):
        assert lerp_sample([0.0, 10.0], [0.0]) == 0.0

    def test_midpoint_average(self):
        assert lerp_sample([0.0, 10.0], [0.5]) == 5.0

    def test_bilinear_center(self):
        # brute-force bilinear: (0 + 1 + 2 + 3) / 4 at the cell center
        assert lerp_sample([[0.0, 1.0], [2.0, 3.0]], [0.5, 0.5]) == 1.5

    def test_matches_bruteforce_bilinear_formula(self):
        rng = np.random.default_rng(0)
        g = rng.normal(size=(4, 5))
        for _ in range(20):
            cy, cx = rng.uniform(0, 1, size=2)
            py, px = cy * 3, cx * 4
            i, j = min(int(py), 2), min(int(px), 3)
            fy, fx = py - i, px - j
            expected = (
                g[i, j] * (1 - fy) * (1 - fx)
                + g[i, j + 1] * (1 - fy) * fx
                + g[i + 1, j] * fy * (1 - fx)
                + g[i + 1, j + 1] * fy * fx
            )
            assert lerp_sample(g, [cy, cx]) == pytest.approx(expected, abs=1e-14)

    def test_out_of_range_clamps(self):
        g = [0.0, 10.0]
        assert lerp_sample(g, [-0.5]) == 0.0
        assert lerp_sample(g, [1.5]) == 10.0

    def test_trilinear_node_values(self):
        rng = np.random.default_rng(1)
        g = rng.normal(size=(3, 4, 2))
        for idx in np.ndindex(g.shape):
            coord = np.asarray(idx) / (np.asarray(g.shape) - 1)
            assert lerp_sample(g, coord) == pytest.approx(g[idx], abs=1e-14)

    def test_extent_one_rejected(self):
        with pytest.raises(ValueError, match="extents"):
            lerp_sample(np.zeros((1,)), [0.5])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), st.floats(-2.0, 2.0))
    def test_linear_in_grid_values(self, seed, lam):
        rng = np.random.default_rng(seed)
        shape = tuple(rng.integers(2, 6, size=int(rng.integers(1, 4))))
        a = rng.normal(size=shape)
        b = rng.normal(size=shape)
        coord = rng.uniform(0, 1, size=len(shape))
        combined = lerp_sample(a + lam * b, coord)
        separate = lerp_sample(a, coord) + lam * lerp_sample(b, coord)
        assert combined == pytest.approx(separate, abs=1e-12)

    def test_many_matches_scalar(self):
        rng = np.random.default_rng(2)
        g = rng.normal(size=(5, 5, 5))
        pts = rng.uniform(-0.1, 1.1, size=(40, 3))
        batched = lerp_sample_many(g, pts)
        singles = np.array([lerp_sample(g, p) for p in pts])
        np.testing.assert_allclose(batched, singles, atol=1e-14)
