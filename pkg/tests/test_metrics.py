import numpy as np
import pytest

from despeckle3d import (
    DisplacementField,
    Volume3D,
    VolumeError,
    mse,
    smpi,
    warp_trilinear,
)


def as_volume(values, dims):
    return Volume3D(np.asarray(values, dtype=np.float64).reshape(dims, order="F"))


def ramp_volume(dims):
    """Voxel value equals its x index."""
    nx, ny, nz = dims
    return Volume3D(np.broadcast_to(
        np.arange(nx, dtype=np.float64)[:, None, None], dims).copy())


class TestSmpi:
    def test_identity_filter_scores_one(self, unit_volume):
        v = unit_volume(seed=1)
        report = smpi(v, v)
        assert report.q == 1.0
        assert report.smpi == 1.0

    def test_constant_at_mean_scores_zero(self, unit_volume):
        v = unit_volume(seed=2)
        flat = Volume3D(np.full(v.dims, v.data.mean()))
        report = smpi(v, flat)
        assert report.var_r == 0.0
        assert report.smpi == 0.0

    def test_hand_case(self):
        original = as_volume([0.0, 2.0, 0.0, 2.0], (2, 2, 1))
        filtered = as_volume([0.5, 1.5, 0.5, 1.5], (2, 2, 1))
        report = smpi(original, filtered)
        assert abs(report.mu_o - 1.0) <= 1e-12
        assert abs(report.mu_r - 1.0) <= 1e-12
        assert abs(report.q - 1.0) <= 1e-12
        assert abs(report.smpi - 0.5) <= 1e-12

    def test_report_field_consistency(self, unit_volume):
        a, b = unit_volume(seed=3), unit_volume(seed=4)
        report = smpi(a, b)
        assert report.q == 1.0 + abs(report.mu_r - report.mu_o)
        assert report.smpi == report.q * np.sqrt(report.var_r) / np.sqrt(report.var_o)

    def test_scale_sensitivity_algebra(self, unit_volume):
        # scaling both volumes by s scales the mean penalty but not the
        # variance ratio, so SMPI is not scale-invariant
        a, b = unit_volume(seed=5), unit_volume(seed=6)
        base = smpi(a, b)
        s = 3.0
        scaled = smpi(Volume3D(s * a.data), Volume3D(s * b.data))
        assert np.isclose(scaled.q - 1.0, s * (base.q - 1.0), rtol=1e-10, atol=1e-14)
        ratio = np.sqrt(base.var_r) / np.sqrt(base.var_o)
        scaled_ratio = np.sqrt(scaled.var_r) / np.sqrt(scaled.var_o)
        assert np.isclose(scaled_ratio, ratio, rtol=1e-10)
        assert np.isclose(scaled.smpi, scaled.q * ratio, rtol=1e-10)

    def test_dim_mismatch(self, unit_volume):
        with pytest.raises(VolumeError, match="dimension mismatch"):
            smpi(unit_volume(seed=1), unit_volume(seed=1, dims=(8, 8, 8)))

    def test_degenerate_original(self):
        flat = Volume3D(np.full((4, 4, 4), 1.0))
        with pytest.raises(VolumeError, match="degenerate original"):
            smpi(flat, flat)


class TestMse:
    def test_identical_is_zero(self, unit_volume):
        v = unit_volume(seed=7)
        assert mse(v, v) == 0.0

    def test_zeros_vs_ones(self):
        a = Volume3D(np.zeros((4, 4, 4)))
        b = Volume3D(np.ones((4, 4, 4)))
        assert mse(a, b) == 1.0

    def test_symmetric_and_nonnegative(self, unit_volume):
        a, b = unit_volume(seed=8), unit_volume(seed=9)
        assert mse(a, b) == mse(b, a)
        assert mse(a, b) >= 0.0

    def test_dim_mismatch(self, unit_volume):
        with pytest.raises(VolumeError, match="dimension mismatch"):
            mse(unit_volume(seed=1), unit_volume(seed=1, dims=(4, 4, 4)))


class TestDisplacementField:
    def test_shape_validation(self):
        with pytest.raises(VolumeError, match="shape"):
            DisplacementField(np.zeros((4, 4, 4)))

    def test_finite_validation(self):
        field = np.zeros((2, 2, 2, 3))
        field[0, 0, 0, 1] = np.inf
        with pytest.raises(VolumeError, match="non-finite"):
            DisplacementField(field)


class TestWarpTrilinear:
    def test_zero_field_is_bitwise_identity(self, unit_volume):
        v = unit_volume(seed=10)
        out = warp_trilinear(v, DisplacementField.zero(v.dims))
        assert np.array_equal(out.data, v.data)

    def test_dim_mismatch(self, unit_volume):
        v = unit_volume(seed=1)
        with pytest.raises(VolumeError, match="dimension mismatch"):
            warp_trilinear(v, DisplacementField.zero((4, 4, 4)))

    def test_integer_shift_on_ramp_with_clamp(self):
        v = ramp_volume((8, 4, 3))
        out = warp_trilinear(v, DisplacementField.uniform(v.dims, (-1.0, 0.0, 0.0)))
        # out(i) = moving(i - 1) for i >= 1; the x = 0 face clamps to itself
        np.testing.assert_array_equal(out.data[1:], v.data[:-1])
        np.testing.assert_array_equal(out.data[0], v.data[0])

    def test_half_voxel_shift_on_ramp(self):
        v = ramp_volume((8, 4, 3))
        out = warp_trilinear(v, DisplacementField.uniform(v.dims, (-0.5, 0.0, 0.0)))
        expected = np.arange(8, dtype=np.float64) - 0.5
        for i in range(1, 8):
            np.testing.assert_allclose(out.data[i], expected[i], atol=1e-6)

    def test_integer_shift_matches_sliced_volume(self, unit_volume):
        v = unit_volume(seed=11, dims=(10, 9, 8))
        out = warp_trilinear(v, DisplacementField.uniform(v.dims, (2.0, 1.0, 0.0)))
        np.testing.assert_array_equal(out.data[:8, :8, :], v.data[2:, 1:, :])

    def test_shift_there_and_back_preserves_interior(self, unit_volume):
        v = unit_volume(seed=12, dims=(10, 10, 6))
        k = 2
        there = warp_trilinear(v, DisplacementField.uniform(v.dims, (k, 0.0, 0.0)))
        back = warp_trilinear(there, DisplacementField.uniform(v.dims, (-k, 0.0, 0.0)))
        np.testing.assert_array_equal(back.data[k:-k], v.data[k:-k])

    def test_ground_truth_field_gives_tiny_mse(self, unit_volume):
        moving = unit_volume(seed=13, dims=(12, 10, 8))
        field = DisplacementField.uniform(moving.dims, (3.0, 2.0, 1.0))
        warped = warp_trilinear(moving, field)
        fixed_interior = moving.data[3:, 2:, 1:]
        warped_interior = warped.data[:9, :8, :7]
        assert np.mean((fixed_interior - warped_interior) ** 2) <= 1e-10

    def test_out_of_bounds_clamps_to_edge(self):
        v = ramp_volume((5, 3, 2))
        out = warp_trilinear(v, DisplacementField.uniform(v.dims, (100.0, 0.0, 0.0)))
        np.testing.assert_array_equal(out.data, np.full(v.dims, 4.0))
