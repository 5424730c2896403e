import math

import numpy as np
import pytest

from despeckle3d import (
    ObnlmParams,
    SpeckleParams,
    Volume3D,
    VolumeError,
    apply_speckle,
    block_weight,
    filter_obnlm,
    filter_obnlm_reference,
    pearson_distance,
    rescale_unit,
)


def speckled_constant(level=0.5, dims=(32, 32, 8), sigma=0.2, gamma=0.5, seed=0):
    clean = Volume3D(np.full(dims, level))
    noisy = apply_speckle(clean, SpeckleParams(sigma=sigma, gamma=gamma, seed=seed))
    scaled, _, _ = rescale_unit(noisy)
    return scaled


class TestPearsonDistance:
    def test_identical_blocks(self):
        assert pearson_distance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], gamma=0.5) == 0.0

    def test_hand_case_gamma_half(self):
        # (2 - 1)^2 / 1^1 = 1
        assert pearson_distance([2.0], [1.0], gamma=0.5) == 1.0

    def test_hand_case_gamma_one(self):
        # (4 - 2)^2 / 2^2 = 1
        assert pearson_distance([4.0], [2.0], gamma=1.0) == 1.0

    def test_zero_denominator_guard(self):
        # (1 - 0)^2 / max(0, 1e-6) = 1e6
        assert pearson_distance([1.0], [0.0], gamma=0.5, eps=1e-6) == 1e6

    def test_symmetric_only_for_gamma_zero(self):
        a, b = [1.0, 2.0], [3.0, 5.0]
        assert pearson_distance(a, b, gamma=0.0) == pearson_distance(b, a, gamma=0.0)
        assert pearson_distance(a, b, gamma=1.0) != pearson_distance(b, a, gamma=1.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            pearson_distance([1.0], [1.0, 2.0], gamma=0.5)

    def test_negative_comparison_block_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            pearson_distance([1.0], [-1.0], gamma=0.5)

    def test_always_finite_with_guard(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            bi = rng.random(27)
            bj = rng.random(27)
            bj[rng.integers(0, 27)] = 0.0
            d = pearson_distance(bi, bj, gamma=rng.uniform(0.0, 2.0))
            assert np.isfinite(d) and d >= 0.0


class TestBlockWeight:
    def test_zero_distance(self):
        assert block_weight(0.0, h=0.4) == 1.0

    def test_e_minus_one_at_h_squared(self):
        h = 0.7
        assert abs(block_weight(h * h, h) - math.exp(-1.0)) <= 1e-12

    def test_monotone_decreasing_and_bounded(self):
        weights = [block_weight(d, h=0.4) for d in (0.0, 0.1, 1.0, 10.0, 1e6)]
        assert all(0.0 <= w <= 1.0 for w in weights)
        assert all(a > b for a, b in zip(weights, weights[1:]))

    def test_huge_distance_underflows_to_zero(self):
        assert block_weight(1e9, h=0.4) == 0.0

    def test_invalid_h(self):
        with pytest.raises(ValueError, match="h must be positive"):
            block_weight(1.0, h=0.0)


class TestObnlmParams:
    @pytest.mark.parametrize(
        "kwargs,match",
        [
            (dict(block_radius=-1), "block_radius"),
            (dict(search_radius=0), "search_radius"),
            (dict(block_step=0), "block_step"),
            (dict(block_radius=3, search_radius=3, block_step=1), "search extent"),
            (dict(block_radius=0, block_step=2, search_radius=3), "uncovered"),
            (dict(h=0.0), "h must be positive"),
            (dict(gamma=-0.1), "gamma"),
            (dict(eps=0.0), "eps"),
            (dict(mode="volumetric"), "mode"),
        ],
    )
    def test_validation(self, kwargs, match):
        with pytest.raises(ValueError, match=match):
            ObnlmParams(**kwargs)

    def test_defaults_are_valid(self):
        p = ObnlmParams()
        assert p.mode == "slice2d"
        assert p.block_radius == 1 and p.search_radius == 3 and p.block_step == 1


class TestFilterContracts:
    def test_negative_input_rejected(self):
        v = Volume3D(np.full((16, 16, 4), -0.5))
        for f in (filter_obnlm_reference, filter_obnlm):
            with pytest.raises(VolumeError, match="nonnegative"):
                f(v, ObnlmParams())

    def test_volume_smaller_than_block_rejected(self):
        v = Volume3D(np.ones((2, 16, 4)))
        with pytest.raises(VolumeError, match="smaller than one block"):
            filter_obnlm(v, ObnlmParams(block_radius=1, mode="slice2d"))

    def test_invalid_thread_count(self, unit_volume):
        with pytest.raises(ValueError, match="threads"):
            filter_obnlm(unit_volume(), ObnlmParams(), threads=0)

    @pytest.mark.parametrize("mode", ["slice2d", "full3d"])
    def test_constant_preserved(self, mode):
        v = Volume3D(np.full((16, 16, 8), 0.37))
        p = ObnlmParams(mode=mode)
        for f in (filter_obnlm_reference, filter_obnlm):
            out = f(v, p)
            assert np.abs(out.data - 0.37).max() <= 1e-12

    @pytest.mark.parametrize("mode", ["slice2d", "full3d"])
    def test_output_within_input_range(self, mode):
        v = speckled_constant(dims=(16, 16, 8), seed=3)
        out = filter_obnlm(v, ObnlmParams(mode=mode))
        assert out.data.min() >= v.data.min() - 1e-12
        assert out.data.max() <= v.data.max() + 1e-12


def mean_of_blocks_oracle(v, p):
    """Large-h limit computed directly: every candidate block weighs the same,
    so each restored block is the plain average over the search window and
    each voxel averages the block estimates covering it."""
    assert p.mode == "full3d"
    r, m, s = p.block_radius, p.search_radius, p.block_step
    nx, ny, nz = v.dims
    pad = r + m * s
    U = np.pad(v.data, pad, mode="reflect")
    num = np.zeros(v.dims)
    cnt = np.zeros(v.dims)

    def centers(n):
        c = list(range(0, n, s))
        if c[-1] != n - 1:
            c.append(n - 1)
        return c

    offsets = range(-m, m + 1)
    for cx in centers(nx):
        for cy in centers(ny):
            for cz in centers(nz):
                est = np.zeros((2 * r + 1,) * 3)
                n_blocks = 0
                for dx in offsets:
                    for dy in offsets:
                        for dz in offsets:
                            jx, jy, jz = cx + s * dx + pad, cy + s * dy + pad, cz + s * dz + pad
                            est += U[jx - r:jx + r + 1, jy - r:jy + r + 1, jz - r:jz + r + 1]
                            n_blocks += 1
                est /= n_blocks
                for bx in range(-r, r + 1):
                    for by in range(-r, r + 1):
                        for bz in range(-r, r + 1):
                            vx, vy, vz = cx + bx, cy + by, cz + bz
                            if 0 <= vx < nx and 0 <= vy < ny and 0 <= vz < nz:
                                num[vx, vy, vz] += est[bx + r, by + r, bz + r]
                                cnt[vx, vy, vz] += 1.0
    return num / cnt


class TestLargeHLimit:
    @pytest.mark.parametrize("block_step", [1, 2])
    def test_filter_tends_to_mean_of_blocks(self, unit_volume, block_step):
        v = unit_volume(seed=17, dims=(10, 9, 7))
        p = ObnlmParams(mode="full3d", search_radius=2, block_step=block_step, h=1e6)
        expected = mean_of_blocks_oracle(v, p)
        for f in (filter_obnlm_reference, filter_obnlm):
            out = f(v, p)
            np.testing.assert_allclose(out.data, expected, atol=1e-6)


class TestOracleEquivalence:
    @pytest.mark.parametrize("mode", ["slice2d", "full3d"])
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(),
            dict(gamma=0.0),
            dict(gamma=1.0),
            dict(block_step=2),
            dict(block_radius=0),
            dict(block_radius=2, search_radius=3, h=0.3),
            dict(search_radius=2, eps=1e-3),
        ],
        ids=["default", "gamma0", "gamma1", "step2", "pointwise", "bigblock", "smallwin"],
    )
    def test_optimized_matches_reference(self, unit_volume, mode, kwargs):
        v = unit_volume(seed=23, dims=(14, 13, 8))
        p = ObnlmParams(mode=mode, **kwargs)
        ref = filter_obnlm_reference(v, p)
        opt = filter_obnlm(v, p)
        assert np.abs(ref.data - opt.data).max() <= 1e-5

    def test_matches_on_speckled_input_with_zeros(self):
        # rescaled speckled data contains an exact zero, engaging the guard
        v = speckled_constant(dims=(12, 12, 6), seed=5)
        assert v.data.min() == 0.0
        p = ObnlmParams(mode="full3d")
        ref = filter_obnlm_reference(v, p)
        opt = filter_obnlm(v, p)
        assert np.abs(ref.data - opt.data).max() <= 1e-5


class TestDeterminism:
    def test_thread_count_invariance(self):
        v = speckled_constant(dims=(16, 16, 8), seed=9)
        p = ObnlmParams(mode="full3d")
        outputs = [filter_obnlm(v, p, threads=t).data for t in (1, 2, 8)]
        assert np.array_equal(outputs[0], outputs[1])
        assert np.array_equal(outputs[0], outputs[2])

    def test_repeated_runs_identical(self):
        v = speckled_constant(dims=(16, 16, 4), seed=10)
        p = ObnlmParams()
        assert np.array_equal(filter_obnlm(v, p).data, filter_obnlm(v, p).data)


class TestSmoothingBehavior:
    # full3d blocks sum 27 distance terms instead of 9, so matching
    # suppression needs a proportionally larger h than the slice2d default
    @pytest.mark.parametrize("mode,h", [("slice2d", 0.4), ("full3d", 0.6)])
    def test_variance_suppressed_and_mean_stable(self, mode, h):
        v = speckled_constant(dims=(32, 32, 8), seed=1)
        out = filter_obnlm(v, ObnlmParams(mode=mode, h=h))
        assert out.data.var() / v.data.var() < 0.5
        assert abs(out.data.mean() - v.data.mean()) <= 0.05 * v.data.mean()

    def test_edge_preserved_on_two_region_phantom(self):
        from despeckle3d import PhantomSpec, generate_phantom

        clean = generate_phantom(PhantomSpec(kind="two-region", dims=(32, 32, 8),
                                             low=0.25, high=0.75, axis=0, position=16))
        noisy = apply_speckle(clean, SpeckleParams(sigma=0.2, gamma=0.5, seed=2))
        scaled, lo, hi = rescale_unit(noisy)
        out = filter_obnlm(scaled, ObnlmParams())
        restored = out.data * (hi - lo) + lo
        assert abs(restored[:16].mean() - 0.25) <= 0.05 * 0.25
        assert abs(restored[16:].mean() - 0.75) <= 0.05 * 0.75
        profile = restored.mean(axis=(1, 2))
        edge = np.abs(np.diff(profile)).argmax()
        assert abs(edge - 15) <= 1

    @pytest.mark.parametrize("axis", [0, 1, 2])
    def test_flip_equivariance(self, axis):
        v = speckled_constant(dims=(14, 12, 8), seed=11)
        p = ObnlmParams(mode="full3d")
        direct = filter_obnlm(v, p).data
        flipped_in = Volume3D(np.flip(v.data, axis=axis).copy())
        flipped_out = np.flip(filter_obnlm(flipped_in, p).data, axis=axis)
        assert np.abs(direct - flipped_out).max() <= 1e-6
