import math

import numpy as np
import pytest

from gridshape import (
    GridSpec,
    PointCloud,
    compute_mlh,
    compute_mlh_labeled,
    compute_slices,
    compute_volume,
    z_ring_orientations,
)
from gridshape.descriptors import DEFAULT_FILL

from conftest import brute_force_mlh, identity_frame, random_cloud


def cloud_in_bin_00(heights, labels=None):
    """Points stacked in bin (0, 0) of an identity-frame 2x2 grid."""
    pts = [[-0.75, -0.75, h] for h in heights]
    return PointCloud(pts, labels=labels)


SPEC22 = GridSpec(2, 2, 5)


class TestMlh:
    def test_percentiles_land_on_order_statistics(self):
        # five heights, five layers: ranks 0/25/50/75/100 hit each point
        heights = [-0.8, -0.4, 0.0, 0.4, 0.8]
        mlh = compute_mlh(cloud_in_bin_00(heights), identity_frame(), SPEC22)
        assert np.allclose(mlh.values[0, 0], heights, atol=1e-12)

    def test_interpolated_midpoint(self):
        spec = GridSpec(2, 2, 3)
        mlh = compute_mlh(cloud_in_bin_00([0.0, 0.8]), identity_frame(), spec)
        assert np.allclose(mlh.values[0, 0], [0.0, 0.4, 0.8], atol=1e-12)

    def test_single_point_fills_all_layers(self):
        mlh = compute_mlh(cloud_in_bin_00([0.7]), identity_frame(), SPEC22)
        assert np.allclose(mlh.values[0, 0], 0.7)

    def test_empty_bin_filled(self):
        mlh = compute_mlh(cloud_in_bin_00([0.1]), identity_frame(), SPEC22)
        assert not mlh.mask[1, 1]
        assert (mlh.values[1, 1] == DEFAULT_FILL).all()
        assert mlh.mask[0, 0]

    def test_custom_fill(self):
        mlh = compute_mlh(cloud_in_bin_00([0.1]), identity_frame(), SPEC22, fill=-9.0)
        assert (mlh.values[1, 1] == -9.0).all()

    def test_single_layer_takes_minimum(self):
        spec = GridSpec(2, 2, 1)
        mlh = compute_mlh(cloud_in_bin_00([0.4, -0.2, 0.9]), identity_frame(), spec)
        assert mlh.values[0, 0, 0] == pytest.approx(-0.2, abs=1e-15)

    def test_layers_monotone_and_extremes_exact(self, rng):
        frame = z_ring_orientations(6)[1]
        for _ in range(50):
            layers = int(rng.integers(2, 7))
            spec = GridSpec(8, 8, layers)
            cloud = random_cloud(rng, 600)
            mlh = compute_mlh(cloud, frame, spec)
            occupied = mlh.values[mlh.mask]
            assert (np.diff(occupied, axis=-1) >= 0).all()
            # exact min/max per bin, cross-checked by direct accumulation
            lo = np.full((spec.h, spec.w), np.inf)
            hi = np.full((spec.h, spec.w), -np.inf)
            from gridshape.geometry import to_grid_coords

            coords = to_grid_coords(cloud, frame, spec)
            keep = coords.in_bounds
            np.minimum.at(lo, (coords.bin_i[keep], coords.bin_j[keep]), coords.height[keep])
            np.maximum.at(hi, (coords.bin_i[keep], coords.bin_j[keep]), coords.height[keep])
            assert np.array_equal(mlh.values[mlh.mask][:, 0], lo[mlh.mask])
            assert np.array_equal(mlh.values[mlh.mask][:, -1], hi[mlh.mask])

    def test_matches_brute_force_oracle(self, rng):
        frame = z_ring_orientations(5)[3]
        for _ in range(10):
            spec = GridSpec(6, 6, int(rng.integers(1, 6)))
            cloud = random_cloud(rng, 300)
            mlh = compute_mlh(cloud, frame, spec)
            ref_values, ref_mask = brute_force_mlh(cloud.points, frame, spec)
            assert np.array_equal(mlh.mask, ref_mask)
            assert np.abs(mlh.values - ref_values).max() < 1e-9

    def test_empty_cloud_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            compute_mlh(PointCloud(np.empty((0, 3))), identity_frame(), SPEC22)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="percentile_mode"):
            compute_mlh(cloud_in_bin_00([0.1]), identity_frame(), SPEC22, percentile_mode="median")


class TestMlhLabeled:
    def test_two_point_bin_keeps_endpoint_labels(self):
        spec = GridSpec(2, 2, 2)
        cloud = cloud_in_bin_00([0.0, 0.8], labels=[1, 2])
        mlh, lmap = compute_mlh_labeled(cloud, identity_frame(), spec)
        assert np.allclose(mlh.values[0, 0], [0.0, 0.8])
        assert lmap.labels[0, 0].tolist() == [1, 2]

    def test_empty_bins_get_invalid_label(self):
        spec = GridSpec(2, 2, 2)
        cloud = cloud_in_bin_00([0.0, 0.8], labels=[1, 2])
        _, lmap = compute_mlh_labeled(cloud, identity_frame(), spec, n_classes=4)
        assert lmap.invalid_label == 5
        assert (lmap.labels[1, 1] == 5).all()

    def test_nearest_rank_assigns_one_label_per_rank(self):
        spec = GridSpec(2, 2, 3)
        cloud = cloud_in_bin_00([0.0, 0.4, 0.8], labels=[1, 2, 3])
        mlh, lmap = compute_mlh_labeled(cloud, identity_frame(), spec)
        assert lmap.labels[0, 0].tolist() == [1, 2, 3]
        assert np.allclose(mlh.values[0, 0], [0.0, 0.4, 0.8])

    def test_invalid_exactly_at_empty_bins(self, rng):
        frame = z_ring_orientations(4)[1]
        spec = GridSpec(10, 10, 2)
        cloud = random_cloud(rng, 300, labels=3)
        mlh, lmap = compute_mlh_labeled(cloud, frame, spec)
        invalid_everywhere = (lmap.labels == lmap.invalid_label).all(axis=2)
        valid_everywhere = (lmap.labels != lmap.invalid_label).all(axis=2)
        assert np.array_equal(invalid_everywhere, ~mlh.mask)
        assert np.array_equal(valid_everywhere, mlh.mask)

    def test_height_and_label_come_from_same_point(self, rng):
        frame = z_ring_orientations(3)[0]
        spec = GridSpec(5, 5, 3)
        # distinct heights so the source point of each entry is unambiguous
        cloud = random_cloud(rng, 200, labels=9)
        height_of = {}
        from gridshape.geometry import to_grid_coords

        coords = to_grid_coords(cloud, frame, spec)
        for idx in range(len(cloud)):
            if coords.in_bounds[idx]:
                height_of[round(float(coords.height[idx]), 12)] = int(cloud.labels[idx])
        mlh, lmap = compute_mlh_labeled(cloud, frame, spec)
        for i, j in zip(*np.nonzero(mlh.mask)):
            for k in range(spec.layers):
                key = round(float(mlh.values[i, j, k]), 12)
                assert height_of[key] == lmap.labels[i, j, k]

    def test_unlabeled_cloud_rejected(self):
        with pytest.raises(ValueError, match="labels"):
            compute_mlh_labeled(cloud_in_bin_00([0.1]), identity_frame(), SPEC22)


class TestSlices:
    def test_band_membership(self):
        # depth [-1, 1], c = 5, t = 0.4: slice 3 covers [-0.2, 0.2)
        spec = GridSpec(2, 2, 5, thickness=0.4)
        sl = compute_slices(cloud_in_bin_00([0.1]), identity_frame(), spec)
        assert sl.values[0, 0].tolist() == [0, 0, 1, 0, 0]
        assert np.allclose(sl.slice_centers, [-0.8, -0.4, 0.0, 0.4, 0.8])

    def test_interval_oracle_random(self, rng):
        spec = GridSpec(4, 4, 6, thickness=0.21)
        cloud = random_cloud(rng, 500)
        sl = compute_slices(cloud, identity_frame(), spec)
        step = 2.0 / 6
        for k, center in enumerate(sl.slice_centers):
            assert center == pytest.approx(-1 + (k + 0.5) * step, abs=1e-12)
        # check a sample of cells against direct interval membership
        for _ in range(200):
            i, j, k = rng.integers(0, 4), rng.integers(0, 4), rng.integers(0, 6)
            center = sl.slice_centers[k]
            inside = (
                (np.abs(cloud.points[:, 0] - (-1 + (i + 0.5) * 0.5)) <= 0.25)
                & (np.abs(cloud.points[:, 1] - (-1 + (j + 0.5) * 0.5)) <= 0.25)
                & (cloud.points[:, 2] >= center - 0.105)
                & (cloud.points[:, 2] < center + 0.105)
            )
            if inside.any():
                assert sl.values[i, j, k] == 1

    def test_empty_cloud_all_zero(self):
        spec = GridSpec(3, 3, 4, thickness=0.5)
        sl = compute_slices(PointCloud(np.empty((0, 3))), identity_frame(), spec)
        assert not sl.values.any()

    def test_thickness_required(self):
        with pytest.raises(ValueError, match="thickness"):
            compute_slices(cloud_in_bin_00([0.1]), identity_frame(), GridSpec(2, 2, 5))

    def test_single_layer_is_mid_section(self):
        spec = GridSpec(2, 2, 1, thickness=0.5)
        sl = compute_slices(cloud_in_bin_00([0.1]), identity_frame(), spec)
        assert sl.slice_centers[0] == pytest.approx(0.0, abs=1e-15)
        assert sl.values[0, 0, 0] == 1
        far = compute_slices(cloud_in_bin_00([0.9]), identity_frame(), spec)
        assert far.values[0, 0, 0] == 0


class TestVolume:
    def test_hand_binning(self):
        spec = GridSpec(2, 2, 2)
        vol = compute_volume(cloud_in_bin_00([0.5]), identity_frame(), spec)
        expected = np.zeros((2, 2, 2), dtype=np.uint8)
        expected[0, 0, 1] = 1
        assert np.array_equal(vol.values, expected)

    def test_occupancy_idempotent_under_duplication(self, rng):
        spec = GridSpec(6, 6, 4)
        cloud = random_cloud(rng, 400)
        doubled = PointCloud(np.concatenate([cloud.points, cloud.points]))
        a = compute_volume(cloud, identity_frame(), spec)
        b = compute_volume(doubled, identity_frame(), spec)
        assert np.array_equal(a.values, b.values)

    def test_monotone_in_the_cloud(self, rng):
        spec = GridSpec(5, 5, 3)
        base = random_cloud(rng, 200)
        more = PointCloud(np.concatenate([base.points, rng.uniform(-1, 1, (100, 3))]))
        a = compute_volume(base, identity_frame(), spec)
        b = compute_volume(more, identity_frame(), spec)
        assert (b.values >= a.values).all()


class TestSliceVolumeReduction:
    def test_reduction_on_random_clouds(self, rng):
        frame = z_ring_orientations(8)[5]
        for _ in range(25):
            layers = int(rng.integers(1, 9))
            spec = GridSpec(8, 8, layers)
            spec = GridSpec(8, 8, layers, thickness=spec.depth_step)
            cloud = random_cloud(rng, int(rng.integers(100, 2000)))
            sl = compute_slices(cloud, frame, spec)
            vol = compute_volume(cloud, frame, spec)
            assert np.array_equal(sl.values, vol.values)

    def test_reduction_at_exact_binary_boundaries(self):
        # points sitting exactly on bin edges, including the depth maximum
        spec = GridSpec(2, 2, 4, thickness=0.5)
        heights = [-1.0, -0.5, -0.25, 0.0, 0.5, 0.75, 1.0]
        cloud = cloud_in_bin_00(heights)
        sl = compute_slices(cloud, identity_frame(), spec)
        vol = compute_volume(cloud, identity_frame(), spec)
        assert np.array_equal(sl.values, vol.values)
        assert vol.values[0, 0].tolist() == [1, 1, 1, 1]


class TestCyclicShiftEquivariance:
    def test_rotated_cloud_shifts_descriptors(self, rng):
        m = 12
        frames = z_ring_orientations(m)
        spec = GridSpec(8, 8, 3)
        cloud = self._margin_cloud(rng, frames, spec, 1200)
        base = [compute_mlh(cloud, f, spec) for f in frames]
        for shift in (1, 4, 7):
            a = 2 * math.pi * shift / m
            rot = np.array(
                [[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1]]
            )
            rotated = PointCloud(cloud.points @ rot.T)
            moved = [compute_mlh(rotated, f, spec) for f in frames]
            for j in range(m):
                ref = base[(j - shift) % m]
                assert np.array_equal(moved[j].mask, ref.mask)
                assert np.abs(moved[j].values - ref.values).max() <= 1e-5

    @staticmethod
    def _margin_cloud(rng, frames, spec, n, margin=1e-3):
        """Uniform cloud with every point at least ``margin`` away from all
        bin boundaries under every frame."""
        pts = rng.uniform(-0.95, 0.95, (n, 3))
        keep = np.ones(len(pts), dtype=bool)
        for frame in frames:
            for axis, (lo, hi), bins in (
                (frame.u, spec.extent_u, spec.h),
                (frame.v, spec.extent_v, spec.w),
            ):
                coord = pts @ axis
                frac = (coord - lo) / ((hi - lo) / bins)
                dist = np.minimum(frac - np.floor(frac), np.ceil(frac) - frac)
                keep &= dist * ((hi - lo) / bins) >= margin
        return PointCloud(pts[keep])
