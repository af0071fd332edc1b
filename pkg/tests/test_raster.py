import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hpsep.raster import (BinaryImage, BoundingBox, ParameterError, connected_components,
                          label_components, projection_profile, rotate, rotate_raster,
                          rotation_source_map)
from oracles import flood_fill_components


def _partition(components):
    return sorted(sorted(zip(*(a.tolist() for a in cc.pixel_coords()))) for cc in components)


class TestBinaryImage:
    def test_pixels_are_read_only_copy(self):
        src = np.zeros((3, 4), dtype=np.uint8)
        img = BinaryImage(src)
        src[0, 0] = 1
        assert img.ink == 0
        with pytest.raises(ValueError):
            img.pixels[0, 0] = 1

    def test_shape_and_dpi(self):
        img = BinaryImage.blank(5, 2, dpi=150)
        assert (img.width, img.height, img.dpi) == (5, 2, 150)

    @pytest.mark.parametrize("shape", [(0, 3), (3, 0), (3,)])
    def test_rejects_empty(self, shape):
        with pytest.raises(ParameterError):
            BinaryImage(np.zeros(shape, dtype=np.uint8))

    def test_rejects_bad_dpi(self):
        with pytest.raises(ParameterError):
            BinaryImage(np.zeros((2, 2)), dpi=0)

    def test_nonbinary_values_become_ink(self):
        img = BinaryImage(np.array([[0, 7], [255, 0]]))
        assert img.pixels.tolist() == [[0, 1], [1, 0]]

    def test_equality(self):
        a = BinaryImage(np.eye(3))
        assert a == BinaryImage(np.eye(3))
        assert a != BinaryImage(np.eye(3), dpi=200)


class TestBoundingBox:
    def test_dimensions_inclusive(self):
        b = BoundingBox(2, 3, 4, 3)
        assert (b.width, b.height) == (3, 1)

    def test_invalid(self):
        with pytest.raises(ValueError):
            BoundingBox(3, 0, 2, 0)

    def test_union(self):
        b = BoundingBox.union_all([BoundingBox(0, 5, 1, 6), BoundingBox(4, 1, 4, 2)])
        assert b == BoundingBox(0, 1, 4, 6)


class TestConnectedComponents:
    def test_diagonal_pixels_eight_connected(self):
        img = BinaryImage(np.array([[1, 0], [0, 1]]))
        ccs = connected_components(img, 8)
        assert len(ccs) == 1 and ccs[0].pixel_count == 2

    def test_diagonal_pixels_four_connected(self):
        img = BinaryImage(np.array([[1, 0], [0, 1]]))
        assert len(connected_components(img, 4)) == 2

    def test_empty(self):
        assert connected_components(BinaryImage.blank(4, 4)) == []

    def test_bad_connectivity(self):
        with pytest.raises(ParameterError):
            connected_components(BinaryImage.blank(2, 2), 6)

    def test_order_and_stats(self):
        px = np.zeros((6, 8), dtype=np.uint8)
        px[4, 0:2] = 1      # lower
        px[1, 5] = 1        # upper right
        px[1:3, 2] = 1      # upper left, same y_min
        ccs = connected_components(BinaryImage(px))
        assert [(c.bbox.y_min, c.bbox.x_min) for c in ccs] == [(1, 2), (1, 5), (4, 0)]
        c = ccs[0]
        assert c.pixel_count == 2 and c.centroid == (2.0, 1.5)
        assert c.bbox.x_min <= c.centroid[0] <= c.bbox.x_max

    @pytest.mark.parametrize("connectivity", [4, 8])
    def test_matches_flood_fill(self, connectivity, rng):
        for _ in range(100):
            h, w = rng.integers(1, 33, 2)
            px = (rng.random((h, w)) < rng.uniform(0.1, 0.7)).astype(np.uint8)
            ccs = connected_components(BinaryImage(px), connectivity)
            oracle = flood_fill_components(px, connectivity)
            assert _partition(ccs) == sorted(oracle)
            # canonical order agrees too
            assert [(c.bbox.y_min, c.bbox.x_min) for c in ccs] == \
                [(min(p[0] for p in m), min(p[1] for p in m)) for m in oracle]

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20)), elements=st.integers(0, 1)))
    def test_partition_conserves_ink(self, px):
        ccs = connected_components(BinaryImage(px))
        assert sum(c.pixel_count for c in ccs) == int(px.sum())
        for c in ccs:
            assert c.pixel_mask.sum() == c.pixel_count
            x, y = c.centroid
            assert c.bbox.x_min <= x <= c.bbox.x_max and c.bbox.y_min <= y <= c.bbox.y_max

    def test_label_components_stats(self):
        px = np.zeros((3, 3), dtype=np.uint8)
        px[0, 0] = px[2, 2] = 1
        labels, stats = label_components(px, 4)
        assert labels[0, 0] == 1 and labels[2, 2] == 2
        assert stats.tolist() == [[0, 0, 0, 0, 1, 0, 0], [2, 2, 2, 2, 1, 2, 2]]


class TestRotate:
    def test_zero_is_identity(self, rng):
        img = BinaryImage(rng.random((9, 13)) < 0.3)
        assert rotate(img, 0) == img

    def test_center_is_fixed(self):
        px = np.zeros((11, 11), dtype=np.uint8)
        px[5, 5] = 1
        out = rotate(BinaryImage(px), 30)
        assert out.ink == 1 and out.pixels[5, 5] == 1

    def test_bar_rotated_90(self):
        px = np.zeros((5, 5), dtype=np.uint8)
        px[2, 1:4] = 1
        out = rotate(BinaryImage(px), 90).pixels
        expected = np.zeros((5, 5), dtype=np.uint8)
        expected[1:4, 2] = 1
        assert np.array_equal(out, expected)

    def test_positive_angle_is_counter_clockwise(self):
        px = np.zeros((21, 21), dtype=np.uint8)
        px[10, 15] = 1  # right of center
        out = rotate(BinaryImage(px), 90).pixels
        ys, xs = np.nonzero(out)
        assert (ys[0], xs[0]) == (5, 10)  # moved above center

    def test_range(self):
        with pytest.raises(ParameterError):
            rotate(BinaryImage.blank(3, 3), 91)

    def test_label_rasters_keep_values(self):
        lab = np.zeros((9, 9), dtype=np.uint8)
        lab[4, 2:7] = 3
        assert set(np.unique(rotate_raster(lab, 17)).tolist()) <= {0, 3}

    @pytest.mark.parametrize("angle", [-15, -7.5, -2, 3, 10, 15])
    def test_round_trip_recovers_thick_strokes(self, angle, rng):
        px = np.zeros((120, 160), dtype=np.uint8)
        for _ in range(12):
            y, x = rng.integers(20, 100), rng.integers(20, 120)
            if rng.random() < 0.5:
                px[y:y + 3, x:x + rng.integers(10, 40)] = 1
            else:
                px[y:y + rng.integers(10, 20), x:x + 3] = 1
        img = BinaryImage(px)
        back = rotate(rotate(img, angle), -angle)
        kept = np.count_nonzero(back.pixels & img.pixels)
        assert kept >= 0.95 * img.ink

    def test_source_map_agrees_with_rotate(self, rng):
        px = (rng.random((15, 22)) < 0.4).astype(np.uint8)
        sx, sy, valid = rotation_source_map(22, 15, 12.5)
        out = rotate(BinaryImage(px), 12.5).pixels
        expected = np.zeros_like(px)
        expected[valid] = px[sy[valid], sx[valid]]
        assert np.array_equal(out, expected)


class TestProjectionProfile:
    def test_white(self):
        assert projection_profile(BinaryImage.blank(4, 4)).tolist() == [0, 0, 0, 0]

    def test_black_two_by_three(self):
        img = BinaryImage(np.ones((3, 2)))
        assert projection_profile(img, "horizontal").tolist() == [2, 2, 2]
        assert projection_profile(img, "vertical").tolist() == [3, 3]

    def test_mass_conservation(self, rng):
        img = BinaryImage(rng.random((16, 16)) < 0.5)
        for axis in ("horizontal", "vertical"):
            assert projection_profile(img, axis).sum() == img.ink

    def test_bad_axis(self):
        with pytest.raises(ParameterError):
            projection_profile(BinaryImage.blank(2, 2), "diagonal")
