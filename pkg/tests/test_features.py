import numpy as np
import pytest

from hpsep.corpus import PageSpec, generate_page
from hpsep.features import (FEATURE_NAMES, N_FEATURES, EmptyMaskError, apply_normalization,
                            cooccurrence, crossing_counts, extract_all, extract_features,
                            fit_normalization, hu_moments, invert_normalization, run_length_stats)
from hpsep.raster import BinaryImage
from hpsep.segment import segment_words
from oracles import cooccurrence_oracle, hu_oracle, naive_crossings, naive_runs


def words_of(px):
    return segment_words(BinaryImage(px))


def random_blob(rng, h=14, w=18):
    m = rng.random((h, w)) < 0.55
    m[h // 2, :] = True
    return m


class TestHu:
    def test_single_pixel(self):
        assert np.allclose(hu_moments(np.ones((1, 1), dtype=bool))[1:], 0.0)

    def test_empty_mask(self):
        with pytest.raises(EmptyMaskError):
            hu_moments(np.zeros((3, 3), dtype=bool))

    def test_matches_direct_oracle(self, rng):
        for _ in range(30):
            m = random_blob(rng, *rng.integers(3, 25, 2))
            raw = hu_moments(m, compress=False)
            assert np.allclose(raw, hu_oracle(m), rtol=1e-9, atol=1e-15)

    def test_translation(self, rng):
        m = random_blob(rng)
        big = np.zeros((40, 40), dtype=bool)
        big[7:7 + m.shape[0], 5:5 + m.shape[1]] = m
        assert np.allclose(hu_moments(big), hu_moments(m), rtol=0, atol=1e-9)

    def test_square_scaled(self):
        sq = np.ones((6, 6), dtype=bool)
        assert np.allclose(hu_moments(np.kron(sq, np.ones((2, 2), dtype=bool))), hu_moments(sq),
                           rtol=0, atol=1e-6)

    @pytest.mark.parametrize("factor", [2, 3])
    def test_integer_scaling(self, factor, rng):
        m = random_blob(rng)
        up = np.kron(m, np.ones((factor, factor), dtype=bool))
        a, b = hu_moments(up), hu_moments(m)
        assert np.all(np.abs(a - b) <= 1e-3 * np.maximum(np.abs(b), 1e-12))

    def test_compression_is_signed_log(self, rng):
        m = random_blob(rng)
        raw = hu_moments(m, compress=False)
        assert np.allclose(hu_moments(m), np.sign(raw) * np.log10(1 + np.abs(raw)))


class TestRunsAndCrossings:
    def test_row_example(self):
        stats = run_length_stats(np.array([[1, 1, 1, 0, 1]]))
        assert stats[:2].tolist() == [2.0, 1.0]

    def test_square(self):
        assert run_length_stats(np.ones((5, 5))).tolist() == [5, 0, 5, 0]
        assert crossing_counts(np.ones((5, 5))).tolist() == [1.0, 1.0]

    def test_bar_pair(self):
        assert crossing_counts(np.array([[1, 0, 1]] * 4))[0] == 2.0

    def test_match_scan_oracles(self, rng):
        for _ in range(50):
            m = rng.random(tuple(rng.integers(1, 20, 2))) < 0.5
            m[0, 0] = True
            h, v = naive_runs(m)
            expected = [np.mean(h), np.std(h), np.mean(v), np.std(v)]
            assert np.allclose(run_length_stats(m), expected, rtol=1e-12)
            assert np.allclose(crossing_counts(m), naive_crossings(m), rtol=1e-12)


class TestCooccurrence:
    def test_black(self):
        assert cooccurrence(np.ones((3, 3))).tolist() == [1.0] * 4

    def test_white(self):
        assert cooccurrence(np.zeros((3, 3))).tolist() == [0.0] * 4

    def test_checkerboard(self):
        board = (np.add.outer(np.arange(4), np.arange(4)) % 2 == 0)
        out = cooccurrence(board)
        assert out.tolist() == [0.0, 0.0, 1.0, 1.0]
        assert out.tolist() == cooccurrence_oracle(board)

    def test_one_pixel_wide(self):
        out = cooccurrence(np.ones((5, 1)))
        assert out.tolist() == [0.0, 1.0, 0.0, 0.0]

    def test_matches_pair_enumeration(self, rng):
        for _ in range(40):
            m = rng.random(tuple(rng.integers(1, 16, 2))) < 0.5
            assert np.allclose(cooccurrence(m), cooccurrence_oracle(m), rtol=1e-12)


class TestExtractFeatures:
    def test_solid_word(self):
        px = np.zeros((30, 40), dtype=np.uint8)
        px[5:15, 10:30] = 1
        (w,) = words_of(px)
        f = extract_features(w)
        assert f.shape == (N_FEATURES,) and len(FEATURE_NAMES) == 35
        assert f[:5].tolist() == [10, 20, 2.0, 200, 1.0]
        assert f[5] == 1 and f[[7, 9, 11, 13, 14, 15]].tolist() == [0] * 6

    def test_ranges_and_determinism(self):
        img, _ = generate_page(PageSpec(seed=4, width=600, height=700, rows=8))
        words = segment_words(img)
        X = extract_all(words)
        assert np.all(np.isfinite(X))
        assert np.all((X[:, 4] > 0) & (X[:, 4] <= 1))
        assert np.all((X[:, 31:35] >= 0) & (X[:, 31:35] <= 1))
        std_slots = [7, 9, 11, 13, 15, 26, 28]
        assert np.all(X[:, std_slots] >= 0)
        assert np.array_equal(X, extract_all(words))
        assert np.array_equal(extract_all(words[::-1])[::-1], X)

    def test_empty_list(self):
        assert extract_all([]).shape == (0, N_FEATURES)


class TestNormalization:
    def test_one_dimensional(self):
        stats = fit_normalization([[0.0], [2.0]])
        assert stats.mean.tolist() == [1.0] and stats.std.tolist() == [1.0]
        assert apply_normalization([[0.0], [2.0]], stats).ravel().tolist() == [-1.0, 1.0]

    def test_constant_slot_centered(self):
        stats = fit_normalization([[3.0, 1.0], [3.0, 2.0]])
        assert apply_normalization([[5.0, 1.0]], stats)[0, 0] == 2.0

    def test_round_trip(self, rng):
        X = rng.normal(size=(20, 35)) * 50
        stats = fit_normalization(X)
        assert np.allclose(invert_normalization(apply_normalization(X, stats), stats), X,
                           rtol=1e-12, atol=1e-12)

    def test_needs_two_vectors(self):
        with pytest.raises(ValueError):
            fit_normalization(np.zeros((1, 35)))


def _within_word_variances(mask):
    h, v = naive_runs(mask)
    m = np.asarray(mask, dtype=np.int8)
    rows = (np.diff(np.pad(m, ((0, 0), (1, 0))), axis=1) == 1).sum(axis=1)
    cols = (np.diff(np.pad(m, ((1, 0), (0, 0))), axis=0) == 1).sum(axis=0)
    return np.var(h + v), np.var(rows[rows > 0]) + np.var(cols[cols > 0])


def test_handwriting_more_irregular_than_print():
    acc = {1: [], 2: []}
    for seed in range(3):
        spec = PageSpec(seed=seed, pepper_density=0.0, salt_fraction=0.0, blob_count=0)
        _, truth = generate_page(spec)
        for cls in (1, 2):
            for w in words_of((truth == cls).astype(np.uint8)):
                acc[cls].append(_within_word_variances(w.mask()))
    hand, printed = np.mean(acc[1], axis=0), np.mean(acc[2], axis=0)
    assert hand[0] > printed[0]  # run-length variance
    assert hand[1] > printed[1]  # crossing-count variance
