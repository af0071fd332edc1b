import numpy as np
import pytest

from hpsep.netpbm import (NetpbmError, decode_pbm, decode_pgm, decode_ppm, encode_pbm, encode_pgm,
                          encode_ppm, read_image, read_pgm, write_image, write_pgm)
from hpsep.raster import BinaryImage


class TestPbm:
    @pytest.mark.parametrize("shape", [(1, 1), (3, 8), (5, 9), (17, 31)])
    def test_round_trip(self, shape, rng):
        px = (rng.random(shape) < 0.5).astype(np.uint8)
        assert np.array_equal(decode_pbm(encode_pbm(px)), px)

    def test_header_bytes(self):
        data = encode_pbm(np.array([[1, 0, 1]]), dpi=150)
        assert data == b"P4\n# dpi 150\n3 1\n" + bytes([0b10100000])

    def test_comments_and_whitespace_tolerated(self):
        data = b"P4 # note\n 2\t2\n" + bytes([0b10000000, 0b01000000])
        assert decode_pbm(data).tolist() == [[1, 0], [0, 1]]

    def test_truncated_raster_reports_offset(self):
        data = encode_pbm(np.ones((4, 4), dtype=np.uint8))[:-2]
        with pytest.raises(NetpbmError) as err:
            decode_pbm(data)
        assert err.value.offset == len(data)

    def test_bad_magic(self):
        with pytest.raises(NetpbmError) as err:
            decode_pbm(b"P1\n2 2\n0 1 1 0\n")
        assert err.value.offset == 0

    @pytest.mark.parametrize("data", [b"", b"P", b"P4\n3", b"P4\n3 x\n", b"P4\n0 3\n"])
    def test_malformed_headers(self, data):
        with pytest.raises(NetpbmError):
            decode_pbm(data)

    def test_image_dpi_round_trip(self, tmp_path):
        img = BinaryImage(np.eye(5, dtype=np.uint8), dpi=200)
        write_image(tmp_path / "a.pbm", img)
        assert read_image(tmp_path / "a.pbm") == img

    def test_missing_dpi_uses_default(self, tmp_path):
        (tmp_path / "b.pbm").write_bytes(encode_pbm(np.eye(3)))
        assert read_image(tmp_path / "b.pbm", default_dpi=72).dpi == 72


class TestPgmPpm:
    def test_pgm_round_trip(self, tmp_path, rng):
        vals = rng.integers(0, 4, (6, 7)).astype(np.uint8)
        write_pgm(tmp_path / "t.pgm", vals, maxval=3)
        out, maxval = read_pgm(tmp_path / "t.pgm")
        assert maxval == 3 and np.array_equal(out, vals)

    def test_sample_above_maxval(self):
        data = b"P5\n2 1\n3\n" + bytes([1, 9])
        with pytest.raises(NetpbmError) as err:
            decode_pgm(data)
        assert err.value.offset == len(data) - 1

    def test_sixteen_bit_rejected(self):
        with pytest.raises(NetpbmError):
            decode_pgm(b"P5\n1 1\n65535\n\x00\x00")

    def test_encode_checks_range(self):
        with pytest.raises(ValueError):
            encode_pgm(np.array([[4]]), maxval=3)

    def test_ppm_round_trip(self, rng):
        rgb = rng.integers(0, 256, (3, 4, 3)).astype(np.uint8)
        assert np.array_equal(decode_ppm(encode_ppm(rgb)), rgb)
