"""Binary netpbm I/O: PBM (P4), PGM (P5, maxval < 256) and PPM (P6)."""
from __future__ import annotations

import os
import re
import tempfile

import numpy as np

from .raster import BinaryImage

_DPI_RE = re.compile(rb"#\s*dpi\s+(\d+)")


class NetpbmError(ValueError):
    """Malformed netpbm data; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def _read_header(data: bytes, n_fields: int):
    """Parse magic plus ``n_fields`` integers; return (magic, values, data_start)."""
    if len(data) < 2:
        raise NetpbmError("file too short for a netpbm magic number", 0)
    magic = data[:2].decode("latin-1")
    pos = 2
    values = []
    while len(values) < n_fields:
        if pos >= len(data):
            raise NetpbmError("truncated header", pos)
        ch = data[pos:pos + 1]
        if ch in b" \t\r\n\v\f":
            pos += 1
        elif ch == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise NetpbmError("unterminated header comment", pos)
            pos = end + 1
        elif ch.isdigit():
            start = pos
            while pos < len(data) and data[pos:pos + 1].isdigit():
                pos += 1
            values.append(int(data[start:pos]))
        else:
            raise NetpbmError(f"unexpected byte {ch!r} in header", pos)
    if pos >= len(data) or data[pos:pos + 1] not in b" \t\r\n\v\f":
        raise NetpbmError("missing whitespace after header", pos)
    return magic, values, pos + 1


def decode_pbm(data: bytes) -> np.ndarray:
    magic, (w, h), start = _read_header(data, 2)
    if magic != "P4":
        raise NetpbmError(f"expected P4 magic, found {magic!r}", 0)
    if w <= 0 or h <= 0:
        raise NetpbmError(f"invalid dimensions {w}x{h}", 2)
    row_bytes = (w + 7) // 8
    need = row_bytes * h
    if len(data) - start < need:
        raise NetpbmError(f"truncated raster: need {need} bytes, have {len(data) - start}",
                          len(data))
    packed = np.frombuffer(data, dtype=np.uint8, count=need, offset=start).reshape(h, row_bytes)
    return np.unpackbits(packed, axis=1)[:, :w].copy()


def encode_pbm(pixels: np.ndarray, dpi: int | None = None) -> bytes:
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    comment = f"# dpi {dpi}\n" if dpi is not None else ""
    header = f"P4\n{comment}{w} {h}\n".encode("ascii")
    return header + np.packbits(pixels > 0, axis=1).tobytes()


def decode_pgm(data: bytes) -> tuple[np.ndarray, int]:
    magic, (w, h, maxval), start = _read_header(data, 3)
    if magic != "P5":
        raise NetpbmError(f"expected P5 magic, found {magic!r}", 0)
    if w <= 0 or h <= 0:
        raise NetpbmError(f"invalid dimensions {w}x{h}", 2)
    if not 0 < maxval < 256:
        raise NetpbmError(f"unsupported maxval {maxval}", start - 1)
    need = w * h
    if len(data) - start < need:
        raise NetpbmError(f"truncated raster: need {need} bytes, have {len(data) - start}",
                          len(data))
    arr = np.frombuffer(data, dtype=np.uint8, count=need, offset=start).reshape(h, w).copy()
    bad = np.flatnonzero(arr > maxval)
    if bad.size:
        raise NetpbmError(f"sample {arr.flat[bad[0]]} exceeds maxval {maxval}", start + int(bad[0]))
    return arr, maxval


def encode_pgm(values: np.ndarray, maxval: int = 255) -> bytes:
    values = np.asarray(values)
    if values.min(initial=0) < 0 or values.max(initial=0) > maxval:
        raise ValueError(f"values outside [0, {maxval}]")
    h, w = values.shape
    return f"P5\n{w} {h}\n{maxval}\n".encode("ascii") + values.astype(np.uint8).tobytes()


def encode_ppm(rgb: np.ndarray) -> bytes:
    rgb = np.asarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def decode_ppm(data: bytes) -> np.ndarray:
    magic, (w, h, maxval), start = _read_header(data, 3)
    if magic != "P6":
        raise NetpbmError(f"expected P6 magic, found {magic!r}", 0)
    if maxval != 255:
        raise NetpbmError(f"unsupported maxval {maxval}", start - 1)
    need = w * h * 3
    if len(data) - start < need:
        raise NetpbmError("truncated raster", len(data))
    return np.frombuffer(data, dtype=np.uint8, count=need, offset=start).reshape(h, w, 3).copy()


def write_atomic(path, payload: bytes) -> None:
    """Write ``payload`` to ``path`` via a temp file in the same directory and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_pbm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_pbm(fh.read())


def write_pbm(path, pixels: np.ndarray) -> None:
    write_atomic(path, encode_pbm(pixels))


def _dpi_comment(data: bytes, default: int) -> int:
    _, _, start = _read_header(data, 2)
    m = _DPI_RE.search(data[:start])
    return int(m.group(1)) if m else default


def read_image(path, default_dpi: int = 300) -> BinaryImage:
    """Load a PBM as a :class:`BinaryImage`; a ``# dpi N`` header comment sets the resolution."""
    with open(path, "rb") as fh:
        data = fh.read()
    pixels = decode_pbm(data)
    return BinaryImage(pixels, _dpi_comment(data, default_dpi))


def write_image(path, img: BinaryImage) -> None:
    write_atomic(path, encode_pbm(img.pixels, img.dpi))


def read_pgm(path) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def write_pgm(path, values: np.ndarray, maxval: int = 255) -> None:
    write_atomic(path, encode_pgm(values, maxval))


def write_ppm(path, rgb: np.ndarray) -> None:
    write_atomic(path, encode_ppm(rgb))
