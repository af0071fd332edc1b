"""Deterministic synthetic labelled documents and corpus persistence.

Pages mix printed text (embedded bitmap font), simulated handwriting and
noise, laid out as free text, forms or tables. Every ink pixel carries a
ground-truth class: 1 handwritten, 2 printed, 3 noise.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import netpbm
from ._font import DIGITS, GLYPH_HEIGHT, LETTERS, glyph
from .raster import BinaryImage, rotate_raster

HAND, PRINT, NOISE = 1, 2, 3
STRUCTURES = ("free", "form", "table")
MANIFEST_HEADER = "# hpsep corpus manifest v1"
MASK64 = (1 << 64) - 1


class LayoutError(ValueError):
    """The requested content does not fit on the page."""


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class PageSpec:
    seed: int
    dpi: int = 300
    width: int = 1100
    height: int = 1400
    structure: str = "free"
    rows: int = 18
    font_scale: int = 3
    hand_fraction: float = 0.3
    pepper_density: float = 0.002
    salt_fraction: float = 0.005
    blob_count: int = 10
    print_wear: float = 0.0
    skew: float = 0.0
    border: bool = False
    intra_gap: tuple[int, int] = (2, 3)
    inter_gap: tuple[int, int] = (8, 14)
    margin: int = 60

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"structure must be one of {STRUCTURES}")
        if self.intra_gap[0] > self.intra_gap[1] or self.inter_gap[0] > self.inter_gap[1]:
            raise ValueError("gap ranges must be ordered (lo, hi)")
        if self.intra_gap[1] >= self.inter_gap[0]:
            raise ValueError("intra-word gaps must all be smaller than inter-word gaps")
        if self.intra_gap[0] < 1:
            raise ValueError("intra-word gap must be >= 1 px to keep glyphs apart")
        object.__setattr__(self, "intra_gap", tuple(int(v) for v in self.intra_gap))
        object.__setattr__(self, "inter_gap", tuple(int(v) for v in self.inter_gap))

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "PageSpec":
        d = json.loads(text)
        d["intra_gap"] = tuple(d["intra_gap"])
        d["inter_gap"] = tuple(d["inter_gap"])
        return cls(**d)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# seeds

def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (next_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive_seeds(master_seed: int, n: int) -> list[int]:
    state = master_seed & MASK64
    out = []
    for _ in range(n):
        state, value = splitmix64(state)
        out.append(value)
    return out


def random_page_spec(seed: int, **overrides) -> PageSpec:
    """Page parameters drawn from ``seed`` across the free/form/table spectrum."""
    rng = np.random.default_rng(seed)
    fields = dict(
        seed=seed,
        structure=STRUCTURES[int(rng.integers(3))],
        rows=int(rng.integers(12, 19)),
        font_scale=int(rng.choice([3, 3, 4])),
        hand_fraction=float(np.round(rng.uniform(0.2, 0.45), 3)),
        pepper_density=float(np.round(rng.uniform(0.0005, 0.003), 5)),
        salt_fraction=float(np.round(rng.uniform(0.0, 0.01), 4)),
        blob_count=int(rng.integers(4, 16)),
        print_wear=float(np.round(rng.uniform(0.0, 0.3), 3)),
        skew=float(np.round(rng.uniform(-3.0, 3.0), 2)),
        border=bool(rng.random() < 0.5),
    )
    fields.update(overrides)
    spec = PageSpec(**fields)
    # drop rows until the drawn content fits; explicit specs still raise
    while "rows" not in overrides and spec.rows > 1 and not layout_fits(spec):
        spec = dataclasses.replace(spec, rows=spec.rows - 1)
    return spec


# ---------------------------------------------------------------------------
# printed text

def _random_word(rng, kind: str) -> str:
    if kind == "number":
        n = int(rng.integers(1, 7))
        return "".join(DIGITS[int(i)] for i in rng.integers(0, 10, n))
    n = int(rng.integers(1, 10))
    lower = LETTERS[26:]
    word = "".join(lower[int(i)] for i in rng.integers(0, 26, n))
    if rng.random() < 0.3:
        word = LETTERS[int(rng.integers(26))] + word[1:]
    if rng.random() < 0.08:
        word += str(rng.choice(list(".,:")))
    return word


_ACCENTS = (
    np.array([[0, 0, 1], [0, 1, 0]], dtype=bool),  # acute
    np.array([[1, 0, 0], [0, 1, 0]], dtype=bool),  # grave
    np.array([[0, 1, 0], [1, 0, 1]], dtype=bool),  # circumflex
)
ACCENT_PROB = 0.12


def render_printed_word(text: str, scale: int, gap_range, rng, bold: bool = False,
                        accents: bool = False) -> np.ndarray:
    """Word bitmap with letter gaps drawn from ``gap_range`` (pixels).

    With ``accents``, lowercase vowels sometimes carry a detached diacritic
    drawn above the glyph cell.
    """
    pad = 3 * scale
    parts, marks, x = [], [], 0
    for t, ch in enumerate(text):
        g = glyph(ch, scale)
        if bold:
            g = np.hstack([g, np.zeros((g.shape[0], 1), dtype=bool)])
            g[:, 1:] |= g[:, :-1].copy()
        if t:
            gap = int(rng.integers(gap_range[0], gap_range[1] + 1))
            parts.append(np.zeros((g.shape[0], gap), dtype=bool))
            x += gap
        if accents and ch in "aeou" and rng.random() < ACCENT_PROB:
            mark = np.kron(_ACCENTS[int(rng.integers(len(_ACCENTS)))], np.ones((scale, scale), dtype=bool))
            marks.append((x + max(0, (g.shape[1] - mark.shape[1]) // 2), mark))
        parts.append(g)
        x += g.shape[1]
    word = np.hstack(parts)
    if not marks:
        return word
    out = np.zeros((word.shape[0] + pad, word.shape[1]), dtype=bool)
    out[pad:] = word
    for mx, mark in marks:
        w = min(mark.shape[1], out.shape[1] - mx)
        out[:mark.shape[0], mx:mx + w] |= mark[:, :w]
    return out


def _shear(bm: np.ndarray, slant: float) -> np.ndarray:
    """Italicize: shift each row right in proportion to its height above the bottom."""
    h, w = bm.shape
    extra = int(math.ceil(slant * (h - 1)))
    out = np.zeros((h, w + extra), dtype=bool)
    for y in range(h):
        dx = int(round(slant * (h - 1 - y)))
        out[y, dx:dx + w] = bm[y]
    return out


def _degrade(bm: np.ndarray, rng, wear: float) -> np.ndarray:
    """Worn print: eat into stroke edges with probability ``wear``."""
    if wear <= 0:
        return bm
    inner = bm.copy()
    inner[1:-1, 1:-1] &= bm[:-2, 1:-1] & bm[2:, 1:-1] & bm[1:-1, :-2] & bm[1:-1, 2:]
    edge = bm & ~inner
    out = bm & ~(edge & (rng.random(bm.shape) < wear))
    return out if out.any() else bm


def render_printed_line(words, scale: int, intra, inter, rng) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Bitmap of a printed line plus the (x_start, x_end) span of each word."""
    pieces, spans, x = [], [], 0
    h = GLYPH_HEIGHT * scale
    for i, word in enumerate(words):
        if i:
            gap = int(rng.integers(inter[0], inter[1] + 1))
            pieces.append(np.zeros((h, gap), dtype=bool))
            x += gap
        bm = render_printed_word(word, scale, intra, rng)
        pieces.append(bm)
        spans.append((x, x + bm.shape[1] - 1))
        x += bm.shape[1]
    return np.hstack(pieces), spans


# ---------------------------------------------------------------------------
# handwriting

_LETTER_SHAPES = {
    # control points (u, v): u in letter widths, v in x-heights above baseline
    "n": [(0.0, 0.0), (0.15, 0.9), (0.45, 1.05), (0.8, 0.6), (1.0, 0.0)],
    "o": [(0.0, 0.2), (0.6, 1.0), (0.15, 0.9), (0.1, 0.2), (0.6, 0.05), (0.8, 0.9), (1.0, 0.3)],
    "e": [(0.0, 0.2), (0.7, 0.55), (0.55, 0.95), (0.15, 0.6), (0.4, 0.0), (1.0, 0.3)],
    "l": [(0.0, 0.2), (0.55, 1.4), (0.6, 2.0), (0.3, 1.7), (0.35, 0.1), (1.0, 0.3)],
    "g": [(0.0, 0.6), (0.6, 1.0), (0.1, 0.8), (0.2, 0.1), (0.8, 0.9), (0.7, -0.8), (0.2, -0.6), (1.0, 0.2)],
    "u": [(0.0, 0.9), (0.2, 0.1), (0.5, 0.05), (0.75, 1.0), (0.85, 0.0), (1.0, 0.3)],
    "t": [(0.0, 0.3), (0.45, 1.7), (0.4, 0.1), (1.0, 0.3)],
}
_SHAPE_KEYS = tuple(_LETTER_SHAPES)


def _catmull_rom(points: np.ndarray, step: float = 0.5) -> np.ndarray:
    if len(points) < 2:
        return points
    p = np.vstack([points[0], points, points[-1]])
    out = []
    for i in range(1, len(p) - 2):
        p0, p1, p2, p3 = p[i - 1], p[i], p[i + 1], p[i + 2]
        n = max(2, int(math.ceil(np.linalg.norm(p2 - p1) / step)))
        t = np.linspace(0.0, 1.0, n, endpoint=False)[:, None]
        out.append(0.5 * ((2 * p1) + (-p0 + p2) * t + (2 * p0 - 5 * p1 + 4 * p2 - p3) * t ** 2
                          + (-p0 + 3 * p1 - 3 * p2 + p3) * t ** 3))
    out.append(p[-2][None, :])
    return np.vstack(out)


def _stamp(canvas: np.ndarray, pts: np.ndarray, radii: np.ndarray) -> None:
    """Draw discs of the given radii centered on ``pts`` (x, y) into a bool canvas."""
    rmax = int(math.ceil(radii.max()))
    oy, ox = np.mgrid[-rmax:rmax + 1, -rmax:rmax + 1]
    d2 = (ox * ox + oy * oy).ravel()
    ox, oy = ox.ravel(), oy.ravel()
    cx = np.rint(pts[:, 0]).astype(np.int64)
    cy = np.rint(pts[:, 1]).astype(np.int64)
    keep = d2[None, :] <= (radii[:, None] ** 2)
    xs = (cx[:, None] + ox[None, :])[keep]
    ys = (cy[:, None] + oy[None, :])[keep]
    ok = (xs >= 0) & (xs < canvas.shape[1]) & (ys >= 0) & (ys < canvas.shape[0])
    canvas[ys[ok], xs[ok]] = True


def render_hand_word(rng, n_letters: int, xh: float, thickness: float,
                     lift_prob: float = 0.2) -> tuple[np.ndarray, int]:
    """Cursive-like word: jittered spline strokes with pen lifts, slant and variable width.

    ``lift_prob`` is the chance of lifting the pen between letters; 1.0 gives
    block letters.

    Returns the bitmap and the baseline row within it.
    """
    slant = rng.uniform(-0.1, 0.45)
    slope = math.radians(rng.uniform(-6, 6))
    strokes: list[list[tuple[float, float]]] = [[]]
    dots = []
    x = 0.0
    for _ in range(n_letters):
        key = _SHAPE_KEYS[int(rng.integers(len(_SHAPE_KEYS)))]
        w = xh * rng.uniform(0.6, 1.15)
        if strokes[-1] and rng.random() < lift_prob:
            x += rng.uniform(2, 5) + thickness
            strokes.append([])
        for u, v in _LETTER_SHAPES[key]:
            jx = rng.normal(0, 0.06) * xh
            jy = rng.normal(0, 0.08) * xh
            strokes[-1].append((x + u * w + jx, -v * xh + jy))
        if key == "u" and rng.random() < 0.4:
            dots.append((x + 0.4 * w, -1.6 * xh))
        x += w
    pts_all, rad_all = [], []
    for stroke in strokes:
        if len(stroke) < 2:
            continue
        curve = _catmull_rom(np.asarray(stroke), 0.4)
        n = len(curve)
        phase = rng.uniform(0, 2 * math.pi)
        radii = thickness / 2 * (1 + 0.3 * np.sin(np.linspace(0, rng.uniform(2, 6), n) + phase))
        radii = np.maximum(radii + rng.normal(0, 0.08, n), 0.7)
        pts_all.append(curve)
        rad_all.append(radii)
    for dx, dy in dots:
        pts_all.append(np.array([[dx, dy]]))
        rad_all.append(np.array([thickness * 0.7]))
    pts = np.vstack(pts_all)
    radii = np.concatenate(rad_all)
    # slant then baseline slope
    pts[:, 0] = pts[:, 0] - slant * pts[:, 1]
    c, s = math.cos(slope), math.sin(slope)
    px = c * pts[:, 0] - s * pts[:, 1]
    py = s * pts[:, 0] + c * pts[:, 1]
    pad = int(math.ceil(radii.max())) + 1
    x0 = math.floor(px.min()) - pad
    y0 = math.floor(py.min()) - pad
    w = int(math.ceil(px.max())) + pad - x0 + 1
    h = int(math.ceil(py.max())) + pad - y0 + 1
    canvas = np.zeros((h, w), dtype=bool)
    _stamp(canvas, np.column_stack([px - x0, py - y0]), radii)
    return canvas, -y0


def _trim(bm: np.ndarray, baseline: int) -> tuple[np.ndarray, int]:
    rows = np.nonzero(bm.any(axis=1))[0]
    cols = np.nonzero(bm.any(axis=0))[0]
    return bm[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1], baseline - rows[0]


# ---------------------------------------------------------------------------
# page composition

class _Page:
    def __init__(self, spec: PageSpec, rng):
        self.spec = spec
        self.rng = rng
        self.labels = np.zeros((spec.height, spec.width), dtype=np.uint8)
        self.x_lo = spec.margin
        self.x_hi = spec.width - spec.margin
        self.y = spec.margin

    def paste(self, bm: np.ndarray, x: int, y: int, label: int) -> None:
        h, w = bm.shape
        region = self.labels[y:y + h, x:x + w]
        region[bm[:region.shape[0], :region.shape[1]]] = label

    # row builders return the list of (bitmap, x, baseline_offset, label) items

    def printed_items(self, x: int, max_x: int, n_words: int | None = None, kind: str = "text"):
        spec, rng = self.spec, self.rng
        scale = max(2, spec.font_scale + int(rng.integers(-1, 2)))
        bold = rng.random() < 0.2
        italic = rng.random() < 0.15
        items = []
        while True:
            if n_words is not None and len(items) >= n_words:
                break
            if kind == "text" and items and rng.random() < 0.06:
                word = str(rng.choice(["-", ".", ":", "/"]))
            else:
                word = _random_word(rng, "number" if kind == "number" else "text")
            bm = render_printed_word(word, scale, spec.intra_gap, rng, bold, kind == "text")
            if italic:
                bm = _shear(bm, 0.25)
            bm = _degrade(bm, rng, spec.print_wear)
            if x + bm.shape[1] > max_x:
                break
            items.append((bm, x, bm.shape[0], PRINT))
            x += bm.shape[1] + int(rng.integers(spec.inter_gap[0], spec.inter_gap[1] + 1))
        return items, x

    def hand_items(self, x: int, max_x: int, n_words: int | None = None):
        spec, rng = self.spec, self.rng
        xh = spec.font_scale * rng.uniform(4.5, 7.0)
        thick = rng.uniform(2.0, 4.0)
        lift = 1.0 if rng.random() < 0.3 else 0.2  # block letters or cursive
        items = []
        while n_words is None or len(items) < n_words:
            bm, base = _trim(*render_hand_word(rng, int(rng.integers(2, 8)), xh, thick, lift))
            if x + bm.shape[1] > max_x:
                break
            items.append((bm, x, base, HAND))
            x += bm.shape[1] + int(rng.integers(max(spec.inter_gap[1] + 8, 22), 48))
        return items, x

    def place_row(self, items) -> None:
        if not items:
            return
        asc = max(base for _, _, base, _ in items)
        desc = max(bm.shape[0] - base for bm, _, base, _ in items)
        top = self.y
        if top + asc + desc > self.spec.height - self.spec.margin:
            raise LayoutError(f"page {self.spec.seed}: rows do not fit in height {self.spec.height}")
        baseline = top + asc
        for bm, x, base, label in items:
            self.paste(bm, x, baseline - base, label)
        self.y = baseline + desc + int(self.rng.integers(14, 26))

    def is_hand(self) -> bool:
        return self.rng.random() < self.spec.hand_fraction


def _compose(page: _Page) -> None:
    spec, rng = page.spec, page.rng
    if spec.structure == "free":
        row = 0
        while row < spec.rows:
            if page.is_hand():
                # annotation block: a few consecutive handwritten lines
                indent = page.x_lo + int(rng.integers(0, 200))
                for _ in range(min(int(rng.integers(1, 4)), spec.rows - row)):
                    items, _ = page.hand_items(indent, page.x_hi, int(rng.integers(2, 7)))
                    page.place_row(items)
                    row += 1
            else:
                items, _ = page.printed_items(page.x_lo, page.x_hi)
                page.place_row(items)
                row += 1
    elif spec.structure == "form":
        for _ in range(spec.rows):
            items, x = page.printed_items(page.x_lo, page.x_hi, int(rng.integers(1, 4)))
            if items and page.is_hand():
                hand, _ = page.hand_items(x + int(rng.integers(20, 60)), page.x_hi,
                                          int(rng.integers(2, 6)))
                items += hand
            elif rng.random() < 0.5:
                more, _ = page.printed_items(x, page.x_hi, int(rng.integers(1, 5)))
                items += more
            page.place_row(items)
    else:
        ncol = 4 if spec.width >= 900 else 3
        col_w = (page.x_hi - page.x_lo) // ncol
        # columns filled in by hand; the first column holds printed row headers
        hand_cols = [c > 0 and page.is_hand() for c in range(ncol)]
        for row in range(spec.rows):
            items = []
            for c in range(ncol):
                x0 = page.x_lo + c * col_w
                x1 = x0 + col_w - 20
                if row > 0 and hand_cols[c] and rng.random() < 0.85:
                    cell, _ = page.hand_items(x0, x1, int(rng.integers(1, 3)))
                else:
                    kind = "number" if (row > 0 and c > 0) else "text"
                    cell, _ = page.printed_items(x0, x1, int(rng.integers(1, 3)), kind)
                items += cell
            page.place_row(items)


def layout_fits(spec: PageSpec) -> bool:
    try:
        _compose(_Page(spec, np.random.default_rng(spec.seed)))
    except LayoutError:
        return False
    return True


def _free(labels: np.ndarray, y: int, x: int, h: int, w: int, pad: int) -> bool:
    H, W = labels.shape
    y0, x0 = max(0, y - pad), max(0, x - pad)
    y1, x1 = min(H, y + h + pad), min(W, x + w + pad)
    return not labels[y0:y1, x0:x1].any()


def _scribble(rng) -> np.ndarray:
    """Stray pen or scanner stroke."""
    n = int(rng.integers(2, 5))
    pts = np.cumsum(rng.normal(0, 8, (n, 2)), axis=0)
    curve = _catmull_rom(pts, 0.4)
    curve -= curve.min(axis=0) - 3
    w, h = (np.ceil(curve.max(axis=0)) + 4).astype(int)
    canvas = np.zeros((h, w), dtype=bool)
    _stamp(canvas, curve, np.full(len(curve), rng.uniform(0.8, 2.0)))
    return canvas


def _blob(rng) -> np.ndarray:
    size = int(rng.integers(7, 17))
    canvas = np.zeros((size, size), dtype=bool)
    n = int(rng.integers(2, 6))
    centers = rng.uniform(size * 0.3, size * 0.7, (n, 2))
    radii = rng.uniform(1.2, size * 0.3, n)
    _stamp(canvas, centers, radii)
    # ragged edge
    edge = rng.random(canvas.shape) < 0.15
    canvas ^= edge & _dilate(canvas)
    return canvas if canvas.any() else np.ones((3, 3), dtype=bool)


def _dilate(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:] |= mask[:-1]
    out[:-1] |= mask[1:]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


def _add_blobs(page: _Page) -> None:
    spec, rng = page.spec, page.rng
    placed, attempts = 0, 0
    while placed < spec.blob_count and attempts < spec.blob_count * 60:
        attempts += 1
        bm = _scribble(rng) if rng.random() < 0.4 else _blob(rng)
        h, w = bm.shape
        y = int(rng.integers(spec.margin // 2, spec.height - spec.margin // 2 - h))
        x = int(rng.integers(spec.margin // 2, spec.width - spec.margin // 2 - w))
        if _free(page.labels, y, x, h, w, 5):
            page.paste(bm, x, y, NOISE)
            placed += 1


def _add_speckle(labels: np.ndarray, spec: PageSpec, rng) -> None:
    if spec.salt_fraction > 0:
        ink = labels > 0
        salt = ink & (rng.random(labels.shape) < spec.salt_fraction)
        labels[salt] = 0
    if spec.pepper_density > 0:
        pepper = (labels == 0) & (rng.random(labels.shape) < spec.pepper_density)
        labels[pepper] = NOISE


def _add_borders(labels: np.ndarray, rng) -> None:
    H, W = labels.shape
    sides = rng.permutation(4)[:int(rng.integers(1, 3))]
    for side in sides.tolist():
        base = int(rng.integers(6, 26))
        if side in (0, 1):  # left / right
            widths = base + np.clip(np.cumsum(rng.integers(-1, 2, H)), -3, 3)
            for y, wd in enumerate(widths.tolist()):
                if side == 0:
                    labels[y, :wd] = NOISE
                else:
                    labels[y, W - wd:] = NOISE
        else:  # top / bottom
            widths = base + np.clip(np.cumsum(rng.integers(-1, 2, W)), -3, 3)
            for x, wd in enumerate(widths.tolist()):
                if side == 2:
                    labels[:wd, x] = NOISE
                else:
                    labels[H - wd:, x] = NOISE


def generate_page(spec: PageSpec) -> tuple[BinaryImage, np.ndarray]:
    """Render ``spec``: (image, per-pixel truth with 0 background / 1 hand / 2 print / 3 noise)."""
    rng = np.random.default_rng(spec.seed)
    page = _Page(spec, rng)
    _compose(page)
    _add_blobs(page)
    labels = page.labels
    if spec.skew:
        labels = rotate_raster(labels, spec.skew)
    _add_speckle(labels, spec, rng)
    if spec.border:
        _add_borders(labels, rng)
    return BinaryImage((labels > 0).astype(np.uint8), spec.dpi), labels


def generate_printed_line(seed: int, n_words: int = 8, scale: int = 3,
                          intra=(2, 3), inter=(8, 14)):
    """A single printed line image plus its word spans, for segmentation checks."""
    rng = np.random.default_rng(seed)
    words = [_random_word(rng, "text") for _ in range(n_words)]
    words = [w.rstrip(".,:") or "a" for w in words]
    bm, spans = render_printed_line(words, scale, intra, inter, rng)
    pad = 10
    canvas = np.zeros((bm.shape[0] + 2 * pad, bm.shape[1] + 2 * pad), dtype=np.uint8)
    canvas[pad:-pad, pad:-pad] = bm
    return BinaryImage(canvas), [(a + pad, b + pad) for a, b in spans]


# ---------------------------------------------------------------------------
# corpus files

@dataclass(frozen=True)
class ManifestEntry:
    split: str
    image: str
    truth: str
    digest: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    root: Path
    master_seed: int | None = None

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def image_path(self, e: ManifestEntry) -> Path:
        return self.root / e.image

    def truth_path(self, e: ManifestEntry) -> Path:
        return self.root / e.truth


def save_truth(path, truth: np.ndarray) -> None:
    netpbm.write_pgm(path, truth, maxval=3)


def load_truth(path) -> np.ndarray:
    arr, maxval = netpbm.read_pgm(path)
    if maxval != 3:
        raise netpbm.NetpbmError(f"ground truth must have maxval 3, found {maxval}", 0)
    return arr


def dumps_manifest(m: DatasetManifest) -> str:
    lines = [MANIFEST_HEADER]
    if m.master_seed is not None:
        lines.append(f"# master_seed {m.master_seed}")
    lines.append("# split\timage\ttruth\tspec_digest")
    lines += ["\t".join((e.split, e.image, e.truth, e.digest)) for e in m.entries]
    return "\n".join(lines) + "\n"


def load_manifest(path, check_files: bool = True) -> DatasetManifest:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    entries, master = [], None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "master_seed":
                master = int(parts[1])
            continue
        fields = line.split("\t")
        if len(fields) != 4 or fields[0] not in ("train", "test"):
            raise ManifestError(f"{path}:{lineno}: expected 4 tab-separated fields with split train|test")
        entries.append(ManifestEntry(*fields))
    m = DatasetManifest(tuple(entries), path.parent, master)
    if check_files:
        for e in entries:
            for p in (m.image_path(e), m.truth_path(e)):
                if not p.exists():
                    raise FileNotFoundError(f"manifest {path} references missing file {p}")
    return m


def _write_page(args) -> ManifestEntry:
    out, split, idx, seed, overrides = args
    spec = random_page_spec(seed, **overrides)
    img, truth = generate_page(spec)
    stem = f"{split}/page_{idx:04d}"
    netpbm.write_image(out / f"{stem}.pbm", img)
    save_truth(out / f"{stem}.truth.pgm", truth)
    return ManifestEntry(split, f"{stem}.pbm", f"{stem}.truth.pgm", spec.digest)


def generate_corpus(out_dir, n_train: int, n_test: int, master_seed: int, workers: int = 1,
                    **spec_overrides) -> DatasetManifest:
    """Write ``n_train + n_test`` pages and ``manifest.tsv`` under ``out_dir``.

    Page ``i`` uses the ``i``-th splitmix64 output seeded with ``master_seed``;
    training pages come first.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("corpus needs at least one train and one test page")
    out = Path(out_dir)
    for split in ("train", "test"):
        (out / split).mkdir(parents=True, exist_ok=True)
    seeds = derive_seeds(master_seed, n_train + n_test)
    jobs = [(out, "train" if i < n_train else "test", i if i < n_train else i - n_train, seed,
             spec_overrides) for i, seed in enumerate(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_write_page, jobs))
    else:
        entries = [_write_page(j) for j in jobs]
    manifest = DatasetManifest(tuple(entries), out, master_seed)
    netpbm.write_atomic(out / "manifest.tsv", dumps_manifest(manifest).encode("utf-8"))
    return manifest


def corpus_specs(n_train: int, n_test: int, master_seed: int, **overrides):
    """In-memory counterpart of :func:`generate_corpus`: (train specs, test specs)."""
    seeds = derive_seeds(master_seed, n_train + n_test)
    specs = [random_page_spec(s, **overrides) for s in seeds]
    return specs[:n_train], specs[n_train:]


def check_pair(img: BinaryImage, truth: np.ndarray) -> None:
    if truth.shape != img.pixels.shape:
        raise ManifestError(f"truth shape {truth.shape} does not match image {img.pixels.shape}")
    if not np.array_equal(truth > 0, img.pixels > 0):
        raise ManifestError("truth labels do not partition the image ink")

