"""Command-line interface: ``hpsep <subcommand> ...``.

Exit codes:
    0  success
    1  unexpected internal error
    2  usage or configuration error
    3  input file not found
    4  malformed input (image, ground truth, model, manifest)
    5  model / feature-extractor version mismatch
    6  a rate fell below the regression floor
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, netpbm
from ._backend import BACKEND
from .corpus import ManifestError, generate_corpus, load_manifest, load_truth
from .evaluate import DimensionMismatchError, ScoreReport, format_csv, format_table, rate
from .features import FEATURE_NAMES, LAYOUT_VERSION, EmptyMaskError
from .group import GROUPERS
from .pipeline import (ConfigError, PipelineConfig, analyze_page, collect_samples, compare_groupers,
                       cross_validate, fit_model, group_words, prepare_page)
from .preprocess import NoContentError, preprocess_detailed
from .raster import ParameterError
from .svm import CLASSES, DegenerateTrainingSetError, LabelClass, ModelFormatError, ModelVersionError, load_model, save_model

log = logging.getLogger("hpsep")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_FORMAT = 4
EXIT_VERSION = 5
EXIT_FLOOR = 6

LABEL_COLORS = {
    0: (255, 255, 255),
    int(LabelClass.HANDWRITTEN): (220, 0, 0),
    int(LabelClass.PRINTED): (0, 0, 220),
    int(LabelClass.NOISE): (128, 128, 128),
}
LINE_PALETTE = np.array([
    (230, 25, 75), (60, 180, 75), (0, 130, 200), (245, 130, 48),
    (145, 30, 180), (70, 140, 140), (240, 50, 230), (128, 128, 0),
], dtype=np.uint8)


class RegressionFloorError(Exception):
    pass


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers

def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    if args.set:
        cfg = cfg.with_overrides(args.set)
    return cfg


def _emit(text: str) -> None:
    sys.stdout.write(text)
    sys.stdout.flush()


def _write_text(path, text: str) -> None:
    netpbm.write_atomic(path, text.encode("utf-8"))


def _overlay_labels(labels: np.ndarray) -> np.ndarray:
    lut = np.zeros((256, 3), dtype=np.uint8)
    for value, color in LABEL_COLORS.items():
        lut[value] = color
    return lut[labels]


def _overlay_lines(shape, segmentation) -> np.ndarray:
    rgb = np.full(shape + (3,), 255, dtype=np.uint8)
    for word in segmentation.words:
        color = LINE_PALETTE[word.line_id % len(LINE_PALETTE)]
        for cc in word.components:
            rgb[cc.bbox.slices][cc.pixel_mask] = color
        b = word.bbox
        edges = (np.s_[b.y_min, b.x_min:b.x_max + 1], np.s_[b.y_max, b.x_min:b.x_max + 1],
                 np.s_[b.y_min:b.y_max + 1, b.x_min], np.s_[b.y_min:b.y_max + 1, b.x_max])
        for sl in edges:
            seg = rgb[sl]
            seg[(seg == 255).all(axis=-1)] = (180, 180, 180)
    return rgb


def _words_tsv(words, angle: float, labelled: bool) -> str:
    out = io.StringIO()
    out.write("# hpsep words v1\n")
    out.write(f"# layout {LAYOUT_VERSION}\n")
    out.write(f"# deskew_angle {angle!r}\n")
    cols = ["id", "line", "x_min", "y_min", "x_max", "y_max", "pixels"]
    if labelled:
        cols += ["label", "confidence"]
    out.write("\t".join(cols) + "\n")
    for w in words:
        word = w.word if labelled else w
        b = word.bbox
        row = [word.id, word.line_id, b.x_min, b.y_min, b.x_max, b.y_max, word.pixel_count]
        if labelled:
            row += [w.label.key, f"{w.confidence:.6f}"]
        out.write("\t".join(str(v) for v in row) + "\n")
    return out.getvalue()


def _report_text(r: ScoreReport) -> str:
    lines = ["class\trate\tcorrect\tused"]
    for cls, rt, c, u in zip(CLASSES, r.rates, r.correct, r.used):
        lines.append(f"{cls.name.lower()}\t{rt:.6f}\t{c}\t{u}")
    lines.append(f"average\t{r.average:.6f}\t{sum(r.correct)}\t{sum(r.used)}")
    return "\n".join(lines) + "\n"


def _check_floor(reports: dict, floor: float | None) -> list[str]:
    if floor is None:
        return []
    bad = []
    for name, r in reports.items():
        for label, value in zip(("hand", "print", "noise", "average"), (*r.rates, r.average)):
            if not math.isnan(value) and value < floor:
                bad.append(f"{name}/{label}={value:.4f}")
    return bad


# ---------------------------------------------------------------------------
# subcommands

def cmd_show_config(args) -> int:
    _emit(_config(args).to_json())
    return EXIT_OK


def cmd_generate_corpus(args) -> int:
    t0 = time.perf_counter()
    m = generate_corpus(args.out, args.train, args.test, args.seed, workers=args.workers)
    log.info("wrote %d pages in %.1fs", len(m.entries), time.perf_counter() - t0)
    _emit(f"{Path(args.out) / 'manifest.tsv'}\n")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    cfg = _config(args)
    img = netpbm.read_image(args.input, default_dpi=cfg.dpi)
    res = preprocess_detailed(img, cfg.preprocess_config())
    netpbm.write_image(args.output, res.image)
    _emit(json.dumps({"angle": res.angle, "edge_pixels_removed": int(res.edges_removed),
                      "ink_in": int(img.ink), "ink_out": int(res.image.ink)}, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_segment(args) -> int:
    cfg = _config(args)
    img = netpbm.read_image(args.input, default_dpi=cfg.dpi)
    page = prepare_page(img, cfg)
    seg = page.segmentation
    text = _words_tsv(seg.words, page.pre.angle, labelled=False)
    if args.overlay:
        netpbm.write_ppm(args.overlay, _overlay_lines(page.pre.image.pixels.shape, seg))
    if args.words:
        _write_text(args.words, text)
        _emit(f"{len(seg.lines)} lines, {len(seg.words)} words\n")
    else:
        _emit(text)
    return EXIT_OK


def cmd_extract_features(args) -> int:
    cfg = _config(args)
    img = netpbm.read_image(args.input, default_dpi=cfg.dpi)
    page = prepare_page(img, cfg)
    out = io.StringIO()
    out.write(f"# layout {LAYOUT_VERSION}\n")
    out.write("\t".join(("id",) + FEATURE_NAMES) + "\n")
    for w, vec in zip(page.words, page.features):
        out.write("\t".join([str(w.id)] + [repr(float(v)) for v in vec]) + "\n")
    if args.output:
        _write_text(args.output, out.getvalue())
    else:
        _emit(out.getvalue())
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    manifest = load_manifest(args.manifest)
    X, y, pages = collect_samples(manifest, cfg, "train", args.workers)
    log.info("training samples: %d (%s)", len(y),
             ", ".join(f"{c.key}={int((y == c).sum())}" for c in CLASSES))
    lines = []
    if not args.no_cv:
        for i, acc in enumerate(cross_validate(X, y, pages, cfg), start=1):
            lines.append(f"fold {i}\taccuracy {acc:.4f}")
    model = fit_model(X, y, cfg)
    save_model(model, args.model)
    lines.append("support_vectors\t" + " ".join(str(len(m.coef)) for m in model.pairwise))
    _emit("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _config(args)
    model = load_model(args.model)
    img = netpbm.read_image(args.input, default_dpi=cfg.dpi)
    page = analyze_page(img, model, cfg)
    words = group_words(page, cfg)
    labels = page.label_raster(words)
    if args.labels:
        netpbm.write_pgm(args.labels, labels, maxval=3)
    if args.overlay:
        netpbm.write_ppm(args.overlay, _overlay_labels(labels))
    text = _words_tsv(words, page.pre.angle, labelled=True)
    if args.words:
        _write_text(args.words, text)
        counts = {c.key: sum(1 for w in words if w.label == c) for c in CLASSES}
        _emit(" ".join(f"{k}={v}" for k, v in counts.items()) + "\n")
    else:
        _emit(text)
    return EXIT_OK


def cmd_group(args) -> int:
    cfg = _config(args)
    model = load_model(args.model)
    img = netpbm.read_image(args.input, default_dpi=cfg.dpi)
    page = analyze_page(img, model, cfg)
    words = group_words(page, cfg, args.method)
    text = _words_tsv(words, page.pre.angle, labelled=True)
    if args.words:
        _write_text(args.words, text)
        changed = sum(1 for a, b in zip(page.labeled_words(), words) if a.label != b.label)
        _emit(f"{changed} of {len(words)} words relabelled\n")
    else:
        _emit(text)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    pred, _ = netpbm.read_pgm(args.predicted)
    truth = load_truth(args.truth)
    report = rate(pred, truth)
    if args.csv:
        _write_text(args.csv, format_csv({"page": report}))
    _emit(_report_text(report))
    bad = _check_floor({"page": report}, args.floor)
    if bad:
        raise RegressionFloorError("below floor: " + ", ".join(bad))
    return EXIT_OK


def cmd_compare_groupers(args) -> int:
    cfg = _config(args)
    model = load_model(args.model)
    manifest = load_manifest(args.manifest)
    t0 = time.perf_counter()
    reports = compare_groupers(manifest, model, cfg, args.split, args.workers)
    log.info("compared groupers on %d pages in %.1fs", len(manifest.split(args.split)),
             time.perf_counter() - t0)
    if args.csv:
        _write_text(args.csv, format_csv(reports))
    _emit(format_table(reports))
    bad = _check_floor(reports, args.floor)
    if bad:
        raise RegressionFloorError("below floor: " + ", ".join(bad))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with pipeline settings")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one setting (repeatable; beats --config)")
    common.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="hpsep", description="Separate handwritten, printed text and noise in binary page scans.")
    p.add_argument("--version", action="version", version=f"hpsep {__version__} ({BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("show-config", parents=[common], help="print the effective configuration")
    s.set_defaults(func=cmd_show_config)

    s = sub.add_parser("generate-corpus", parents=[common], help="write a synthetic labelled corpus")
    s.add_argument("--out", required=True)
    s.add_argument("--train", type=int, default=75)
    s.add_argument("--test", type=int, default=300)
    s.add_argument("--seed", type=int, default=2024)
    s.set_defaults(func=cmd_generate_corpus)

    s = sub.add_parser("preprocess", parents=[common], help="clean up and deskew a page")
    s.add_argument("input")
    s.add_argument("output")
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("segment", parents=[common], help="pseudo-lines and pseudo-words of a page")
    s.add_argument("input")
    s.add_argument("--words", help="word table (TSV); stdout when omitted")
    s.add_argument("--overlay", help="PPM with words colored by line")
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("extract-features", parents=[common], help="feature vector per pseudo-word")
    s.add_argument("input")
    s.add_argument("--output")
    s.set_defaults(func=cmd_extract_features)

    s = sub.add_parser("train", parents=[common], help="train the classifier on a corpus")
    s.add_argument("manifest")
    s.add_argument("--model", required=True)
    s.add_argument("--no-cv", action="store_true", help="skip cross-validation")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", parents=[common], help="label a page")
    s.add_argument("input")
    s.add_argument("--model", required=True)
    s.add_argument("--words", help="labelled word table (TSV); stdout when omitted")
    s.add_argument("--labels", help="per-pixel label PGM in the input frame")
    s.add_argument("--overlay", help="PPM: handwritten red, printed blue, noise gray")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("group", parents=[common], help="relabel a page's words with one grouping method")
    s.add_argument("input")
    s.add_argument("--model", required=True)
    s.add_argument("--method", choices=GROUPERS, required=True)
    s.add_argument("--words", help="relabelled word table (TSV); stdout when omitted")
    s.set_defaults(func=cmd_group)

    s = sub.add_parser("evaluate", parents=[common], help="score a label raster against truth")
    s.add_argument("predicted")
    s.add_argument("truth")
    s.add_argument("--csv")
    s.add_argument("--floor", type=float)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("compare-groupers", parents=[common], help="recognition rates of every grouping method")
    s.add_argument("manifest")
    s.add_argument("--model", required=True)
    s.add_argument("--split", choices=("train", "test"), default="test")
    s.add_argument("--csv")
    s.add_argument("--floor", type=float, help="fail with exit 6 if any rate is below this")
    s.set_defaults(func=cmd_compare_groupers)
    return p


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, RegressionFloorError):
        return EXIT_FLOOR
    if isinstance(exc, ModelVersionError):
        return EXIT_VERSION
    if isinstance(exc, FileNotFoundError):
        return EXIT_MISSING
    if isinstance(exc, (netpbm.NetpbmError, ModelFormatError, ManifestError, DimensionMismatchError,
                        UnicodeDecodeError)):
        return EXIT_FORMAT
    if isinstance(exc, (ConfigError, ParameterError, UsageError, DegenerateTrainingSetError,
                        NoContentError, EmptyMaskError)):
        return EXIT_USAGE
    return EXIT_INTERNAL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except Exception as exc:  # mapped to documented exit codes
        code = _exit_code(exc)
        if code == EXIT_INTERNAL:
            log.exception("internal error")
        else:
            log.error("%s", exc)
        return code


if __name__ == "__main__":
    sys.exit(main())
