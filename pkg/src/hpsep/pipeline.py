"""End-to-end page analysis: clean-up, segmentation, classification, grouping."""
from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import netpbm
from .corpus import DatasetManifest, ManifestEntry, load_truth
from .evaluate import TABLE_ROWS, ScoreReport, backproject_labels, project_labels, rate
from .features import LAYOUT_VERSION, extract_all
from .group import GROUPERS, DistanceWeights, LabeledWord, apply_grouper
from .preprocess import EdgeRuleSet, PreprocessConfig, PreprocessResult, preprocess_detailed
from .raster import BinaryImage, rotate_raster
from .segment import Segmentation, segment_page
from .svm import (CLASSES, KernelParams, LabelClass, MultiClassSvmModel, Prediction,
                  predict_many, train_multiclass)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the pipeline. Distances are given at 300 dpi and scaled by ``dpi``."""

    dpi: int = 300
    kfill_k: int = 3
    skew_range: float = 15.0
    skew_resolution: float = 0.1
    border_margin: int | None = None
    line_factor: float = 3.0
    w_x: float = 1.0
    w_y: float = 3.0
    k: int = 2
    metric: str = "centroid"
    max_dist_centroid: float = 300.0
    max_dist_bbox: float = 100.0
    gamma: float = 1.0 / 35.0
    C: float = 10.0
    tol: float = 1e-3
    max_passes: int = 1_000_000
    grouping: str = "knn-constrained"
    max_train_per_class: int = 1200
    sample_seed: int = 0
    cv_folds: int = 5

    def __post_init__(self):
        if self.grouping not in GROUPERS:
            raise ConfigError(f"grouping must be one of {GROUPERS}, got {self.grouping!r}")
        if self.metric not in ("centroid", "bbox"):
            raise ConfigError(f"metric must be 'centroid' or 'bbox', got {self.metric!r}")
        if self.dpi <= 0 or self.k < 1 or self.max_train_per_class < 1 or self.cv_folds < 2:
            raise ConfigError("dpi, k and max_train_per_class must be positive; cv_folds >= 2")
        try:
            self.preprocess_config()
            self.kernel_params()
            self.weights()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # views onto module configs

    def preprocess_config(self) -> PreprocessConfig:
        return PreprocessConfig(self.kfill_k, self.skew_range, self.skew_resolution,
                                EdgeRuleSet(border_margin=self.border_margin))

    def kernel_params(self) -> KernelParams:
        return KernelParams(gamma=self.gamma, C=self.C, tol=self.tol, max_passes=self.max_passes)

    def weights(self) -> DistanceWeights:
        return DistanceWeights(self.w_x, self.w_y)

    def max_dist(self) -> float:
        base = self.max_dist_centroid if self.metric == "centroid" else self.max_dist_bbox
        return base * self.dpi / 300.0

    # serialization

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**{k: _coerce(known[k], v) for k, v in data.items()})

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, pairs) -> "PipelineConfig":
        """Apply ``key=value`` strings; values are parsed as JSON, falling back to text."""
        data = dataclasses.asdict(self)
        for item in pairs:
            key, sep, raw = item.partition("=")
            if not sep:
                raise ConfigError(f"override must look like key=value, got {item!r}")
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            data[key.strip()] = value
        return type(self).from_dict(data)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2) + "\n"


def _coerce(f: dataclasses.Field, value):
    kind = f.type
    if value is None:
        if "None" in str(kind):
            return None
        raise ConfigError(f"{f.name} may not be null")
    try:
        if kind in ("int", "int | None"):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if kind == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"{f.name}: expected {kind}, got {value!r}") from None
    return value


# ---------------------------------------------------------------------------
# per-page analysis

@dataclass(frozen=True, eq=False)
class PageAnalysis:
    source: BinaryImage
    pre: PreprocessResult
    segmentation: Segmentation
    features: np.ndarray
    predictions: list[Prediction] = field(default_factory=list)

    @property
    def words(self):
        return self.segmentation.words

    def labeled_words(self) -> list[LabeledWord]:
        return [LabeledWord.from_word(w, p.label, p.confidence)
                for w, p in zip(self.segmentation.words, self.predictions)]

    def label_raster(self, words) -> np.ndarray:
        """Per-pixel labels on the original (un-deskewed) ink."""
        clean = project_labels(words, self.pre.image)
        return backproject_labels(clean, self.pre.angle, self.source)


def prepare_page(img: BinaryImage, config: PipelineConfig) -> PageAnalysis:
    """Preprocess, segment and extract features; no classification yet."""
    pre = preprocess_detailed(img, config.preprocess_config())
    seg = segment_page(pre.image, config.line_factor)
    return PageAnalysis(img, pre, seg, extract_all(seg.words))


def classify(page: PageAnalysis, model: MultiClassSvmModel) -> PageAnalysis:
    preds = predict_many(model, page.features, LAYOUT_VERSION) if len(page.words) else []
    return dataclasses.replace(page, predictions=preds)


def analyze_page(img: BinaryImage, model: MultiClassSvmModel, config: PipelineConfig) -> PageAnalysis:
    return classify(prepare_page(img, config), model)


def group_words(page: PageAnalysis, config: PipelineConfig, method: str | None = None) -> list[LabeledWord]:
    return apply_grouper(method or config.grouping, page.labeled_words(), config.weights(),
                         config.k, config.max_dist(), config.metric)


def predict_page(img: BinaryImage, model: MultiClassSvmModel, config: PipelineConfig):
    """(page analysis, grouped words, label raster in the original frame)."""
    page = analyze_page(img, model, config)
    words = group_words(page, config)
    return page, words, page.label_raster(words)


# ---------------------------------------------------------------------------
# training data

def gold_labels(words, truth: np.ndarray) -> np.ndarray:
    """Majority ground-truth class of each word's ink; ties go to class order, no ink to Noise."""
    out = np.empty(len(words), dtype=np.int64)
    for i, w in enumerate(words):
        counts = np.zeros(4, dtype=np.int64)
        for cc in w.components:
            vals = truth[cc.bbox.slices][cc.pixel_mask]
            counts += np.bincount(vals, minlength=4)[:4]
        out[i] = int(np.argmax(counts[1:]) + 1) if counts[1:].any() else int(LabelClass.NOISE)
    return out


def page_samples(img: BinaryImage, truth: np.ndarray, config: PipelineConfig):
    """(features, gold labels) of one training page."""
    page = prepare_page(img, config)
    rot = rotate_raster(truth, page.pre.angle) if page.pre.angle else truth
    return page.features, gold_labels(page.words, rot)


def _load_pair(manifest: DatasetManifest, entry: ManifestEntry, dpi: int):
    img = netpbm.read_image(manifest.image_path(entry), default_dpi=dpi)
    truth = load_truth(manifest.truth_path(entry))
    return img, truth


def _samples_job(args):
    manifest, entry, config = args
    img, truth = _load_pair(manifest, entry, config.dpi)
    return page_samples(img, truth, config)


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def collect_samples(manifest: DatasetManifest, config: PipelineConfig, split: str = "train",
                    workers: int = 1):
    """Stacked (X, y, page_index) over every page of ``split``."""
    entries = manifest.split(split)
    results = _map(_samples_job, [(manifest, e, config) for e in entries], workers)
    X = [r[0] for r in results]
    y = [r[1] for r in results]
    pages = [np.full(len(r[1]), i, dtype=np.int64) for i, r in enumerate(results)]
    if not X:
        return np.zeros((0, 35)), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.vstack(X), np.concatenate(y), np.concatenate(pages)


def subsample(y: np.ndarray, cap: int, seed: int) -> np.ndarray:
    """Sorted indices keeping at most ``cap`` samples per class, chosen by a seeded draw."""
    rng = np.random.default_rng(seed)
    keep = []
    for cls in CLASSES:
        idx = np.nonzero(y == int(cls))[0]
        if len(idx) > cap:
            idx = np.sort(rng.choice(idx, cap, replace=False))
        keep.append(idx)
    return np.sort(np.concatenate(keep))


def fit_model(X: np.ndarray, y: np.ndarray, config: PipelineConfig) -> MultiClassSvmModel:
    sel = subsample(y, config.max_train_per_class, config.sample_seed)
    return train_multiclass(X[sel], y[sel], config.kernel_params())


def cross_validate(X: np.ndarray, y: np.ndarray, pages: np.ndarray, config: PipelineConfig) -> list[float]:
    """Word-level accuracy per fold; folds are whole pages (page index modulo fold count)."""
    folds = pages % config.cv_folds
    scores = []
    for f in range(config.cv_folds):
        test = folds == f
        if not test.any() or test.all():
            continue
        model = fit_model(X[~test], y[~test], config)
        pred = np.array([int(p.label) for p in predict_many(model, X[test])])
        scores.append(float(np.mean(pred == y[test])))
    return scores


# ---------------------------------------------------------------------------
# evaluation

def _compare_job(args):
    manifest, entry, model, config, methods = args
    img, truth = _load_pair(manifest, entry, config.dpi)
    page = analyze_page(img, model, config)
    return {m: rate(page.label_raster(group_words(page, config, m)), truth) for m in methods}


def compare_groupers(manifest: DatasetManifest, model: MultiClassSvmModel, config: PipelineConfig,
                     split: str = "test", workers: int = 1, methods=None) -> dict[str, ScoreReport]:
    """Pooled ScoreReport per grouping method over every page of ``split``."""
    methods = tuple(methods or (key for key, _ in TABLE_ROWS))
    entries = manifest.split(split)
    jobs = [(manifest, e, model, config, methods) for e in entries]
    totals = {m: ScoreReport.empty() for m in methods}
    for page_reports in _map(_compare_job, jobs, workers):
        for m in methods:
            totals[m] = totals[m] + page_reports[m]
    return totals
