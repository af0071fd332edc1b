"""Gaussian-kernel SVMs trained by SMO and combined one-vs-one over three classes."""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.spatial.distance import cdist

from ._backend import kernels
from .features import LAYOUT_VERSION, N_FEATURES, NormalizationStats, apply_normalization, fit_normalization

log = logging.getLogger(__name__)

MODEL_MAGIC = "hpsep-svm-model"
MODEL_VERSION = 1
MARGIN_CLIP = 30.0


class LabelClass(enum.IntEnum):
    """Word classes; values match the ground-truth raster codes."""

    HANDWRITTEN = 1
    PRINTED = 2
    NOISE = 3

    @property
    def key(self) -> str:
        return self.name.lower()


CLASSES = (LabelClass.HANDWRITTEN, LabelClass.PRINTED, LabelClass.NOISE)
PAIRS = tuple(combinations(CLASSES, 2))


class DegenerateTrainingSetError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


class ModelVersionError(ValueError):
    pass


@dataclass(frozen=True)
class KernelParams:
    gamma: float = 1.0 / N_FEATURES
    C: float = 10.0
    tol: float = 1e-3
    max_passes: int = 1_000_000

    def __post_init__(self):
        if not (self.gamma > 0 and self.C > 0 and self.tol > 0):
            raise ValueError(f"gamma, C and tol must be positive: {self}")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")


def kernel(x, y, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    d = x - y
    return math.exp(-gamma * float(np.dot(d, d)))


def kernel_matrix(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """Gaussian kernel between the rows of A and the rows of B."""
    # explicit pairwise differences: symmetric and independent of BLAS blocking
    return np.exp(-gamma * cdist(A, B, "sqeuclidean"))


@dataclass(frozen=True, eq=False)
class BinarySvmModel:
    """Decision f(x) = sum_i coef_i K(sv_i, x) + bias, positive side = ``pair[0]``."""

    support_vectors: np.ndarray
    coef: np.ndarray  # alpha_i * y_i
    bias: float
    params: KernelParams
    pair: tuple[LabelClass, LabelClass]
    iterations: int = 0

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if len(self.coef) == 0:
            return np.full(X.shape[0], self.bias)
        if X.shape[1] != self.support_vectors.shape[1]:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {self.support_vectors.shape[1]}")
        # explicit differences keep the result independent of support-vector storage order
        K = np.empty((X.shape[0], len(self.coef)))
        for r in range(X.shape[0]):
            d = self.support_vectors - X[r]
            K[r] = np.exp(-self.params.gamma * np.einsum("ij,ij->i", d, d))
        return K @ self.coef + self.bias


def decision_value(model: BinarySvmModel, x) -> float:
    return float(model.decision(np.asarray(x, dtype=np.float64)[None, :])[0])


@dataclass
class SmoResult:
    alpha: np.ndarray
    rho: float
    iterations: int


def solve_dual(K: np.ndarray, y: np.ndarray, params: KernelParams) -> SmoResult:
    alpha, rho, it = kernels.smo_solve(K, y, params.C, params.tol, params.max_passes)
    if it >= params.max_passes:
        log.warning("SMO stopped at the iteration bound (%d) before reaching tol", it)
    return SmoResult(np.asarray(alpha), float(rho), int(it))


def dual_objective(alpha: np.ndarray, K: np.ndarray, y: np.ndarray) -> float:
    """W(alpha) = sum(alpha) - 1/2 alpha' Q alpha with Q = (y y') * K."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def train_binary(samples, labels, params: KernelParams | None = None,
                 pair: tuple[LabelClass, LabelClass] = (LabelClass.HANDWRITTEN, LabelClass.PRINTED)
                 ) -> BinarySvmModel:
    """Train a binary Gaussian SVM on labels in {-1, +1} (+1 = ``pair[0]``)."""
    params = params or KernelParams()
    X = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    y = np.asarray(labels, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise ValueError("samples and labels differ in length")
    if X.shape[0] < 2 or not ((y > 0).any() and (y < 0).any()):
        raise DegenerateTrainingSetError("degenerate training set: both labels are required")
    if not np.all(np.abs(y) == 1):
        raise ValueError("labels must be -1 or +1")
    K = kernel_matrix(X, X, params.gamma)
    res = solve_dual(K, y, params)
    sv = res.alpha > 0
    return BinarySvmModel(X[sv].copy(), (res.alpha * y)[sv], -float(res.rho), params, pair, res.iterations)


@dataclass(frozen=True, eq=False)
class MultiClassSvmModel:
    pairwise: tuple[BinarySvmModel, ...]
    norm: NormalizationStats
    layout_version: str = LAYOUT_VERSION

    def __post_init__(self):
        if len(self.pairwise) != len(PAIRS):
            raise ValueError(f"expected {len(PAIRS)} pairwise models, got {len(self.pairwise)}")
        if tuple(m.pair for m in self.pairwise) != PAIRS:
            raise ValueError("pairwise models must follow the canonical pair order")

    @property
    def params(self) -> KernelParams:
        return self.pairwise[0].params


def train_multiclass(X, labels, params: KernelParams | None = None) -> MultiClassSvmModel:
    """One-vs-one: one binary model per class pair, shared normalization."""
    params = params or KernelParams()
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    labels = np.asarray([int(v) for v in labels])
    for cls in CLASSES:
        if not (labels == cls).any():
            raise DegenerateTrainingSetError(f"class {cls.key} is missing from the training set")
    norm = fit_normalization(X)
    Z = apply_normalization(X, norm)
    models = []
    for a, b in PAIRS:
        sel = (labels == a) | (labels == b)
        y = np.where(labels[sel] == a, 1.0, -1.0)
        models.append(train_binary(Z[sel], y, params, (a, b)))
    return MultiClassSvmModel(tuple(models), norm)


@dataclass(frozen=True)
class Prediction:
    label: LabelClass
    confidence: float
    votes: tuple[int, int, int] = field(default=(0, 0, 0))


def confidence_from_margin(margin: float) -> float:
    """Logistic squash of a mean decision margin, strictly inside (0, 1)."""
    m = min(max(margin, -MARGIN_CLIP), MARGIN_CLIP)
    return 1.0 / (1.0 + math.exp(-m))


def combine_votes(decisions: np.ndarray) -> list[Prediction]:
    """One-vs-one vote from an (n, 3) array of pairwise decision values.

    Majority wins; ties go to the largest summed |decision| over the votes a
    class won, then to class order. Confidence squashes the mean margin of
    the winner's two pairwise models, oriented toward the winner.
    """
    out = []
    for row in np.atleast_2d(decisions):
        votes = {c: 0 for c in CLASSES}
        strength = {c: 0.0 for c in CLASSES}
        for (a, b), f in zip(PAIRS, row):
            w = a if f > 0 else b
            votes[w] += 1
            strength[w] += abs(float(f))
        winner = max(CLASSES, key=lambda c: (votes[c], strength[c], -int(c)))
        margins = []
        for (a, b), f in zip(PAIRS, row):
            if winner == a:
                margins.append(float(f))
            elif winner == b:
                margins.append(-float(f))
        conf = confidence_from_margin(sum(margins) / len(margins))
        out.append(Prediction(winner, conf, tuple(votes[c] for c in CLASSES)))
    return out


def decisions(model: MultiClassSvmModel, X) -> np.ndarray:
    Z = apply_normalization(np.atleast_2d(np.asarray(X, dtype=np.float64)), model.norm)
    return np.column_stack([m.decision(Z) for m in model.pairwise])


def predict_many(model: MultiClassSvmModel, X, layout_version: str = LAYOUT_VERSION) -> list[Prediction]:
    if model.layout_version != layout_version:
        raise ModelVersionError(
            f"model feature layout {model.layout_version!r} does not match extractor {layout_version!r}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        return []
    return combine_votes(decisions(model, X))


def predict(model: MultiClassSvmModel, x, layout_version: str = LAYOUT_VERSION) -> tuple[LabelClass, float]:
    p = predict_many(model, np.asarray(x, dtype=np.float64)[None, :], layout_version)[0]
    return p.label, p.confidence


# ---------------------------------------------------------------------------
# model file

def _floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def dumps_model(model: MultiClassSvmModel) -> str:
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION}",
        f"layout_version {model.layout_version}",
        f"n_features {len(model.norm.mean)}",
        "classes " + " ".join(c.key for c in CLASSES),
        "norm_mean " + _floats(model.norm.mean),
        "norm_std " + _floats(model.norm.std),
    ]
    for m in model.pairwise:
        p = m.params
        lines += [
            f"pair {m.pair[0].key} {m.pair[1].key}",
            f"gamma {float(p.gamma)!r}",
            f"C {float(p.C)!r}",
            f"tol {float(p.tol)!r}",
            f"max_passes {int(p.max_passes)}",
            f"bias {float(m.bias)!r}",
            f"n_sv {len(m.coef)}",
        ]
        for c, sv in zip(m.coef, m.support_vectors):
            lines.append(f"sv {float(c)!r} " + _floats(sv))
    lines.append("end")
    return "\n".join(lines) + "\n"


class _Reader:
    def __init__(self, text: str):
        self.lines = text.split("\n")
        self.pos = 0

    def take(self, key: str) -> list[str]:
        while self.pos < len(self.lines) and not self.lines[self.pos].strip():
            self.pos += 1
        if self.pos >= len(self.lines):
            raise ModelFormatError(f"unexpected end of model file, expected {key!r}")
        parts = self.lines[self.pos].split()
        lineno = self.pos + 1
        self.pos += 1
        if parts[0] != key:
            raise ModelFormatError(f"line {lineno}: expected {key!r}, found {parts[0]!r}")
        return parts[1:]

    def floats(self, key: str, n: int | None = None) -> np.ndarray:
        lineno = self.pos + 1
        vals = self.take(key)
        try:
            arr = np.array([float(v) for v in vals], dtype=np.float64)
        except ValueError as exc:
            raise ModelFormatError(f"line {lineno}: {exc}") from None
        if n is not None and arr.size != n:
            raise ModelFormatError(f"line {lineno}: expected {n} values for {key!r}, found {arr.size}")
        return arr

    def scalar(self, key: str, kind=float):
        lineno = self.pos + 1
        vals = self.take(key)
        if len(vals) != 1:
            raise ModelFormatError(f"line {lineno}: expected one value for {key!r}")
        try:
            return kind(vals[0])
        except ValueError as exc:
            raise ModelFormatError(f"line {lineno}: {exc}") from None


def loads_model(text: str, layout_version: str = LAYOUT_VERSION) -> MultiClassSvmModel:
    r = _Reader(text)
    head = r.lines[0].split() if r.lines else []
    if len(head) != 2 or head[0] != MODEL_MAGIC:
        raise ModelFormatError("not an hpsep model file (bad header)")
    if head[1] != str(MODEL_VERSION):
        raise ModelVersionError(f"model file version {head[1]} is not supported (expected {MODEL_VERSION})")
    r.pos = 1
    layout = r.scalar("layout_version", str)
    if layout != layout_version:
        raise ModelVersionError(f"model feature layout {layout!r} does not match extractor {layout_version!r}")
    n = r.scalar("n_features", int)
    classes = r.take("classes")
    if classes != [c.key for c in CLASSES]:
        raise ModelFormatError(f"unexpected class list {classes}")
    mean = r.floats("norm_mean", n)
    std = r.floats("norm_std", n)
    models = []
    for a, b in PAIRS:
        pair = r.take("pair")
        if pair != [a.key, b.key]:
            raise ModelFormatError(f"expected pair {a.key} {b.key}, found {' '.join(pair)}")
        try:
            params = KernelParams(r.scalar("gamma"), r.scalar("C"), r.scalar("tol"),
                                  r.scalar("max_passes", int))
        except ModelFormatError:
            raise
        except ValueError as exc:
            raise ModelFormatError(str(exc)) from None
        bias = r.scalar("bias")
        n_sv = r.scalar("n_sv", int)
        coef = np.empty(n_sv)
        svs = np.empty((n_sv, n))
        for i in range(n_sv):
            row = r.floats("sv", n + 1)
            coef[i] = row[0]
            svs[i] = row[1:]
        models.append(BinarySvmModel(svs, coef, bias, params, (a, b)))
    r.take("end")
    return MultiClassSvmModel(tuple(models), NormalizationStats(mean, std), layout)


def save_model(model: MultiClassSvmModel, path) -> None:
    from .netpbm import write_atomic

    write_atomic(path, dumps_model(model).encode("ascii"))


def load_model(path, layout_version: str = LAYOUT_VERSION) -> MultiClassSvmModel:
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        return loads_model(fh.read(), layout_version)
