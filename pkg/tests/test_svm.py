import math

import numpy as np
import pytest

from hpsep.features import N_FEATURES, NormalizationStats
from hpsep.svm import (CLASSES, PAIRS, BinarySvmModel, DegenerateTrainingSetError, KernelParams,
                       LabelClass, ModelFormatError, ModelVersionError, MultiClassSvmModel,
                       combine_votes, confidence_from_margin, decision_value, dual_objective,
                       dumps_model, kernel, kernel_matrix, load_model, loads_model, predict,
                       predict_many, save_model, train_binary, train_multiclass)
from oracles import kkt_violation, qp_dual_oracle


def blobs(rng, n_per=20, dim=2, spread=0.6, centers=((-2, 0), (2, 0), (0, 3))):
    X, y = [], []
    for label, c in zip(CLASSES, centers):
        c = np.resize(np.asarray(c, dtype=float), dim)
        X.append(rng.normal(c, spread, size=(n_per, dim)))
        y += [int(label)] * n_per
    return np.vstack(X), np.array(y)


class TestKernel:
    def test_self_is_one(self, rng):
        x = rng.normal(size=5)
        assert kernel(x, x, 0.7) == 1.0

    def test_unit_distance(self):
        assert kernel([0.0, 0.0], [1.0, 0.0], 1.0) == pytest.approx(math.exp(-1))

    def test_symmetric_and_matrix(self, rng):
        A, B = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
        K = kernel_matrix(A, B, 0.3)
        for i in range(4):
            for j in range(5):
                assert K[i, j] == pytest.approx(kernel(A[i], B[j], 0.3), rel=1e-12)
                assert kernel(A[i], B[j], 0.3) == kernel(B[j], A[i], 0.3)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            kernel([1.0], [1.0, 2.0], 1.0)

    @pytest.mark.parametrize("kw", [dict(gamma=0), dict(C=-1), dict(tol=0), dict(max_passes=0)])
    def test_params_validated(self, kw):
        with pytest.raises(ValueError):
            KernelParams(**kw)


class TestTrainBinary:
    def test_two_points(self):
        m = train_binary([[-1.0], [1.0]], [-1, 1], KernelParams(gamma=0.5))
        assert len(m.coef) == 2
        assert decision_value(m, [1.0]) > 0 > decision_value(m, [-1.0])

    def test_single_class_rejected(self):
        with pytest.raises(DegenerateTrainingSetError):
            train_binary([[0.0], [1.0]], [1, 1])

    def test_bad_labels(self):
        with pytest.raises(ValueError):
            train_binary([[0.0], [1.0]], [0, 1])

    def test_kkt_and_equality(self, backend, rng):
        params = KernelParams(gamma=0.5, C=10.0, tol=1e-3)
        for _ in range(10):
            n = int(rng.integers(10, 50))
            X = rng.normal(size=(n, 2))
            y = np.where(X[:, 0] + 0.5 * rng.normal(size=n) > 0, 1.0, -1.0)
            if len(set(y)) < 2:
                continue
            K = kernel_matrix(X, X, params.gamma)
            alpha, rho, _ = backend.smo_solve(K, y, params.C, params.tol, params.max_passes)
            alpha = np.asarray(alpha)
            assert abs(float(alpha @ y)) <= 1e-6
            assert np.all((alpha >= 0) & (alpha <= params.C))
            assert kkt_violation(alpha, K, y, -rho, params.C) <= params.tol + 1e-9

    def test_dual_matches_qp_oracle(self, backend, rng):
        centers = np.array([[-1.0, 0.0], [1.0, 0.0]])
        X = np.vstack([rng.normal(c, 0.9, size=(20, 2)) for c in centers])
        y = np.repeat([-1.0, 1.0], 20)
        K = kernel_matrix(X, X, 0.5)
        alpha, _, _ = backend.smo_solve(K, y, 10.0, 1e-3, 1_000_000)
        _, best = qp_dual_oracle(K, y, 10.0)
        assert abs(dual_objective(np.asarray(alpha), K, y) - best) <= 1e-3

    def test_decision_direct_sum(self, rng):
        X = rng.normal(size=(30, 3))
        y = np.where(X[:, 1] > 0, 1.0, -1.0)
        m = train_binary(X, y, KernelParams(gamma=0.4))
        for q in rng.normal(size=(10, 3)):
            expected = sum(c * math.exp(-0.4 * float(np.sum((s - q) ** 2)))
                           for c, s in zip(m.coef, m.support_vectors)) + m.bias
            assert decision_value(m, q) == pytest.approx(expected, rel=1e-12, abs=1e-12)
            assert np.all(np.abs(m.coef) <= m.params.C + 1e-12)

    def test_non_bound_sv_on_margin(self, rng):
        X = rng.normal(size=(40, 2))
        y = np.where(X[:, 0] > 0, 1.0, -1.0)
        m = train_binary(X, y, KernelParams(gamma=0.5, C=10.0))
        free = (np.abs(m.coef) > 1e-8) & (np.abs(m.coef) < m.params.C - 1e-8)
        assert free.any()
        signs = np.sign(m.coef[free])
        f = m.decision(m.support_vectors[free])
        assert np.all(np.abs(signs * f - 1) <= 2e-3)

    def test_zero_alphas_give_bias(self):
        m = BinarySvmModel(np.zeros((0, 2)), np.zeros(0), 0.25, KernelParams(), PAIRS[0])
        assert m.decision(np.ones((3, 2))).tolist() == [0.25] * 3


class TestMulticlass:
    def test_separable_blobs(self, rng):
        X, y = blobs(rng)
        model = train_multiclass(X, y, KernelParams(gamma=0.5))
        preds = predict_many(model, X)
        assert [int(p.label) for p in preds] == y.tolist()

    def test_deep_point_confident(self, rng):
        X, y = blobs(rng, spread=0.3)
        model = train_multiclass(X, y, KernelParams(gamma=0.5))
        label, conf = predict(model, np.array([0.0, 3.0]))
        assert label == LabelClass.NOISE and conf > 0.7

    def test_pair_models_use_only_their_samples(self, rng):
        X, y = blobs(rng)
        model = train_multiclass(X, y)
        counts = {c: int(np.sum(y == c)) for c in CLASSES}
        for m in model.pairwise:
            assert len(m.coef) <= counts[m.pair[0]] + counts[m.pair[1]]
        assert tuple(m.pair for m in model.pairwise) == PAIRS

    def test_missing_class_named(self, rng):
        X = rng.normal(size=(6, 2))
        with pytest.raises(DegenerateTrainingSetError, match="noise"):
            train_multiclass(X, [1, 1, 2, 2, 1, 2])

    def test_deterministic(self, rng):
        X, y = blobs(rng)
        assert dumps_model(train_multiclass(X, y)) == dumps_model(train_multiclass(X, y))

    def test_backends_agree(self, rng):
        from hpsep import _backend, svm
        if len(_backend.available_backends()) < 2:
            pytest.skip("compiled backend not built")
        X, y = blobs(rng)
        texts = []
        for mod in _backend.available_backends().values():
            old = svm.kernels
            svm.kernels = mod
            try:
                texts.append(dumps_model(train_multiclass(X, y)))
            finally:
                svm.kernels = old
        a, b = (loads_model(t) for t in texts)
        for ma, mb in zip(a.pairwise, b.pairwise):
            assert len(ma.coef) == len(mb.coef)
            assert np.allclose(ma.coef, mb.coef, atol=1e-9) and ma.bias == pytest.approx(mb.bias, abs=1e-9)


class TestVoting:
    def test_majority_beats_margins(self):
        # H beats P weakly, H beats N weakly, P beats N strongly: H has two votes
        (p,) = combine_votes(np.array([[0.1, 0.1, 50.0]]))
        assert p.label == LabelClass.HANDWRITTEN and p.votes == (2, 1, 0)

    def test_cycle_broken_by_strength(self):
        # H>P, N>H, P>N: one vote each; P's single win is the strongest
        (p,) = combine_votes(np.array([[0.5, -0.7, 2.0]]))
        assert p.label == LabelClass.PRINTED

    def test_confidence_range(self, rng):
        for p in combine_votes(rng.normal(scale=20, size=(200, 3))):
            assert 0 < p.confidence < 1

    def test_confidence_is_logistic_of_mean_margin(self):
        (p,) = combine_votes(np.array([[1.0, 3.0, 0.0]]))
        assert p.confidence == pytest.approx(1 / (1 + math.exp(-2.0)))
        assert confidence_from_margin(1e6) < 1.0

    def test_layout_mismatch(self, rng):
        X, y = blobs(rng)
        model = train_multiclass(X, y)
        with pytest.raises(ModelVersionError):
            predict_many(model, X, layout_version="other")


class TestModelFile:
    def model(self, rng):
        X, y = blobs(rng, dim=N_FEATURES)
        return train_multiclass(X, y, KernelParams(gamma=1 / N_FEATURES))

    def test_round_trip(self, tmp_path, rng):
        model = self.model(rng)
        save_model(model, tmp_path / "m.txt")
        back = load_model(tmp_path / "m.txt")
        assert dumps_model(back) == dumps_model(model)
        X = rng.normal(size=(15, N_FEATURES))
        assert [p.label for p in predict_many(back, X)] == [p.label for p in predict_many(model, X)]

    def test_bad_header(self):
        with pytest.raises(ModelFormatError):
            loads_model("nonsense\n")

    def test_future_version(self, rng):
        text = dumps_model(self.model(rng)).replace("hpsep-svm-model 1", "hpsep-svm-model 2", 1)
        with pytest.raises(ModelVersionError):
            loads_model(text)

    def test_layout_version(self, rng):
        with pytest.raises(ModelVersionError):
            loads_model(dumps_model(self.model(rng)), layout_version="hpsep-features-v0")

    @pytest.mark.parametrize("cut", [0.3, 0.6, 0.95])
    def test_truncated(self, rng, cut):
        text = dumps_model(self.model(rng))
        with pytest.raises(ModelFormatError):
            loads_model(text[:int(len(text) * cut)].rsplit("\n", 1)[0])

    def test_corrupt_number(self, rng):
        text = dumps_model(self.model(rng)).replace("bias ", "bias x", 1)
        with pytest.raises(ModelFormatError):
            loads_model(text)

    def test_canonical_pair_order_enforced(self):
        m = BinarySvmModel(np.zeros((0, 1)), np.zeros(0), 0.0, KernelParams(), PAIRS[0])
        with pytest.raises(ValueError):
            MultiClassSvmModel((m, m, m), NormalizationStats(np.zeros(1), np.ones(1)))
