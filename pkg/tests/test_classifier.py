import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmean.classifier import (
    SoftmaxModel,
    TrainProtocol,
    _train_softmax,
    fit,
    load_softmax_model,
    metrics,
    save_softmax_model,
    softmax_xent,
    subsample_validate,
)
from pmean.errors import FormatError, InputError
from pmean.optim import AdamState, adam_step


def make_blobs(n_per_class=100, d=2, margin_gap=1.0, n_classes=2, seed=0):
    """Linearly separable Gaussian blobs with centers 2+gap apart."""
    rng = np.random.default_rng(seed)
    X, y = [], []
    for c in range(n_classes):
        angle = 2 * math.pi * c / n_classes
        center = (2 + margin_gap) * np.array([math.cos(angle), math.sin(angle)])
        pts = center + 0.4 * rng.standard_normal((n_per_class, 2))
        if d > 2:
            pts = np.hstack([pts, rng.standard_normal((n_per_class, d - 2))])
        X.append(pts)
        y.extend([f"k{c}"] * n_per_class)
    return np.vstack(X), y


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        params = {"w": np.array([1.0, -2.0])}
        grads = {"w": np.zeros(2)}
        state = AdamState.zeros_like(params)
        out, state = adam_step(params, grads, state, t=1)
        assert np.array_equal(out["w"], params["w"])

    def test_first_step_magnitude_is_step_size(self):
        # bias correction makes m_hat / sqrt(v_hat) = sign(g) at t=1
        params = {"w": np.array([0.0])}
        grads = {"w": np.array([7.3])}
        state = AdamState.zeros_like(params)
        out, _ = adam_step(params, grads, state, t=1, step_size=0.05)
        assert out["w"][0] == pytest.approx(-0.05, rel=1e-6)

    def test_pure_function(self):
        params = {"w": np.array([1.0])}
        grads = {"w": np.array([0.5])}
        state = AdamState.zeros_like(params)
        a1, s1 = adam_step(params, grads, state, t=1)
        a2, s2 = adam_step(params, grads, state, t=1)
        assert np.array_equal(a1["w"], a2["w"])
        assert np.array_equal(s1.m["w"], s2.m["w"])
        assert params["w"][0] == 1.0  # inputs untouched

    def test_moments_decay_toward_zero_on_zero_grads(self):
        params = {"w": np.array([1.0])}
        state = AdamState(m={"w": np.array([1.0])}, v={"w": np.array([1.0])})
        _, state = adam_step(params, {"w": np.zeros(1)}, state, t=5)
        assert abs(state.m["w"][0]) < 1.0 and state.v["w"][0] < 1.0

    def test_rejects_bad_t(self):
        params = {"w": np.zeros(1)}
        with pytest.raises(ValueError):
            adam_step(params, params, AdamState.zeros_like(params), t=0)


class TestSoftmaxXent:
    def test_uniform_logits_loss_is_ln_c(self):
        for C in (2, 3, 5):
            model = SoftmaxModel(np.zeros((C, 4)), np.zeros(C), [f"k{i}" for i in range(C)])
            X = np.random.default_rng(0).normal(size=(10, 4)) * 0  # zero features
            loss, _ = softmax_xent(model, X, ["k0"] * 10)
            assert loss == pytest.approx(math.log(C), rel=1e-12)

    def test_confident_correct_logits_near_zero_loss(self):
        model = SoftmaxModel(np.array([[30.0], [-30.0]]), np.zeros(2), ["a", "b"])
        X = np.array([[1.0], [-1.0]])
        loss, _ = softmax_xent(model, X, ["a", "b"])
        assert loss < 1e-3

    def test_unknown_label_rejected(self):
        model = SoftmaxModel(np.zeros((2, 2)), np.zeros(2), ["a", "b"])
        with pytest.raises(InputError):
            softmax_xent(model, np.zeros((1, 2)), ["zzz"])

    def test_gradients_match_central_differences(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            C = int(rng.integers(2, 5))
            D = int(rng.integers(1, 7))
            n = int(rng.integers(2, 9))
            labels = [f"k{i}" for i in range(C)]
            model = SoftmaxModel(rng.normal(size=(C, D)), rng.normal(size=C), labels)
            X = rng.normal(size=(n, D))
            y = [labels[i] for i in rng.integers(0, C, size=n)]
            _, grads = softmax_xent(model, X, y)
            h = 1e-6
            for name, arr in (("W", model.weights), ("b", model.bias)):
                it = np.nditer(arr, flags=["multi_index"])
                for _ in it:
                    i = it.multi_index
                    orig = arr[i]
                    arr[i] = orig + h
                    lp, _ = softmax_xent(model, X, y)
                    arr[i] = orig - h
                    lm, _ = softmax_xent(model, X, y)
                    arr[i] = orig
                    num = (lp - lm) / (2 * h)
                    got = grads[name][i]
                    rel = abs(got - num) / max(1e-8, abs(got) + abs(num))
                    assert rel < 1e-4

    def test_bias_shift_leaves_predictions_unchanged(self):
        rng = np.random.default_rng(1)
        model = SoftmaxModel(rng.normal(size=(3, 4)), rng.normal(size=3), ["a", "b", "c"])
        X = rng.normal(size=(50, 4))
        before = model.predict(X)
        shifted = SoftmaxModel(model.weights, model.bias + 11.7, model.class_labels)
        assert shifted.predict(X) == before


class TestFit:
    def test_separable_blobs_high_train_accuracy(self):
        X, y = make_blobs(seed=3)
        model = fit(X, y, TrainProtocol(seed=0), np.random.default_rng(0))
        assert metrics(y, model.predict(X), "accuracy") >= 0.99

    def test_random_labels_stay_near_chance(self):
        rng = np.random.default_rng(8)
        n = 400
        X = rng.standard_normal((n, 4))
        y = [f"k{i}" for i in rng.integers(0, 2, size=n)]
        model = fit(X, y, TrainProtocol(seed=1), np.random.default_rng(1))
        acc = metrics(y, model.predict(X), "accuracy")
        # binomial null on the full set; training can only overfit mildly here
        assert abs(acc - 0.5) < 3 * math.sqrt(0.25 / n) + 0.05

    def test_deterministic_per_seed(self):
        X, y = make_blobs(seed=5)
        m1 = fit(X, y, TrainProtocol(seed=4), np.random.default_rng(4))
        m2 = fit(X, y, TrainProtocol(seed=4), np.random.default_rng(4))
        assert np.array_equal(m1.weights, m2.weights)
        assert np.array_equal(m1.bias, m2.bias)

    def test_single_class_rejected(self):
        X = np.zeros((10, 2))
        with pytest.raises(InputError):
            fit(X, ["same"] * 10, TrainProtocol(), np.random.default_rng(0))

    def test_loss_nonincreasing_on_separable_data(self):
        X, y = make_blobs(seed=11)
        labels = ["k0", "k1"]
        y_idx = np.array([labels.index(v) for v in y])
        protocol = TrainProtocol(max_epochs=30, seed=0)
        _, losses = _train_softmax(X, y_idx, 2, 0.01, protocol,
                                   np.random.default_rng(2), record_losses=True)
        drops = sum(1 for a, b in zip(losses, losses[1:]) if b <= a + 1e-12)
        assert drops / (len(losses) - 1) >= 0.95


class TestMetrics:
    def test_perfect_prediction(self):
        assert metrics(["a", "b"], ["a", "b"], "accuracy") == 1.0
        assert metrics(["a", "b"], ["a", "b"], "macro_f1") == 1.0

    def test_hand_computed_macro_f1(self):
        # per-class F1: A -> 2/3, B -> 4/5
        got = metrics(["A", "A", "B", "B"], ["A", "B", "B", "B"], "macro_f1")
        assert got == pytest.approx(0.7333333333333333, abs=1e-12)
        assert metrics(["A", "A", "B", "B"], ["A", "B", "B", "B"], "accuracy") == 0.75

    def test_all_one_class_prediction(self):
        got = metrics(["A", "B", "A", "B"], ["A", "A", "A", "A"], "macro_f1")
        assert got == pytest.approx(0.3333333333333333, abs=1e-12)
        assert metrics(["A", "B", "A", "B"], ["A", "A", "A", "A"], "accuracy") == 0.5

    def test_absent_class_still_counts_via_labels(self):
        got = metrics(["A", "A"], ["A", "A"], "macro_f1", labels=["A", "B"])
        assert got == pytest.approx(0.5)  # B contributes F1 = 0

    def test_macro_f1_equals_accuracy_on_symmetric_confusion(self):
        y_true = ["A"] * 10 + ["B"] * 10
        y_pred = ["A"] * 8 + ["B"] * 2 + ["B"] * 8 + ["A"] * 2
        assert metrics(y_true, y_pred, "macro_f1") == pytest.approx(
            metrics(y_true, y_pred, "accuracy")
        )

    @given(st.permutations(list(range(12))))
    @settings(deadline=None)
    def test_sample_order_invariance(self, perm):
        y_true = ["A", "B", "C"] * 4
        y_pred = ["A", "A", "C", "B"] * 3
        pt = [y_true[i] for i in perm]
        pp = [y_pred[i] for i in perm]
        for kind in ("accuracy", "macro_f1"):
            assert metrics(pt, pp, kind, labels=["A", "B", "C"]) == pytest.approx(
                metrics(y_true, y_pred, kind, labels=["A", "B", "C"])
            )

    def test_length_mismatch_rejected(self):
        with pytest.raises(InputError):
            metrics(["a"], ["a", "b"], "accuracy")

    def test_unknown_metric_kind_rejected(self):
        with pytest.raises(InputError):
            metrics(["a"], ["a"], "rmse")


class TestModelExport:
    def test_round_trip(self, tmp_path):
        X, y = make_blobs(n_per_class=30, seed=4)
        model = fit(X, y, TrainProtocol(max_epochs=5, seed=0), np.random.default_rng(0))
        path = tmp_path / "clf.json"
        save_softmax_model(model, path)
        back = load_softmax_model(path)
        assert back.class_labels == model.class_labels
        assert np.array_equal(back.weights, model.weights)
        assert np.array_equal(back.bias, model.bias)

    def test_unknown_version_rejected(self, tmp_path):
        import json as _json

        model = SoftmaxModel(np.zeros((2, 2)), np.zeros(2), ["a", "b"])
        path = tmp_path / "clf.json"
        save_softmax_model(model, path)
        doc = _json.loads(path.read_text())
        doc["format_version"] = 9
        path.write_text(_json.dumps(doc))
        with pytest.raises(FormatError, match="format_version"):
            load_softmax_model(path)


class TestSubsampleValidate:
    def test_single_run_has_zero_std(self):
        X, y = make_blobs(n_per_class=40, seed=2)
        score = subsample_validate(X, y, TrainProtocol(runs=1, seed=0))
        assert len(score.per_run) == 1
        assert score.std == 0.0

    def test_mean_std_consistent_with_per_run(self):
        X, y = make_blobs(n_per_class=40, seed=2)
        score = subsample_validate(X, y, TrainProtocol(runs=5, seed=0))
        assert score.mean == pytest.approx(float(np.mean(score.per_run)), abs=1e-12)
        assert score.std == pytest.approx(float(np.std(score.per_run)), abs=1e-12)

    def test_identical_seeds_identical_scores(self):
        X, y = make_blobs(n_per_class=40, seed=6)
        s1 = subsample_validate(X, y, TrainProtocol(runs=4, seed=9))
        s2 = subsample_validate(X, y, TrainProtocol(runs=4, seed=9))
        assert s1 == s2

    def test_duplicated_dataset_scores_within_noise(self):
        X, y = make_blobs(n_per_class=50, seed=7)
        base = subsample_validate(X, y, TrainProtocol(runs=8, seed=3))
        X2 = np.vstack([X, X])
        y2 = y + y
        doubled = subsample_validate(X2, y2, TrainProtocol(runs=8, seed=3))
        assert abs(base.mean - doubled.mean) <= 0.05

    def test_degenerate_class_named_in_error(self):
        X = np.zeros((5, 2))
        y = ["a", "a", "a", "a", "lonely"]
        with pytest.raises(InputError, match="lonely"):
            subsample_validate(X, y, TrainProtocol(runs=1, seed=0))

    def test_macro_f1_metric_plumbs_through(self):
        X, y = make_blobs(n_per_class=40, seed=8)
        score = subsample_validate(X, y, TrainProtocol(runs=2, seed=0), metric_kind="macro_f1")
        assert score.metric == "macro_f1"
        assert 0.0 <= score.mean <= 1.0
