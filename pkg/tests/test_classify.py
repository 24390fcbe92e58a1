import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsrpipe.classify import (
    MODEL_KINDS,
    CvReport,
    ModelSpec,
    _fold_partition,
    accuracy,
    cross_validate,
    cross_validate_deep,
    fit,
    predict,
    spawn_seeds,
)
from gsrpipe.dlfeatures import CnnArchitecture, ConvStage, TrainingConfig
from gsrpipe.synthetic import window_dataset

from .oracles import gaussian_nb_loglik, naive_knn_predict


def _blobs(rng, n_per=20, d=3, sep=4.0):
    X = np.vstack([rng.normal(0.0, size=(n_per, d)), rng.normal(sep, size=(n_per, d))])
    y = np.array([0] * n_per + [1] * n_per)
    return X, y


def test_model_spec_validation():
    for kind in MODEL_KINDS:
        ModelSpec(kind=kind)
    with pytest.raises(ValueError):
        ModelSpec(kind="perceptron")
    with pytest.raises(ValueError):
        ModelSpec(kind="knn", k=0)
    with pytest.raises(ValueError):
        ModelSpec(kind="knn", k=11)
    with pytest.raises(ValueError):
        ModelSpec(kind="random_forest", max_depth=0)
    with pytest.raises(ValueError):
        ModelSpec(kind="random_forest", n_trees=0)
    with pytest.raises(ValueError):
        ModelSpec(kind="linear_svm", svm_lambda=0.0)


def test_spec_params_dict_is_kind_specific():
    assert ModelSpec(kind="knn", k=3).params_dict() == {"k": 3}
    assert ModelSpec(kind="gaussian_nb").params_dict() == {}
    assert set(ModelSpec(kind="random_forest").params_dict()) == {"max_depth", "n_trees"}
    assert set(ModelSpec(kind="linear_svm").params_dict()) == {"lambda", "epochs"}


def test_standardize_defaults_per_kind():
    assert ModelSpec(kind="knn").standardizes
    assert ModelSpec(kind="linear_svm").standardizes
    assert not ModelSpec(kind="gaussian_nb").standardizes
    assert not ModelSpec(kind="random_forest").standardizes
    assert ModelSpec(kind="gaussian_nb", standardize=True).standardizes


def test_fit_rejects_degenerate_input():
    X = np.zeros((4, 2))
    with pytest.raises(ValueError):
        fit(ModelSpec(kind="knn"), np.zeros((0, 2)), np.zeros(0, dtype=int))
    with pytest.raises(ValueError, match="label"):
        fit(ModelSpec(kind="knn"), X, np.array([0, 0, 2, 1]))
    with pytest.raises(ValueError, match="class"):
        fit(ModelSpec(kind="gaussian_nb"), X, np.array([1, 1, 1, 1]))


def test_knn_matches_exhaustive_oracle():
    rng = np.random.default_rng(5)
    X, y = _blobs(rng, n_per=15, sep=1.0)  # overlapping on purpose
    Q = rng.normal(1.5, size=(25, 3))
    for k in (1, 3, 5):
        model = fit(ModelSpec(kind="knn", k=k, standardize=False), X, y)
        got = predict(model, Q)
        expect = [naive_knn_predict(X, y, q, k) for q in Q]
        np.testing.assert_array_equal(got, expect)


def test_knn_distance_tie_uses_training_order():
    X = np.array([[0.0], [2.0]])  # both at distance 1 from the query
    y = np.array([1, 0])
    model = fit(ModelSpec(kind="knn", k=1, standardize=False), X, y)
    assert predict(model, np.array([[1.0]]))[0] == 1  # earlier training row wins


def test_knn_vote_tie_prefers_class_zero():
    X = np.array([[0.0], [1.0]])
    y = np.array([1, 0])
    model = fit(ModelSpec(kind="knn", k=2, standardize=False), X, y)
    assert predict(model, np.array([[0.4]]))[0] == 0


def test_gaussian_nb_matches_closed_form():
    X = np.array([[1.0, 10.0], [2.0, 12.0], [3.0, 14.0], [8.0, 0.0], [9.0, 2.0], [10.0, 4.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    model = fit(ModelSpec(kind="gaussian_nb"), X, y)
    q = np.array([4.0, 9.0])
    scores = []
    for cls in (0, 1):
        mask = y == cls
        mean = X[mask].mean(axis=0)
        var = X[mask].var(axis=0)
        floor = 1e-9 * X.var(axis=0).max()
        var = np.maximum(var, floor if floor > 0 else 1e-30)
        scores.append(gaussian_nb_loglik(q, mask.mean(), mean, var))
    expect = 0 if scores[0] >= scores[1] else 1
    assert predict(model, q[np.newaxis, :])[0] == expect


def test_gaussian_nb_tie_midpoint_goes_to_class_zero():
    X = np.array([[1.0], [2.0], [9.0], [10.0]])
    y = np.array([0, 0, 1, 1])
    model = fit(ModelSpec(kind="gaussian_nb"), X, y)
    assert predict(model, np.array([[5.5]]))[0] == 0


def test_gaussian_nb_constant_feature_survives():
    X = np.array([[1.0, 5.0], [1.0, 6.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 0, 1, 1])
    model = fit(ModelSpec(kind="gaussian_nb"), X, y)
    got = predict(model, np.array([[1.0, 5.5], [1.0, 0.5]]))
    np.testing.assert_array_equal(got, [0, 1])


def test_single_tree_depth_one_is_best_stump():
    # depth-1 single-feature tree must find the best threshold split
    X = np.array([[0.1], [0.2], [0.3], [0.8], [0.9], [1.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    model = fit(ModelSpec(kind="random_forest", n_trees=1, max_depth=1), X, y, seed=0)
    got = predict(model, np.array([[0.0], [0.25], [0.55], [0.95]]))
    # a perfect stump exists; with bootstrap it may put the cut anywhere in
    # the separating gap, but training points classify cleanly
    train_acc = accuracy(y, predict(model, X))
    assert train_acc >= 5 / 6
    assert got[0] == 0 and got[3] == 1


def test_forest_is_seeded():
    rng = np.random.default_rng(0)
    X, y = _blobs(rng)
    spec = ModelSpec(kind="random_forest", n_trees=10, max_depth=3)
    m1 = fit(spec, X, y, seed=4)
    m2 = fit(spec, X, y, seed=4)
    m3 = fit(spec, X, y, seed=5)
    Q = rng.normal(2.0, size=(40, 3))
    np.testing.assert_array_equal(predict(m1, Q), predict(m2, Q))
    assert accuracy(predict(m1, Q), predict(m3, Q)) <= 1.0  # may differ, must not crash


def test_forest_separable_blobs():
    rng = np.random.default_rng(1)
    X, y = _blobs(rng)
    model = fit(ModelSpec(kind="random_forest"), X, y, seed=0)
    assert accuracy(y, predict(model, X)) == 1.0


def test_svm_sign_test_on_separable_line():
    X = np.concatenate([np.linspace(-3.0, -1.0, 20), np.linspace(1.0, 3.0, 20)])[:, None]
    y = np.array([0] * 20 + [1] * 20)
    model = fit(ModelSpec(kind="linear_svm"), X, y, seed=0)
    got = predict(model, np.array([[-2.0], [-1.5], [1.5], [2.0]]))
    np.testing.assert_array_equal(got, [0, 0, 1, 1])


def test_svm_deterministic():
    rng = np.random.default_rng(2)
    X, y = _blobs(rng)
    m1 = fit(ModelSpec(kind="linear_svm"), X, y, seed=7)
    m2 = fit(ModelSpec(kind="linear_svm"), X, y, seed=7)
    np.testing.assert_array_equal(m1.state.w, m2.state.w)
    assert m1.state.b == m2.state.b


def test_accuracy_helper():
    assert accuracy(np.array([0, 1, 1, 0]), np.array([0, 1, 0, 0])) == 0.75
    with pytest.raises(ValueError):
        accuracy(np.array([0, 1]), np.array([0]))


def test_fold_partition_exact():
    rng = np.random.default_rng(42)
    folds = _fold_partition(23, 10, rng)
    sizes = [len(f) for f in folds]
    assert sum(sizes) == 23
    assert max(sizes) - min(sizes) <= 1
    flat = np.concatenate(folds)
    assert sorted(flat.tolist()) == list(range(23))
    # deterministic: same generator state gives the same split
    folds2 = _fold_partition(23, 10, np.random.default_rng(42))
    for a, b in zip(folds, folds2):
        np.testing.assert_array_equal(a, b)


def test_fold_partition_frozen_example():
    # pinned small case: any change to the shuffle or slicing breaks this
    folds = _fold_partition(7, 3, np.random.default_rng(0))
    got = [f.tolist() for f in folds]
    expect_flat = sorted(i for f in got for i in f)
    assert expect_flat == list(range(7))
    assert [len(f) for f in got] == [3, 2, 2]
    rng = np.random.default_rng(0)
    perm = rng.permutation(7)
    assert got[0] == perm[:3].tolist()


def test_spawn_seeds_deterministic_and_distinct():
    a = spawn_seeds(42, 5)
    b = spawn_seeds(42, 5)
    c = spawn_seeds(43, 5)
    assert a == b
    assert len(set(a)) == 5
    assert a != c


def test_cross_validate_separable_blobs():
    rng = np.random.default_rng(3)
    X, y = _blobs(rng, n_per=30)
    for kind in MODEL_KINDS:
        rep = cross_validate(ModelSpec(kind=kind), X, y, folds=10, seed=0)
        assert isinstance(rep, CvReport)
        assert len(rep.fold_accuracies) == 10
        assert rep.mean >= 0.95, kind
        assert rep.feature_set == "statistical"


def test_cross_validate_needs_enough_samples():
    X = np.zeros((5, 2))
    y = np.array([0, 1, 0, 1, 0])
    with pytest.raises(ValueError, match="at least"):
        cross_validate(ModelSpec(kind="knn"), X, y, folds=10)


def test_cross_validate_needs_both_classes():
    X = np.zeros((12, 2))
    y = np.zeros(12, dtype=int)
    with pytest.raises(ValueError, match="class"):
        cross_validate(ModelSpec(kind="knn"), X, y, folds=3)


def test_cross_validate_is_seeded():
    rng = np.random.default_rng(8)
    X, y = _blobs(rng, n_per=12, sep=1.0)
    r1 = cross_validate(ModelSpec(kind="random_forest", n_trees=5), X, y, folds=4, seed=3)
    r2 = cross_validate(ModelSpec(kind="random_forest", n_trees=5), X, y, folds=4, seed=3)
    assert r1.fold_accuracies == r2.fold_accuracies
    assert r1.seed == 3


def test_report_dict_round_trip():
    rng = np.random.default_rng(9)
    X, y = _blobs(rng, n_per=10)
    rep = cross_validate(ModelSpec(kind="knn", k=2), X, y, folds=5, seed=1)
    doc = rep.to_dict()
    assert doc["model"] == "knn"
    assert doc["params"] == {"k": 2}
    assert doc["feature_set"] == "statistical"
    assert len(doc["folds"]) == 5
    assert doc["mean"] == pytest.approx(np.mean(doc["folds"]))


def test_deep_cv_uses_same_partition_as_statistical():
    X, y = window_dataset(n_per_class=8, length=64, fs=4.0, seed=0)
    arch = CnnArchitecture(stages=(ConvStage(2, 8, 4), ConvStage(2, 4, 2)))
    cfg = TrainingConfig(epochs=2, batch_size=8, learning_rate=1e-3, seed=0)
    stat = cross_validate(ModelSpec(kind="knn", k=1), X.sum(axis=1, keepdims=True),
                          y, folds=4, seed=5)
    deep = cross_validate_deep(ModelSpec(kind="knn", k=1), X, y, folds=4, seed=5,
                               arch=arch, train_cfg=cfg)
    # same seed and n: per-fold test sets coincide, so fold counts line up
    assert len(stat.fold_accuracies) == len(deep.fold_accuracies)
    assert deep.feature_set == "deep"
    deep2 = cross_validate_deep(ModelSpec(kind="knn", k=1), X, y, folds=4, seed=5,
                                arch=arch, train_cfg=cfg)
    assert deep.fold_accuracies == deep2.fold_accuracies


def test_deep_cv_separates_easy_windows():
    X, y = window_dataset(n_per_class=15, length=240, fs=4.0, seed=2)
    rep = cross_validate_deep(ModelSpec(kind="knn", k=1), X, y, folds=5, seed=0)
    assert rep.mean >= 0.9


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=2, max_value=200), st.integers(min_value=2, max_value=10),
       st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_property_fold_partition(n, folds, seed):
    if n < folds:
        return
    parts = _fold_partition(n, folds, np.random.default_rng(seed))
    sizes = [len(p) for p in parts]
    assert len(parts) == folds
    assert sum(sizes) == n
    assert max(sizes) - min(sizes) <= 1
    assert sorted(np.concatenate(parts).tolist()) == list(range(n))
