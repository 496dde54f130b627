import numpy as np
import pytest

import oracles
from fhdes.data import make_banana, normalize
from fhdes.hyperbox import DimensionError
from fhdes.linear import (LinearClassifier, Pool, TrainingError, bootstrap_indices, member_rng,
                          train_perceptron, train_pool)


def separable_blobs(n=200, margin=0.2, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, 2))
    s = X[:, 0] + X[:, 1] - 1.0
    keep = np.abs(s) > margin / 2
    return X[keep], (s[keep] > 0).astype(int)


def test_separable_data_is_learned_exactly():
    X, y = separable_blobs()
    clf = train_perceptron(X, y, max_iter=1000, seed=1)
    assert np.mean(clf.predict(X) == y) == 1.0


def test_single_class_is_an_error():
    with pytest.raises(TrainingError):
        train_perceptron(np.zeros((5, 2)), np.zeros(5, dtype=int))
    with pytest.raises(TrainingError):
        train_pool(np.zeros((5, 2)), np.ones(5, dtype=int), M=3)


def test_training_is_deterministic():
    ds = make_banana(300, seed=2)
    d = normalize(ds, np.arange(300))
    a = train_perceptron(d.X, d.y, seed=5)
    b = train_perceptron(d.X, d.y, seed=5)
    assert a == b
    assert a != train_perceptron(d.X, d.y, seed=6)


def test_predict_examples():
    clf = LinearClassifier([[1.0, 0.0], [-1.0, 0.0]], [0.0, 0.0], [0, 1])
    assert clf.predict_one((0.8, 0.1)) == 0
    assert clf.predict_one((-0.8, 0.1)) == 1
    # exact tie goes to the lowest class id
    assert clf.predict_one((0.0, 0.7)) == 0
    biased = LinearClassifier([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], [0.1, 0.7, 0.3], [0, 1, 2])
    assert biased.predict_one((0.0, 0.0)) == 1
    with pytest.raises(DimensionError):
        clf.predict_one((0.1, 0.2, 0.3))


def test_classifier_validation():
    with pytest.raises(ValueError):
        LinearClassifier([[1.0]], [0.0], [0])
    with pytest.raises(ValueError):
        LinearClassifier([[1.0], [2.0]], [0.0, 0.0], [1, 0])


def test_batch_and_single_scores_agree_with_oracle():
    rng = np.random.default_rng(4)
    clf = LinearClassifier(rng.normal(size=(3, 4)), rng.normal(size=3), [0, 1, 2])
    X = rng.random((50, 4))
    batch = clf.predict(X)
    for x, label in zip(X, batch):
        assert clf.predict_one(x) == label
        assert oracles.linear_predict(clf.weights.tolist(), clf.biases.tolist(), [0, 1, 2], x.tolist()) == label


def test_pool_size_and_determinism():
    ds = make_banana(200, seed=3)
    d = normalize(ds, np.arange(200))
    pool = train_pool(d.X, d.y, M=100, seed=9)
    assert len(pool) == 100
    assert pool == train_pool(d.X, d.y, M=100, seed=9)
    idx = pool.predict_index(d.X)
    for q in range(0, 200, 37):
        np.testing.assert_array_equal(idx[q], pool.predict_index_one(d.X[q]))


def test_identity_bootstrap_pool_of_one_equals_single_perceptron():
    ds = make_banana(200, seed=3)
    d = normalize(ds, np.arange(200))
    pool = train_pool(d.X, d.y, M=1, seed=4, bootstrap=False)
    member_seed = int(member_rng(4, 0).integers(2**63))
    assert pool.members[0] == train_perceptron(d.X, d.y, seed=member_seed)


def test_bootstrap_has_full_size_and_two_classes():
    y = np.array([0] * 99 + [1])
    rng = member_rng(0, 0)
    for _ in range(20):
        idx = bootstrap_indices(rng, y)
        assert idx.shape == (100,)
        assert np.unique(y[idx]).size == 2


class _StuckRng:
    """Always draws row 0, so every bootstrap is single-class."""

    def integers(self, low, high, size):
        return np.zeros(size, dtype=np.int64)


def test_hopeless_bootstrap_gives_up():
    with pytest.raises(TrainingError):
        bootstrap_indices(_StuckRng(), np.array([0, 1, 1]))


def test_pool_members_disagree_on_nonseparable_data():
    ds = make_banana(600, seed=5)
    d = normalize(ds, np.arange(400))
    pool = train_pool(d.X[:400], d.y[:400], M=100, seed=0)
    preds = pool.predict_all(d.X[400:500])
    assert np.any(preds != preds[:, :1])


def test_pool_rejects_mixed_members():
    a = LinearClassifier([[1.0], [2.0]], [0.0, 0.0], [0, 1])
    b = LinearClassifier([[1.0, 0.0], [2.0, 0.0]], [0.0, 0.0], [0, 1])
    with pytest.raises(ValueError):
        Pool([a, b])
    with pytest.raises(ValueError):
        Pool([])
