import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from fhdes.data import make_banana, normalize, stratified_split
from fhdes.engine import ConfigurationError, DesMode, DesModel, select, weighted_vote
from fhdes.hyperbox import DimensionError, HyperboxSet, MembershipKind
from fhdes.linear import LinearClassifier, Pool, train_pool

GAB = MembershipKind.gabrys(1.0)
SBM = MembershipKind.sbm()


def constant(label, n=1, classes=(0, 1)):
    """A classifier that always predicts ``label``."""
    L = len(classes)
    b = np.zeros(L)
    b[list(classes).index(label)] = 1.0
    return LinearClassifier(np.zeros((L, n)), b, classes)


def point_boxes(points, theta=1.0, kind=GAB):
    P = np.array(points, dtype=float).reshape(len(points), -1) if points else None
    n = 1 if P is None else P.shape[1]
    return HyperboxSet(n, theta, kind, P, P)


# -- selection and voting ---------------------------------------------------

def test_select_examples():
    np.testing.assert_array_equal(select([0.9, 0.85, 0.5], 0.99), [0])
    np.testing.assert_array_equal(select([0.9, 0.85, 0.5], 0.0), [0, 1, 2])
    np.testing.assert_array_equal(select([0.8, 0.8, 0.3], 1.0), [0, 1])
    np.testing.assert_array_equal(select([0.0, 0.0], 0.99), [0, 1])


def test_weighted_vote_examples():
    assert weighted_vote(np.array([0, 1, 0]), np.array([0.9, 0.8, 0.7]), 2) == 0
    assert weighted_vote(np.array([0, 1]), np.array([0.5, 0.5]), 2) == 0
    assert weighted_vote(np.array([1]), np.array([0.3]), 3) == 1


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.floats(0, 1), st.floats(0, 1))
def test_select_is_monotone_in_mu_and_never_empty(delta, mu1, mu2):
    lo, hi = sorted((mu1, mu2))
    a, b = set(select(delta, lo)), set(select(delta, hi))
    assert b <= a
    assert len(b) >= 1


# -- competence -------------------------------------------------------------

def one_member_model(boxes, mode, kind=GAB, mu=0.99):
    pool = Pool([constant(0), constant(1)])
    hsets = [boxes, point_boxes([], kind=kind)]
    return DesModel(pool, hsets, DesMode.parse(mode), mu, kind, 1.0)


def test_competence_examples():
    boxes = point_boxes([[0.9], [0.0], [0.4]])  # memberships 0.2, 0.9, 0.7 at x=0.1
    c = one_member_model(boxes, "C").competence([0.1])
    m = one_member_model(boxes, "M").competence([0.1])
    assert c[0] == pytest.approx(0.8)
    assert m[0] == pytest.approx(0.2)
    # empty set: 0 in mode C, 1 in mode M
    assert c[1] == 0.0 and m[1] == 1.0


def test_competence_checks_dimension():
    model = one_member_model(point_boxes([[0.5]]), "C")
    with pytest.raises(DimensionError):
        model.competence([0.1, 0.2])


def test_all_zero_competence_selects_everyone_and_breaks_tie_by_class():
    # mode C, query far beyond every box under a steep Gabrys ramp
    kind = MembershipKind.gabrys(10.0)
    pool = Pool([constant(1), constant(1), constant(0)])
    hsets = [point_boxes([[0.0]], kind=kind)] * 3
    model = DesModel(pool, hsets, DesMode.COMPETENCE, 0.99, kind, 1.0)
    assert np.all(model.competence([0.9]) == 0.0)
    np.testing.assert_array_equal(select(model.competence([0.9]), 0.99), [0, 1, 2])
    assert model.predict_one([0.9]) == 0


def test_mu_one_with_unique_best_follows_that_member():
    pool = Pool([constant(0), constant(1), constant(0)])
    hsets = [point_boxes([[0.9]]), point_boxes([[0.2]]), point_boxes([[0.6]])]
    model = DesModel(pool, hsets, DesMode.COMPETENCE, 1.0, GAB, 1.0)
    assert model.predict_one([0.25]) == 1


def test_two_member_geometry_fixture():
    # member 0 is competent around the lower-left square, member 1 around the upper-right one
    pool = Pool([constant(0, n=2), constant(1, n=2)])
    lower = HyperboxSet(2, 0.27, SBM, [[0.1, 0.1]], [[0.3, 0.3]])
    upper = HyperboxSet(2, 0.27, SBM, [[0.7, 0.7]], [[0.9, 0.9]])
    model = DesModel(pool, [lower, upper], DesMode.COMPETENCE, 0.99, SBM, 0.27)
    x = np.array([0.2, 0.25])
    delta = model.competence(x)
    assert delta[0] == 1.0 and delta[1] < 1.0
    np.testing.assert_array_equal(select(delta, 0.99), [0])
    assert model.predict_one(x) == 0
    assert model.predict_one([0.8, 0.75]) == 1


def test_mode_m_member_without_errors_is_always_selected():
    pool = Pool([constant(0), constant(1)])
    hsets = [point_boxes([]), point_boxes([[0.5], [0.2]])]
    model = DesModel(pool, hsets, DesMode.INCOMPETENCE, 1.0, GAB, 1.0)
    for x in np.linspace(0, 1, 11):
        delta = model.competence([x])
        assert delta[0] == 1.0
        assert 0 in select(delta, 1.0)


# -- fitting ----------------------------------------------------------------

def toy_pool():
    # member 0 predicts class 1 below 0.35 and class 0 above; member 1 is always right on the toy rows
    m0 = LinearClassifier([[1.0], [-1.0]], [-0.35, 0.35], [0, 1])
    m1 = LinearClassifier([[0.0], [0.0]], [1.0, 0.0], [0, 1])
    return Pool([m0, m1])


def test_fit_mode_m_covers_misclassified_rows():
    X = np.array([[0.1], [0.2], [0.5], [0.8]])
    y = np.array([0, 0, 1, 0])
    model = DesModel.fit(toy_pool(), X, y, "M", theta=0.3, kind=GAB)
    # member 0 errs on rows 0.1, 0.2 (says 1) and 0.5 (says 0)
    assert model.hsets[0].V.ravel().tolist() == [0.1, 0.5]
    assert model.hsets[0].W.ravel().tolist() == [0.2, 0.5]
    # member 1 always predicts 0 and so misses only row 0.5
    assert model.hsets[1].V.ravel().tolist() == [0.5]


def test_fit_mode_c_covers_every_row_of_a_perfect_member():
    X = np.array([[0.1], [0.2], [0.5], [0.8]])
    y = np.zeros(4, dtype=int)
    model = DesModel.fit(toy_pool(), X, y, "C", theta=0.3, kind=GAB)
    assert len(model.hsets[1]) >= 1
    for x in X:
        assert any(b.v[0] <= x[0] <= b.w[0] for b in model.hsets[1].boxes)


def test_fit_with_zero_errors_in_mode_m_gives_empty_set():
    X = np.array([[0.1], [0.9]])
    model = DesModel.fit(toy_pool(), X, np.zeros(2, dtype=int), "M", theta=0.3, kind=GAB)
    assert len(model.hsets[1]) == 0


def test_fit_rejects_bad_dsel():
    with pytest.raises(ConfigurationError):
        DesModel.fit(toy_pool(), np.empty((0, 1)), np.empty(0, dtype=int))
    with pytest.raises(DimensionError):
        DesModel.fit(toy_pool(), np.zeros((3, 2)), np.zeros(3, dtype=int))
    with pytest.raises(ConfigurationError):
        DesModel(toy_pool(), [point_boxes([])], DesMode.COMPETENCE, 0.5, GAB, 1.0)
    with pytest.raises(ConfigurationError):
        DesModel(toy_pool(), [point_boxes([])] * 2, DesMode.COMPETENCE, 1.5, GAB, 1.0)


# -- whole-model consistency ------------------------------------------------

@pytest.fixture(scope="module")
def banana_model_inputs():
    ds = make_banana(600, seed=1)
    train, dsel, test = stratified_split(ds, seed=1)
    d = normalize(ds, train)
    pool = train_pool(d.X[train], d.y[train], M=15, seed=1)
    return pool, d.X[dsel], d.y[dsel], d.X[test]


@pytest.mark.parametrize("mode", ["C", "M"])
@pytest.mark.parametrize("kind", [SBM, GAB, MembershipKind.gabrys(3.0)])
def test_batch_single_and_oracle_agree(banana_model_inputs, mode, kind):
    pool, Xd, yd, Xt = banana_model_inputs
    model = DesModel.fit(pool, Xd, yd, mode, 0.27, kind, 0.99)
    batch = model.predict(Xt)
    members = [(m.weights.tolist(), m.biases.tolist(), m.classes.tolist()) for m in pool.members]
    boxes = [list(zip(h.V.tolist(), h.W.tolist())) for h in model.hsets]
    comp = model.competence_batch(Xt)
    for q, x in enumerate(Xt):
        assert model.predict_one(x) == batch[q]
        np.testing.assert_array_equal(model.competence(x), comp[q])
        assert oracles.des_predict(members, boxes, kind.name, mode, 0.99, x.tolist(), kind.gamma) == batch[q]
    assert np.all((comp >= 0) & (comp <= 1))
