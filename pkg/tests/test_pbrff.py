import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gbrff.data import Dataset
from gbrff.pbrff import (PbrffModel, alignment_loss, alignment_losses, compute_q_pbrff, fit_pbrff, hinge_objective,
                         kl_uniform, learn_representation, map_features, map_points, pac_bayes_bound, predict,
                         predict_raw, sample_landmarks, train_linear, train_linear_lanes)
from gbrff.rff import RffSet, SimplexWeights, derive_seed, kernel_value, sample_rff, softmin_weights


def blobs(n=60, d=3, seed=0, gap=1.0):
    rng = np.random.default_rng(seed)
    y = np.where(rng.uniform(size=n) < 0.5, 1, -1)
    return Dataset(rng.standard_normal((n, d)) + gap * y[:, None], y, "blobs")


def test_alignment_perfect_and_uninformative():
    rff = RffSet(np.array([[1.0, 0.0]]))
    lm = np.array([0.3, 0.3])
    pts = np.tile(lm, (4, 1))
    assert alignment_loss(0, rff, (lm, 1), pts, np.ones(4)) == 0.0
    shifted = pts - np.array([math.pi / 2, 0.0])
    assert alignment_loss(0, rff, (lm, 1), shifted, np.array([1, -1, 1, 1])) == pytest.approx(0.5, abs=1e-15)


def test_alignment_matches_direct_summation():
    rng = np.random.default_rng(1)
    rff = sample_rff(6, 3, 1)
    x, y = rng.standard_normal((15, 3)), np.where(rng.uniform(size=15) < 0.5, 1, -1)
    lm, lab = rng.standard_normal(3), -1
    for j in range(6):
        direct = sum(0.5 - 0.5 * lab * y[i] * math.cos(rff.omegas[j] @ (lm - x[i])) for i in range(15)) / 15
        assert alignment_loss(j, rff, (lm, lab), x, y) == pytest.approx(direct, rel=1e-12, abs=1e-15)


def test_alignment_errors():
    rff = sample_rff(3, 2, 0)
    with pytest.raises(ValueError):
        alignment_losses(rff, np.zeros(2), 1, np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(ValueError):
        alignment_losses(rff, np.zeros(2), 1, np.zeros((3, 3)), np.ones(3))


def test_compute_q_pbrff_examples():
    q = compute_q_pbrff(np.array([0.2, 0.9, 0.4]), 0.0, 50)
    assert np.array_equal(q.q, np.full(3, 1 / 3))
    # beta sqrt(n) = 30
    q = compute_q_pbrff(np.array([0.0, 1.0]), 3.0, 100)
    assert q.q[0] == pytest.approx(1.0, abs=1e-12) and q.q[1] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        compute_q_pbrff(np.array([0.1, 0.2]), -1.0, 10)


@settings(max_examples=100, deadline=None)
@given(losses=st.lists(st.floats(0, 1), min_size=2, max_size=20), beta=st.floats(0, 1000),
       n=st.integers(2, 5000))
def test_compute_q_pbrff_simplex_and_order(losses, beta, n):
    losses = np.array(losses)
    q = compute_q_pbrff(losses, beta, n).q
    assert np.all(q >= 0) and abs(q.sum() - 1) <= 1e-12
    order = np.argsort(losses, kind="stable")
    assert np.all(np.diff(q[order]) <= 1e-15)


def random_model(seed=0, n_l=4, k=7, d=3):
    rng = np.random.default_rng(seed)
    lms = tuple((rng.standard_normal(d), int(rng.choice([-1, 1]))) for _ in range(n_l))
    per = tuple((sample_rff(k, d, derive_seed(seed, t)), SimplexWeights(softmin_weights(rng.standard_normal(k))))
                for t in range(n_l))
    return PbrffModel(lms, per, rng.standard_normal(n_l), float(rng.standard_normal()))


def test_map_features_examples():
    model = random_model()
    assert map_features(model, model.landmarks[2][0])[2] == pytest.approx(1.0, abs=1e-12)
    x = np.random.default_rng(5).standard_normal(3)
    expected = [kernel_value(rff, q, p, x) for (p, _), (rff, q) in zip(model.landmarks, model.per_landmark)]
    assert np.array_equal(map_features(model, x), expected)
    pts = np.random.default_rng(6).standard_normal((5, 3))
    assert np.allclose(map_points(model, pts), [map_features(model, p) for p in pts], atol=1e-14)
    with pytest.raises(ValueError):
        map_features(model, np.zeros((2, 2)))


def test_predict_raw_is_linear_in_features():
    model = random_model(3)
    x = np.random.default_rng(1).standard_normal(3)
    assert predict_raw(model, x) == pytest.approx(map_features(model, x) @ model.weights + model.bias, abs=1e-14)
    assert predict(model, x) in (-1, 1)


def test_train_linear_separable_toy():
    f, y = np.array([[-1.0], [1.0]]), np.array([-1, 1])
    fit = train_linear(f, y, 10.0, epochs=500)
    assert np.array_equal(np.sign(f @ fit.weights + fit.bias), y)


def test_train_linear_small_c_collapses():
    rng = np.random.default_rng(2)
    f = rng.standard_normal((40, 5))
    y = np.where(f[:, 0] > 0, 1, -1)
    norms = [np.linalg.norm(train_linear(f, y, c, epochs=300).weights) for c in (1.0, 1e-2, 1e-4, 1e-6)]
    assert all(a > b for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-2


def test_train_linear_duplicated_rows_with_half_c():
    # lam = 1/(C n): duplicating every row doubles n, so C is halved to keep the same problem
    rng = np.random.default_rng(3)
    f = rng.standard_normal((30, 4))
    y = np.where(f @ np.array([1.0, -0.5, 0.2, 0.0]) + 0.3 * rng.standard_normal(30) > 0, 1, -1)
    a = train_linear(f, y, 2.0, epochs=200)
    b = train_linear(np.vstack([f, f]), np.concatenate([y, y]), 1.0, epochs=200)
    probe = rng.standard_normal((50, 4))
    assert np.allclose(probe @ a.weights + a.bias, probe @ b.weights + b.bias, atol=1e-6)


def test_train_linear_trace_non_increasing_and_matches_objective():
    rng = np.random.default_rng(4)
    f = rng.standard_normal((50, 6))
    y = np.where(rng.uniform(size=50) < 0.5, 1, -1)
    fit = train_linear(f, y, 10.0, epochs=150)
    assert np.all(np.diff(fit.objective) <= 0)
    lam = 1.0 / (10.0 * 50)
    assert fit.objective[-1] == pytest.approx(hinge_objective(f, y, fit.weights, fit.bias, lam), rel=1e-10)


def test_train_linear_lanes_match_single_runs():
    rng = np.random.default_rng(5)
    f = rng.standard_normal((40, 6))
    y = np.where(f[:, 1] + 0.5 * rng.standard_normal(40) > 0, 1, -1)
    w, b, _ = train_linear_lanes(f, y, [0.1, 10.0, 1.0], epochs=80, widths=[6, 6, 2])
    for m, (c, width) in enumerate([(0.1, 6), (10.0, 6), (1.0, 2)]):
        single = train_linear(f[:, :width], y, c, epochs=80)
        assert np.allclose(w[:width, m], single.weights, atol=1e-12)
        assert np.all(w[width:, m] == 0)
        assert b[m] == pytest.approx(single.bias, abs=1e-12)


def test_train_linear_errors():
    with pytest.raises(ValueError):
        train_linear(np.zeros((3, 2)), np.ones(3), 0.0)
    with pytest.raises(ValueError):
        train_linear(np.zeros((3, 2)), np.ones(2), 1.0)
    with pytest.raises(ValueError):
        train_linear(np.zeros((3, 2)), np.ones(3), 1.0, epochs=0)


def test_fit_pbrff_single_landmark_uniform():
    ds = blobs(30)
    model = fit_pbrff(ds, 1, 10, 0.0, 1.0, seed=4)
    assert model.n_landmarks == 1
    rff, q = model.per_landmark[0]
    assert np.array_equal(q.q, np.full(10, 0.1))
    i = sample_landmarks(ds.n, 1, 4)[0]
    assert np.array_equal(model.landmarks[0][0], ds.x[i]) and model.landmarks[0][1] == ds.y[i]
    assert np.array_equal(rff.omegas, sample_rff(10, ds.d, derive_seed(4, 1)).omegas)


def test_fit_pbrff_is_deterministic():
    ds = blobs(40)
    a, b = fit_pbrff(ds, 5, 8, 1.0, 1.0, seed=9), fit_pbrff(ds, 5, 8, 1.0, 1.0, seed=9)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias
    for (pa, la), (pb, lb) in zip(a.landmarks, b.landmarks):
        assert np.array_equal(pa, pb) and la == lb
    for (ra, qa), (rb, qb) in zip(a.per_landmark, b.per_landmark):
        assert np.array_equal(ra.omegas, rb.omegas) and np.array_equal(qa.q, qb.q)


def test_fit_pbrff_separates_blobs():
    train, test = blobs(80, seed=1, gap=2.0), blobs(200, seed=2, gap=2.0)
    model = fit_pbrff(train, 20, 30, 1.0, 10.0, seed=0)
    assert np.mean(predict(model, test.x) == test.y) >= 0.95


def test_representation_is_prefix_stable():
    ds = blobs(40, seed=3)
    small = learn_representation(ds.x, ds.y, 3, 6, seed=2)
    big = learn_representation(ds.x, ds.y, 8, 6, seed=2)
    assert np.array_equal(big.indices[:3], small.indices)
    assert np.array_equal(big.losses[:3], small.losses)
    for a, b in zip(small.rffs, big.rffs):
        assert np.array_equal(a.omegas, b.omegas)


def test_representation_excludes_landmark_row():
    ds = blobs(12, seed=4)
    rep = learn_representation(ds.x, ds.y, 2, 5, seed=1)
    i = rep.indices[0]
    keep = np.arange(ds.n) != i
    expected = alignment_losses(rep.rffs[0], ds.x[i], ds.y[i], ds.x[keep], ds.y[keep])
    assert np.array_equal(rep.losses[0], expected)


def test_kl_uniform_examples():
    assert kl_uniform(SimplexWeights.uniform(5)) == 0.0
    assert kl_uniform(SimplexWeights(np.array([1.0, 0.0]))) == pytest.approx(math.log(2), abs=1e-15)


def test_pac_bayes_bound_uniform():
    losses = np.array([0.1, 0.3, 0.5, 0.7])
    s, eps, n = 10.0, 0.05, 101
    expected = losses.mean() + (s * s / (2 * (n - 1)) + math.log(1 / eps)) / s
    assert pac_bayes_bound(losses, SimplexWeights.uniform(4), s, eps, n) == pytest.approx(expected, abs=1e-14)


def test_pac_bayes_bound_one_hot():
    q = SimplexWeights(np.array([1.0, 0.0]))
    got = pac_bayes_bound(np.array([0.2, 0.6]), q, 2.0, 0.1, 11)
    assert got == pytest.approx(0.2 + (math.log(2) + 4 / 20 + math.log(10)) / 2, abs=1e-14)


@pytest.mark.parametrize("kwargs", [{"s": 0.0}, {"epsilon": 0.0}, {"epsilon": 1.0}, {"n": 1},
                                    {"emp_losses": np.array([0.5, 1.5])}])
def test_pac_bayes_bound_errors(kwargs):
    args = {"emp_losses": np.array([0.2, 0.4]), "q": SimplexWeights.uniform(2), "s": 1.0, "epsilon": 0.1, "n": 10}
    args.update(kwargs)
    with pytest.raises(ValueError):
        pac_bayes_bound(**args)
