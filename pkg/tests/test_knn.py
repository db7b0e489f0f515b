import numpy as np
import pytest

from rollout_hh._rng import make_rng
from rollout_hh.core import ContractError, generate_instance, replay
from rollout_hh.features import NUM_FEATURES, NUM_STATE_FEATURES, Normalizer, extract_features
from rollout_hh.knn import (SelectorModel, fit, fit_arrays, load_model, model_from_bytes,
                            model_to_bytes, predict, predict_all, save_model)
from rollout_hh.labeling import LabelConfig, build_dataset
from rollout_hh.rules import ALL_RULES, Rule

from conftest import knn_oracle


def random_arrays(n, seed):
    rng = make_rng(seed)
    X = np.zeros((n, NUM_FEATURES))
    X[:, :NUM_STATE_FEATURES] = rng.normal(size=(n, NUM_STATE_FEATURES))
    X[np.arange(n), NUM_STATE_FEATURES + rng.integers(0, 7, size=n)] = 1
    y = rng.random(n)
    return X, y


@pytest.fixture(scope="module")
def small_dataset():
    insts = [generate_instance(5, 4, seed=s, id=f"k{s}") for s in range(6)]
    data, _ = build_dataset(insts, LabelConfig(states_per_instance=6, depth=2))
    return data


def identity_model(points, targets, k):
    norm = Normalizer(np.zeros(NUM_FEATURES), np.ones(NUM_FEATURES))
    return SelectorModel(norm, points, targets, k=k)


def test_hand_example():
    # neighbours at d = 1 and 3 with targets 0 and 0.4
    X = np.zeros((4, NUM_FEATURES))
    X[:, 0] = [1.0, 3.0, 10.0, 20.0]
    model = identity_model(X, np.array([0.0, 0.4, 0.9, 0.9]), k=2)
    r, s = model.predict_vector(np.zeros(NUM_FEATURES))
    assert r == pytest.approx(0.1, rel=1e-7)
    assert s == pytest.approx(0.2, abs=1e-15)


def test_k_one():
    X, y = random_arrays(30, 1)
    model = fit_arrays(X, y, k=1)
    for i in (0, 7, 29):
        r, s = model.predict_vector(X[i])
        assert r == pytest.approx(y[i], rel=1e-12) and s == 0.0


def test_exact_match_dominates():
    X, y = random_arrays(30, 2)
    model = fit_arrays(X, y, k=5, epsilon=1e-14)
    r, _ = model.predict_vector(X[3])
    assert r == pytest.approx(y[3], abs=1e-9)


def test_all_points_used_when_n_equals_k():
    X, y = random_arrays(7, 3)
    model = fit_arrays(X, y, k=7)
    r, s = model.predict_vector(X[0] + 0.3)
    assert s == pytest.approx(y.std(), rel=1e-12)
    assert min(y) <= r <= max(y)


def test_constant_dim_ignored():
    X, y = random_arrays(40, 4)
    X[:, 5] = 2.5
    model = fit_arrays(X, y)
    assert np.all(model.points[:, 5] == 0)
    q = X[11].copy()
    a = model.predict_vector(q)
    q[5] = 1e6
    assert model.predict_vector(q) == a


def test_linear_scan_oracle_random():
    for seed in range(10):
        X, y = random_arrays(50, seed)
        model = fit_arrays(X, y, k=7)
        for q in make_rng(seed + 100).normal(size=(10, NUM_FEATURES)):
            q[NUM_STATE_FEATURES:] = 0
            q[NUM_STATE_FEATURES + seed % 7] = 1
            got = model.predict_vector(q)
            want = knn_oracle(model, q)
            assert got[0] == pytest.approx(want[0], rel=1e-12)
            assert got[1] == pytest.approx(want[1], rel=1e-12, abs=1e-15)


def test_linear_scan_oracle_real_data(small_dataset):
    model = fit(small_dataset)
    inst = generate_instance(5, 4, seed=99)
    state = replay(inst, [0, 1, 2, 0])
    allp = predict_all(model, state)
    for rule in ALL_RULES:
        want = knn_oracle(model, extract_features(state, rule))
        assert predict(model, state, rule) == allp[rule]
        assert allp[rule][0] == pytest.approx(want[0], rel=1e-12)
        assert allp[rule][1] == pytest.approx(want[1], rel=1e-12, abs=1e-15)


def test_single_rule_model_still_answers(small_dataset):
    only = [s for s in small_dataset if s.rule is Rule.SPT]
    model = fit(only)
    state = replay(generate_instance(5, 4, seed=3), [1])
    preds = predict_all(model, state)
    for rule in ALL_RULES:
        want = knn_oracle(model, extract_features(state, rule))
        assert preds[rule][0] == pytest.approx(want[0], rel=1e-12)


def test_fit_deterministic(small_dataset):
    a, b = fit(small_dataset), fit(small_dataset)
    assert a.fingerprint() == b.fingerprint()
    assert model_to_bytes(a) == model_to_bytes(b)


def test_fit_too_small():
    X, y = random_arrays(5, 0)
    with pytest.raises(ContractError):
        fit_arrays(X, y, k=7)


def test_round_trip(tmp_path, small_dataset):
    model = fit(small_dataset, k=5, default_rule="mwkr")
    save_model(tmp_path / "m.knn", model, {"note": 1})
    back = load_model(tmp_path / "m.knn")
    assert back.fingerprint() == model.fingerprint()
    assert back.default_rule is Rule.MWKR and back.k == 5
    q = small_dataset[3].features + 0.01
    assert back.predict_vector(q) == model.predict_vector(q)
    with pytest.raises(ContractError):
        model_from_bytes(model_to_bytes(model)[:-8])
    with pytest.raises(ContractError):
        model_from_bytes(b"junk")


def test_structural_tie_goes_to_lower_index():
    # one state stored under two equally frequent rules: equal distances to a third rule
    rng = make_rng(8)
    near, far = rng.normal(size=NUM_STATE_FEATURES), rng.normal(size=NUM_STATE_FEATURES) + 5
    X = np.zeros((4, NUM_FEATURES))
    for i, (state, rule) in enumerate([(near, 1), (near, 0), (far, 0), (far, 1)]):
        X[i, :NUM_STATE_FEATURES] = state
        X[i, NUM_STATE_FEATURES + rule] = 1
    y = np.array([0.1, 0.9, 0.5, 0.5])
    model = fit_arrays(X, y, k=1)
    q = np.concatenate([near, np.eye(7)[2]])
    assert model.predict_vector(q) == (pytest.approx(0.1, rel=1e-12), 0.0)
    assert knn_oracle(model, q)[0] == pytest.approx(0.1, rel=1e-12)
