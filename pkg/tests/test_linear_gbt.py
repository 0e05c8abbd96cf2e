import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roughbattery.models import (
    MODEL_SCHEMA_VERSION,
    GbtConfig,
    LinearModel,
    MlpConfig,
    dumps_model,
    gbt_fit,
    linear_fit,
    mlp_init,
    model_from_dict,
    model_to_dict,
    predict,
)


def test_linear_exact_recovery():
    X = np.random.default_rng(0).normal(size=(10, 2))
    y = 3 * X[:, 0] - 2 * X[:, 1] + 5
    model = linear_fit(X, y)
    assert np.allclose(model.coefficients, [3, -2], rtol=0, atol=1e-8)
    assert model.intercept == pytest.approx(5, abs=1e-8)
    assert not model.regularized


def test_linear_constant_target_with_ridge():
    X = np.random.default_rng(1).normal(size=(8, 3))
    model = linear_fit(X, np.full(8, 4.5), ridge=0.1)
    assert np.allclose(model.coefficients, 0, atol=1e-12)
    assert model.intercept == pytest.approx(4.5)


def test_linear_duplicate_column_regularizes():
    x = np.arange(6.0)
    model = linear_fit(np.column_stack([x, x]), 2 * x + 1)
    assert model.regularized
    assert model.ridge == 1e-8
    assert model.coefficients.sum() == pytest.approx(2, abs=1e-6)


def test_linear_identity_line():
    model = LinearModel(np.array([1.0]), 0.0)
    assert predict(model, np.array([[4.0]])).tolist() == [4.0]


@pytest.mark.parametrize(
    "X, y, ridge",
    [
        (np.empty((0, 2)), np.empty(0), 0.0),
        (np.ones((3, 2)), np.ones(2), 0.0),
        (np.eye(2), np.ones(2), -1.0),
    ],
)
def test_linear_bad_input(X, y, ridge):
    with pytest.raises(ValueError):
        linear_fit(X, y, ridge)


@pytest.mark.parametrize("seed", range(10))
def test_linear_residual_orthogonal(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(50, 4)) * rng.uniform(0.1, 10, 4)
    y = rng.normal(size=50)
    model = linear_fit(X, y)
    resid = y - model.predict(X)
    scale = np.abs(X).max()
    assert np.abs(X.T @ resid).max() <= 1e-6 * scale
    assert abs(resid.sum()) <= 1e-6 * scale


def test_gbt_zero_rounds_predicts_mean():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(20, 3)), rng.normal(size=20)
    model = gbt_fit(X, y, GbtConfig(n_rounds=0))
    assert np.all(predict(model, X) == y.mean())
    assert np.all(predict(model, rng.normal(size=(4, 3))) == model.base_score)


def test_gbt_one_split_exact():
    X = np.array([[0.0], [0.0], [1.0], [1.0]])
    y = np.array([0.0, 0.0, 10.0, 10.0])
    cfg = GbtConfig(n_rounds=1, max_depth=1, learning_rate=1.0, reg_lambda=0.0, min_samples_leaf=1)
    model = gbt_fit(X, y, cfg)
    assert predict(model, X).tolist() == y.tolist()
    tree = model.trees[0]
    assert tree.feature[0] == 0
    assert tree.threshold[0] == 0.5


def test_gbt_too_few_rows():
    with pytest.raises(ValueError):
        gbt_fit(np.ones((9, 1)), np.ones(9), GbtConfig())


@pytest.mark.parametrize("kwargs", [dict(learning_rate=0.0), dict(learning_rate=1.5), dict(reg_lambda=-1.0), dict(min_samples_leaf=0)])
def test_gbt_config_validation(kwargs):
    with pytest.raises(ValueError):
        GbtConfig(**kwargs)


@pytest.mark.parametrize("seed", range(5))
def test_gbt_training_loss_non_increasing(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(80, 3))
    y = np.sin(X[:, 0]) + X[:, 1] ** 2 + rng.normal(scale=0.3, size=80)
    model = gbt_fit(X, y, GbtConfig(n_rounds=40))
    losses = [np.mean((model.predict(X, k) - y) ** 2) for k in range(41)]
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 6))
def test_gbt_trees_respect_depth_and_leaf_size(seed, depth, leaf):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 4, size=(40, 2)).astype(float)
    y = rng.normal(size=40)
    cfg = GbtConfig(n_rounds=3, max_depth=depth, min_samples_leaf=leaf)
    model = gbt_fit(X, y, cfg)
    for tree in model.trees:
        assert tree.depth() <= depth
        counts = np.bincount(tree.apply(X), minlength=len(tree.feature))
        leaves = tree.feature < 0
        assert np.all(counts[leaves] >= leaf)


def test_gbt_deterministic():
    rng = np.random.default_rng(2)
    X, y = rng.normal(size=(30, 2)), rng.normal(size=30)
    a = gbt_fit(X, y, GbtConfig(n_rounds=5))
    b = gbt_fit(X, y, GbtConfig(n_rounds=5))
    assert model_to_dict(a) == model_to_dict(b)


def test_gbt_batch_equals_rows():
    rng = np.random.default_rng(3)
    X, y = rng.normal(size=(30, 2)), rng.normal(size=30)
    model = gbt_fit(X, y, GbtConfig(n_rounds=5))
    rows = np.array([predict(model, x[None, :])[0] for x in X])
    assert np.array_equal(predict(model, X), rows)


def fitted_models():
    rng = np.random.default_rng(5)
    X, y = rng.normal(size=(30, 3)), rng.normal(size=30)
    return X, [
        linear_fit(X, y),
        gbt_fit(X, y, GbtConfig(n_rounds=4)),
        mlp_init(MlpConfig(layer_widths=(4, 3), seed=1), 3),
    ]


@pytest.mark.parametrize("index", range(3))
def test_model_json_roundtrip(index):
    X, models = fitted_models()
    model = models[index]
    doc = json.loads(dumps_model(model, note="x"))
    assert doc["schema_version"] == MODEL_SCHEMA_VERSION
    assert doc["note"] == "x"
    back = model_from_dict(doc)
    assert np.array_equal(predict(back, X), predict(model, X))


@pytest.mark.parametrize("index", range(3))
def test_predict_width_mismatch(index):
    _, models = fitted_models()
    with pytest.raises(ValueError):
        predict(models[index], np.ones((2, 5)))
    with pytest.raises(ValueError):
        predict(models[index], np.ones(3))


def test_model_schema_version_checked():
    _, models = fitted_models()
    doc = model_to_dict(models[0])
    doc["schema_version"] = 99
    with pytest.raises(ValueError):
        model_from_dict(doc)
    with pytest.raises(ValueError):
        model_from_dict({"schema_version": MODEL_SCHEMA_VERSION, "kind": "svm"})


def test_dumps_model_rejects_colliding_extras():
    model = linear_fit(np.eye(3), np.arange(3.0))
    with pytest.raises(ValueError, match="collide"):
        dumps_model(model, kind="other")
