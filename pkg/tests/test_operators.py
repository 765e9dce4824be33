import json

import numpy as np
import pytest

from gqlcost.errors import ModelError
from gqlcost.regressors import (REGRESSORS, OperatorSpec, dump_operator, fit, load_operator,
                                polynomial_width, predict)


def _xy(seed=0, n=80, d=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    return X, 1.5 * X[:, 0] - 2 * X[:, 2] + 4 + rng.normal(scale=0.05, size=n)


def test_linear_recovers_coefficients():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 3))
    y = X @ np.array([1.0, -2.0, 0.5]) + 3.0
    op = fit(OperatorSpec.make("linear_regression"), X, y)
    assert np.allclose(op.coef_, [1.0, -2.0, 0.5]) and op.intercept_ == pytest.approx(3.0)


def test_ridge_closed_form():
    X, y = _xy()
    op = fit(OperatorSpec.make("ridge", alpha=2.0), X, y)
    Xc, yc = X - X.mean(0), y - y.mean()
    expect = np.linalg.solve(Xc.T @ Xc + 2.0 * np.eye(3), Xc.T @ yc)
    assert np.allclose(op.coef_, expect)


def test_scaler_constant_column():
    X = np.column_stack([np.arange(5.0), np.full(5, 7.0)])
    out = fit(OperatorSpec.make("standard_scaler"), X).transform(X)
    assert np.allclose(out[:, 0].mean(), 0) and np.allclose(out[:, 0].std(), 1)
    assert np.all(out[:, 1] == 0)


def test_polynomial_columns():
    X = np.array([[2.0, 3.0]])
    op = fit(OperatorSpec.make("polynomial", degree=2), X)
    assert op.transform(X).tolist() == [[2.0, 3.0, 4.0, 6.0, 9.0]]
    assert polynomial_width(2, 2) == 5 and polynomial_width(64, 2) == 64 + 64 * 65 // 2


@pytest.mark.parametrize("kind", REGRESSORS)
def test_roundtrip_exact(kind):
    X, y = _xy(2)
    params = {"n_trees": 5} if kind == "random_forest" else {}
    if kind == "gradient_boosting":
        params = {"n_stages": 10}
    op = fit(OperatorSpec.make(kind, **params), X, y)
    again = load_operator(json.loads(json.dumps(dump_operator(op))))
    assert np.array_equal(predict(op, X), predict(again, X))


@pytest.mark.parametrize("kind", REGRESSORS)
def test_dimension_enforced(kind):
    X, y = _xy(3)
    params = {"n_trees": 2} if kind == "random_forest" else {}
    op = fit(OperatorSpec.make(kind, **params), X, y)
    with pytest.raises(ModelError):
        predict(op, X[:, :2])


def test_forest_seeded():
    X, y = _xy(4)
    a = fit(OperatorSpec.make("random_forest", n_trees=8, seed=1), X, y).predict(X)
    b = fit(OperatorSpec.make("random_forest", n_trees=8, seed=1), X, y).predict(X)
    c = fit(OperatorSpec.make("random_forest", n_trees=8, seed=2), X, y).predict(X)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_forest_is_mean_of_bootstrap_trees():
    from gqlcost.regressors._kernels import apply_tree, build_tree
    X, y = _xy(5, n=40)
    op = fit(OperatorSpec.make("random_forest", n_trees=3, max_depth=3, seed=9), X, y)
    preds = []
    for b in range(3):
        idx = np.random.default_rng([9, b]).integers(0, 40, 40)
        preds.append(apply_tree(X, build_tree(X[idx], y[idx], max_depth=3)))
    assert np.allclose(op.predict(X), np.mean(preds, axis=0))


def test_boosting_staged():
    X, y = _xy(6)
    op = fit(OperatorSpec.make("gradient_boosting", n_stages=20), X, y)
    stages = list(op.staged_predict(X))
    assert len(stages) == 20 and np.allclose(stages[-1], op.predict(X))


@pytest.mark.parametrize("kind,params", [
    ("knn", {"k": 5}),
    ("polynomial", {"degree": 0}),
    ("gradient_boosting", {"learning_rate": 0.0}),
    ("gradient_boosting", {"n_stages": 0}),
    ("ridge", {"alpha": -1.0}),
    ("decision_tree", {"min_leaf": 0}),
    ("random_forest", {"n_trees": 0}),
    ("decision_tree", {"bogus": 1}),
    ("svm", {}),
])
def test_invalid_specs(kind, params):
    with pytest.raises(ModelError):
        OperatorSpec.make(kind, **params)


def test_fit_rejects_bad_input():
    with pytest.raises(ModelError):
        fit(OperatorSpec.make("linear_regression"), np.ones((3, 2)), np.ones(4))
    with pytest.raises(ModelError):
        fit(OperatorSpec.make("linear_regression"), np.array([[np.nan, 1.0]]), np.ones(1))
