"""Preprocessing and regression operators.

Every operator follows the same small protocol: ``fit(X, y)`` returns
``self``, ``predict(X)`` (regressors) or ``transform(X)`` (preprocessors),
and ``get_state()`` / ``from_state()`` for exact JSON round-trips.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Any

import numpy as np

from ..errors import ModelError
from . import _kernels

PREPROCESSORS = ("standard_scaler", "no_op", "polynomial")
REGRESSORS = ("linear_regression", "ridge", "decision_tree", "random_forest", "knn",
              "gradient_boosting")

_DEFAULTS: dict[str, dict[str, Any]] = {
    "standard_scaler": {},
    "no_op": {},
    "polynomial": {"degree": 2},
    "linear_regression": {},
    "ridge": {"alpha": 1.0},
    "decision_tree": {"max_depth": None, "min_leaf": 1},
    "random_forest": {"n_trees": 100, "max_depth": None, "min_leaf": 1, "seed": 0},
    "knn": {"k": 3},
    "gradient_boosting": {"n_stages": 100, "learning_rate": 0.1, "max_depth": 3,
                          "min_leaf": 1, "seed": 0},
}


@dataclass(frozen=True)
class OperatorSpec:
    kind: str
    params: tuple[tuple[str, Any], ...] = ()

    @classmethod
    def make(cls, kind: str, **params) -> OperatorSpec:
        if kind not in _DEFAULTS:
            raise ModelError(f"unknown operator kind {kind!r}")
        unknown = set(params) - set(_DEFAULTS[kind])
        if unknown:
            raise ModelError(f"unknown hyperparameters for {kind}: {sorted(unknown)}")
        merged = {**_DEFAULTS[kind], **params}
        return cls(kind, tuple(sorted(merged.items())))

    def __post_init__(self):
        p = dict(self.params)
        if self.kind == "knn" and p.get("k") != 3:
            raise ModelError("knn uses k = 3")
        if self.kind == "polynomial" and p["degree"] < 1:
            raise ModelError("polynomial degree must be >= 1")
        if self.kind == "gradient_boosting":
            if p["n_stages"] < 1:
                raise ModelError("n_stages must be >= 1")
            if not 0 < p["learning_rate"] <= 1:
                raise ModelError("learning_rate must lie in (0, 1]")
        if self.kind == "ridge" and p["alpha"] < 0:
            raise ModelError("ridge alpha must be >= 0")
        for key in ("min_leaf", "n_trees"):
            if key in p and p[key] < 1:
                raise ModelError(f"{key} must be >= 1")

    def get(self, name: str):
        return dict(self.params)[name]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: dict) -> OperatorSpec:
        return cls.make(data["kind"], **data.get("params", {}))

    def label(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"{self.kind}({inner})" if inner else self.kind


def _check_xy(X, y=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ModelError("feature matrix must be two-dimensional")
    if X.shape[0] < 1:
        raise ModelError("empty feature matrix")
    if not np.isfinite(X).all():
        raise ModelError("feature matrix contains non-finite values")
    if y is None:
        return X
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != X.shape[0]:
        raise ModelError(f"{X.shape[0]} rows but {y.shape[0]} targets")
    if not np.isfinite(y).all():
        raise ModelError("targets contain non-finite values")
    return X, y


class Operator:
    spec: OperatorSpec
    n_features: int | None = None

    def __init__(self, spec: OperatorSpec):
        self.spec = spec

    def _check_dim(self, X) -> np.ndarray:
        if self.n_features is None:
            raise ModelError(f"{self.spec.kind} used before fit")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ModelError(
                f"{self.spec.kind} was fitted on {self.n_features} columns, got {X.shape[-1]}")
        if not np.isfinite(X).all():
            raise ModelError("feature matrix contains non-finite values")
        return X

    def get_state(self) -> dict:
        return {"n_features": self.n_features, **self._state()}

    def _state(self) -> dict:
        return {}

    def _load(self, state: dict) -> None:
        pass

    @classmethod
    def from_state(cls, spec: OperatorSpec, state: dict) -> Operator:
        op = OPERATORS[spec.kind](spec)
        op.n_features = state["n_features"]
        op._load(state)
        return op


class StandardScaler(Operator):
    def fit(self, X, y=None):
        X = _check_xy(X)
        self.n_features = X.shape[1]
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        return self

    def transform(self, X):
        X = self._check_dim(X)
        return (X - self.mean_) / self.scale_

    def _state(self):
        return {"mean": self.mean_.tolist(), "scale": self.scale_.tolist()}

    def _load(self, state):
        self.mean_ = np.array(state["mean"], dtype=np.float64)
        self.scale_ = np.array(state["scale"], dtype=np.float64)


class NoOp(Operator):
    def fit(self, X, y=None):
        self.n_features = _check_xy(X).shape[1]
        return self

    def transform(self, X):
        return self._check_dim(X)


def polynomial_terms(n_features: int, degree: int) -> list[tuple[int, ...]]:
    terms = []
    for deg in range(1, degree + 1):
        terms.extend(combinations_with_replacement(range(n_features), deg))
    return terms


def polynomial_width(n_features: int, degree: int) -> int:
    return len(polynomial_terms(n_features, degree))


class Polynomial(Operator):
    """All monomials of degree 1..degree, interactions included, no bias column."""

    def fit(self, X, y=None):
        self.n_features = _check_xy(X).shape[1]
        self.terms_ = polynomial_terms(self.n_features, self.spec.get("degree"))
        return self

    def transform(self, X):
        X = self._check_dim(X)
        out = np.empty((X.shape[0], len(self.terms_)), dtype=np.float64)
        for i, term in enumerate(self.terms_):
            col = X[:, term[0]].copy()
            for j in term[1:]:
                col *= X[:, j]
            out[:, i] = col
        return out

    def _load(self, state):
        self.terms_ = polynomial_terms(self.n_features, self.spec.get("degree"))


class LinearRegression(Operator):
    def _solve(self, Xc, yc):
        coef, *_ = np.linalg.lstsq(Xc, yc, rcond=None)
        return coef

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        self.n_features = X.shape[1]
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        self.coef_ = self._solve(X - x_mean, y - y_mean)
        self.intercept_ = float(y_mean - x_mean @ self.coef_)
        return self

    def predict(self, X):
        X = self._check_dim(X)
        return X @ self.coef_ + self.intercept_

    def _state(self):
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_}

    def _load(self, state):
        self.coef_ = np.array(state["coef"], dtype=np.float64)
        self.intercept_ = float(state["intercept"])


class Ridge(LinearRegression):
    def _solve(self, Xc, yc):
        alpha = float(self.spec.get("alpha"))
        gram = Xc.T @ Xc + alpha * np.eye(Xc.shape[1])
        try:
            return np.linalg.solve(gram, Xc.T @ yc)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(gram, Xc.T @ yc, rcond=None)[0]


def _depth_arg(max_depth) -> int:
    return -1 if max_depth is None else int(max_depth)


def _tree_state(tree) -> dict:
    feature, threshold, left, right, value = tree
    return {"feature": feature.tolist(), "threshold": threshold.tolist(),
            "left": left.tolist(), "right": right.tolist(), "value": value.tolist()}


def _tree_load(state: dict):
    return (np.array(state["feature"], dtype=np.int64),
            np.array(state["threshold"], dtype=np.float64),
            np.array(state["left"], dtype=np.int64),
            np.array(state["right"], dtype=np.int64),
            np.array(state["value"], dtype=np.float64))


class DecisionTree(Operator):
    """Variance-reduction CART."""

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        self.n_features = X.shape[1]
        self.tree_ = _kernels.build_tree(X, y, None, _depth_arg(self.spec.get("max_depth")),
                                        self.spec.get("min_leaf"))
        return self

    def predict(self, X):
        return _kernels.apply_tree(self._check_dim(X), self.tree_)

    def _state(self):
        return {"tree": _tree_state(self.tree_)}

    def _load(self, state):
        self.tree_ = _tree_load(state["tree"])


class RandomForest(Operator):
    """Bagged CART trees on seeded bootstrap samples (all features per split)."""

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        n = X.shape[0]
        self.n_features = X.shape[1]
        depth = _depth_arg(self.spec.get("max_depth"))
        seed = int(self.spec.get("seed"))
        self.trees_ = []
        for b in range(self.spec.get("n_trees")):
            rows = np.random.default_rng([seed, b]).integers(0, n, size=n)
            Xb = X[rows]
            self.trees_.append(_kernels.build_tree(Xb, y[rows], None, depth,
                                                   self.spec.get("min_leaf")))
        return self

    def predict(self, X):
        X = self._check_dim(X)
        acc = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees_:
            acc += _kernels.apply_tree(X, tree)
        return acc / len(self.trees_)

    def _state(self):
        return {"trees": [_tree_state(t) for t in self.trees_]}

    def _load(self, state):
        self.trees_ = [_tree_load(t) for t in state["trees"]]


class KNearest(Operator):
    """Mean target of the 3 nearest training rows (Euclidean, lower index wins ties)."""

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        self.n_features = X.shape[1]
        self.X_ = X.copy()
        self.y_ = y.copy()
        return self

    def predict(self, X):
        X = self._check_dim(X)
        return _kernels.knn_predict(self.X_, self.y_, X, self.spec.get("k"))

    def _state(self):
        return {"X": self.X_.tolist(), "y": self.y_.tolist()}

    def _load(self, state):
        self.X_ = np.array(state["X"], dtype=np.float64).reshape(-1, self.n_features)
        self.y_ = np.array(state["y"], dtype=np.float64)


class GradientBoosting(Operator):
    """Least-squares boosting of depth-limited CART trees from the target mean."""

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        self.n_features = X.shape[1]
        lr = float(self.spec.get("learning_rate"))
        depth = _depth_arg(self.spec.get("max_depth"))
        min_leaf = self.spec.get("min_leaf")
        order = _kernels.presort(X)
        self.init_ = float(y.mean())
        current = np.full(y.shape[0], self.init_)
        self.trees_ = []
        self.train_loss_ = []
        for _ in range(self.spec.get("n_stages")):
            tree = _kernels.build_tree(X, y - current, order, depth, min_leaf)
            self.trees_.append(tree)
            current = current + lr * _kernels.apply_tree(X, tree)
            self.train_loss_.append(float(np.mean((y - current) ** 2)))
        return self

    def staged_predict(self, X):
        X = self._check_dim(X)
        lr = float(self.spec.get("learning_rate"))
        current = np.full(X.shape[0], self.init_)
        for tree in self.trees_:
            current = current + lr * _kernels.apply_tree(X, tree)
            yield current

    def predict(self, X):
        X = self._check_dim(X)
        lr = float(self.spec.get("learning_rate"))
        current = np.full(X.shape[0], self.init_)
        for tree in self.trees_:
            current = current + lr * _kernels.apply_tree(X, tree)
        return current

    def _state(self):
        return {"init": self.init_, "trees": [_tree_state(t) for t in self.trees_]}

    def _load(self, state):
        self.init_ = float(state["init"])
        self.trees_ = [_tree_load(t) for t in state["trees"]]


OPERATORS: dict[str, type[Operator]] = {
    "standard_scaler": StandardScaler,
    "no_op": NoOp,
    "polynomial": Polynomial,
    "linear_regression": LinearRegression,
    "ridge": Ridge,
    "decision_tree": DecisionTree,
    "random_forest": RandomForest,
    "knn": KNearest,
    "gradient_boosting": GradientBoosting,
}


def fit(spec: OperatorSpec, X, y=None) -> Operator:
    if spec.kind in REGRESSORS:
        if y is None:
            raise ModelError(f"{spec.kind} needs targets")
        return OPERATORS[spec.kind](spec).fit(X, y)
    return OPERATORS[spec.kind](spec).fit(X)


def predict(op: Operator, X) -> np.ndarray:
    if op.spec.kind in REGRESSORS:
        return op.predict(X)
    return op.transform(X)


def dump_operator(op: Operator) -> dict:
    return {"spec": op.spec.to_dict(), "state": op.get_state()}


def load_operator(data: dict) -> Operator:
    return Operator.from_state(OperatorSpec.from_dict(data["spec"]), data["state"])
