import numpy as np
import pytest

from gqlcost._accel import HAVE_NUMBA, backend, use_backend
from gqlcost.regressors import OperatorSpec, fit
from gqlcost.regressors._kernels import apply_tree, build_tree, knn_predict, presort

from oracles import best_split, knn_oracle

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def each_backend(request):
    with use_backend(request.param):
        yield request.param


def _data(seed, n=120, d=4, discrete=False):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, (n, d)).astype(float) if discrete else rng.normal(size=(n, d))
    y = X[:, 0] * 2 - X[:, 1] ** 2 + rng.normal(scale=0.1, size=n)
    return X, y


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("discrete", [False, True])
def test_root_split_is_optimal(each_backend, seed, discrete):
    X, y = _data(seed, n=60, discrete=discrete)
    feature, threshold, *_ = build_tree(X, y, max_depth=1)
    sse, j, thr = best_split(X, y)
    assert feature[0] == j
    assert threshold[0] == pytest.approx(thr)


def test_min_leaf_respected(each_backend):
    X, y = _data(3, n=80)
    tree = build_tree(X, y, min_leaf=7)
    feature, _, left, right, _ = tree
    leaves = apply_tree(X, tree)
    _, counts = np.unique(leaves, return_counts=True)
    assert counts.min() >= 7


def test_unbounded_tree_interpolates(each_backend):
    X, y = _data(1)
    tree = build_tree(X, y)
    assert np.allclose(apply_tree(X, tree), y)


def test_constant_target_single_leaf(each_backend):
    X, _ = _data(2)
    tree = build_tree(X, np.full(X.shape[0], 3.5))
    assert tree[0].tolist() == [-1] and tree[4].tolist() == [3.5]


def test_presort_shape():
    X, _ = _data(0, n=10, d=3)
    order = presort(X)
    assert order.shape == (3, 10)
    assert np.all(np.diff(X[order[1], 1]) >= 0)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("seed", range(4))
def test_backends_agree(seed):
    X, y = _data(seed, n=200, d=5, discrete=seed % 2 == 1)
    Q = np.random.default_rng(seed + 100).normal(size=(50, 5))
    out = {}
    for name in ("numpy", "numba"):
        with use_backend(name):
            tree = build_tree(X, y, max_depth=6, min_leaf=2)
            out[name] = (tree, apply_tree(Q, tree), knn_predict(X, y, Q, 3))
    for a, b in zip(out["numpy"][0], out["numba"][0]):
        assert np.array_equal(a, b)
    assert np.array_equal(out["numpy"][1], out["numba"][1])
    assert np.allclose(out["numpy"][2], out["numba"][2], rtol=1e-12)


def test_knn_matches_oracle(each_backend):
    X, y = _data(4, n=50, discrete=True)
    Q = X[:10] + 0.25
    assert np.allclose(knn_predict(X, y, Q, 3), knn_oracle(X, y, Q, 3))


def test_tree_matches_sklearn(each_backend):
    sk = pytest.importorskip("sklearn.tree")
    X, y = _data(7, n=150)
    ours = apply_tree(X[:40] + 0.01, build_tree(X, y, max_depth=4))
    ref = sk.DecisionTreeRegressor(max_depth=4, random_state=0).fit(X, y).predict(X[:40] + 0.01)
    assert np.allclose(ours, ref)


def test_backend_switch_restores():
    before = backend()
    with use_backend("numpy"):
        assert backend() == "numpy"
    assert backend() == before


def test_boosting_matches_manual_loop(each_backend):
    X, y = _data(5, n=100)
    spec = OperatorSpec.make("gradient_boosting", n_stages=15, learning_rate=0.3, max_depth=2)
    model = fit(spec, X, y)
    pred = np.full(len(y), y.mean())
    for _ in range(15):
        tree = build_tree(X, y - pred, max_depth=2)
        pred = pred + 0.3 * apply_tree(X, tree)
    assert np.allclose(model.predict(X), pred)
    assert np.all(np.diff(model.train_loss_) <= 1e-12)


def test_env_flag_selects_numpy():
    import os
    import subprocess
    import sys
    env = dict(os.environ, GQLCOST_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", "from gqlcost._accel import backend; print(backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
