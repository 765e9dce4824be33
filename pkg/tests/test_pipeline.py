import numpy as np
import pytest

from gqlcost.cost import CostConfig
from gqlcost.dataset import GeneratorConfig, generate_synthetic
from gqlcost.errors import ModelError
from gqlcost.features import Featurizer
from gqlcost.pipeline import (PipelineSpec, SearchSpace, StackedModel, cross_validate, estimate,
                              fit_pipeline, kfold, out_of_fold, search, train_stacked)
from gqlcost.query import load_typed_query
from gqlcost.regressors import OperatorSpec, polynomial_width

LR = PipelineSpec(OperatorSpec.make("no_op"), OperatorSpec.make("linear_regression"))
KNN = PipelineSpec(OperatorSpec.make("no_op"), OperatorSpec.make("knn"))


def _xy(n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    return X, 3 * X[:, 0] + X[:, 1] ** 2 + rng.normal(scale=0.1, size=n)


def test_kfold_partitions():
    folds = kfold(23, 5, seed=3)
    allidx = np.concatenate(folds)
    assert sorted(allidx.tolist()) == list(range(23))
    assert {len(f) for f in folds} <= {4, 5}
    assert all(np.array_equal(a, b) for a, b in zip(folds, kfold(23, 5, seed=3)))


@pytest.mark.parametrize("n,k", [(3, 5), (10, 1)])
def test_kfold_rejects(n, k):
    with pytest.raises(ModelError):
        kfold(n, k, 0)


def test_cross_validate_by_hand():
    X, y = _xy()
    expect = []
    for held in kfold(len(y), 5, 0):
        train = np.setdiff1d(np.arange(len(y)), held)
        Xt, yt = X[train], y[train]
        A = np.column_stack([Xt, np.ones(len(yt))])
        coef = np.linalg.lstsq(A, yt, rcond=None)[0]
        pred = np.column_stack([X[held], np.ones(len(held))]) @ coef
        expect.append(np.mean(np.abs(pred - y[held])))
    assert cross_validate(LR, X, y) == pytest.approx(np.mean(expect))


def test_out_of_fold_never_sees_row():
    X, y = _xy()
    # a 3-NN fitted on a row would include its own target; out-of-fold must not
    oof = out_of_fold(KNN, X, y)
    insample = fit_pipeline(KNN, X, y).predict(X)
    assert not np.allclose(oof, insample)


def test_search_picks_minimum():
    X, y = _xy()
    space = SearchSpace.of([LR, KNN])
    result = search(space, X, y, budget=2, seed=0)
    scores = {s.label(): v for s, v in result.trials}
    assert result.score == min(scores.values())
    assert result.score == pytest.approx(cross_validate(result.best, X, y))


def test_sample_without_replacement_and_seeded():
    space = SearchSpace.default(6, seed=0)
    a = space.sample(30, seed=5)
    assert len(set(a)) == 30
    assert a == space.sample(30, seed=5)
    assert len(space.sample(10_000, seed=0)) == len(space.candidates)


def test_polynomial_width_cap():
    wide = SearchSpace.default(64, max_poly_width=512)
    kinds = {c[0].transform.label() for c in wide.candidates}
    assert polynomial_width(64, 2) > 512
    assert not any("degree=2" in k for k in kinds)
    narrow = SearchSpace.default(6)
    assert any("degree=2" in c[0].transform.label() for c in narrow.candidates)


def test_search_budget_validation():
    with pytest.raises(ModelError):
        SearchSpace.of([LR]).sample(0, 0)


def test_stacked_predictions_nonnegative(small_model):
    model, X, y, _ = small_model
    pred = model.predict(X)
    assert pred.shape == y.shape and np.all(pred >= 0)
    assert model.predict_parts(X).shape == (len(y), 3)


def test_model_roundtrip(small_model, tmp_path):
    model, X, _, _ = small_model
    path = tmp_path / "m.json"
    model.save(path)
    again = StackedModel.load(path)
    assert np.array_equal(model.predict(X), again.predict(X))
    assert again.dumps() == model.dumps()


def test_training_deterministic(small_model, ext_schema, ext_config):
    model, X, y, _ = small_model
    prov = {"schema_hash": ext_schema.fingerprint(), "config_hash": ext_config.fingerprint()}
    again = train_stacked(X, y, search_budget=3, seed=0, field_space=model.field_space,
                          graph_params=model.graph_params, provenance=prov)
    assert again.dumps() == model.dumps()


def test_estimate_single_query(small_model, ext_schema, ext_config):
    model, X, _, recs = small_model
    value = estimate(model, recs[0].query_text, ext_schema, ext_config)
    assert value == pytest.approx(model.predict({k: v[:1] for k, v in X.items()})[0])


def test_provenance_mismatch(small_model, ext_schema):
    model = small_model[0]
    with pytest.raises(ModelError) as e:
        model.check_compatible(ext_schema, CostConfig.uniform())
    assert e.value.code == "model.provenance_mismatch"


def test_load_rejects_garbage(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"format": "other"}')
    with pytest.raises(ModelError):
        StackedModel.load(p)
    p.write_text("{not json")
    with pytest.raises(ModelError):
        StackedModel.load(p)


def test_length_mismatch_rejected(small_model):
    _, X, y, _ = small_model
    with pytest.raises(ModelError):
        train_stacked(X, y[:-1], search_budget=1)
