import numpy as np
import pytest

from gqlcost.errors import FeatureSpaceError
from gqlcost.features import (FeatureMatrix, Featurizer, FieldFeatureSpace, GraphFeatureParams,
                              SUMMARY_NAMES, field_features, graph_features, summary_features,
                              wl_labels)
from gqlcost.query import load_typed_query


@pytest.fixture
def example_tq(small_schema, example_query):
    return load_typed_query(example_query, small_schema)


def test_summary_example(example_tq, small_schema, github_config):
    s = summary_features(example_tq, small_schema, github_config)
    assert tuple(s.as_array()) == (118, 17, 2, 3, 3, 115)
    assert SUMMARY_NAMES[0] == "static_bound"


def test_summary_single_field(small_schema, github_config):
    tq = load_typed_query("{ viewer { id } }", small_schema)
    s = summary_features(tq, small_schema, github_config)
    # operation + 2 fields + 2 selection sets
    assert (s.query_size, s.width, s.nesting, s.lists, s.sum_of_limits) == (5, 1, 1, 0, 0)


def test_field_counts(example_tq, small_schema):
    space = FieldFeatureSpace.from_schema(small_schema)
    v = field_features(example_tq, space)
    idx = space.index
    assert v.sum() == 9
    assert v[idx["Query.licenses"]] == 1
    assert v[idx["IssueConnection.nodes"]] == 1
    assert v[idx["Query.viewer"]] == 0


def test_field_space_mismatch(example_tq):
    with pytest.raises(FeatureSpaceError):
        field_features(example_tq, FieldFeatureSpace(("Query.viewer",)))


def test_wl_label_count(example_tq):
    labels = wl_labels(example_tq, 3)
    assert len(labels) == 10 * 4
    assert labels[0] == "Query."


def test_wl_distinguishes_structure(small_schema):
    a = load_typed_query('{ repository(owner: "a", name: "b") { issues(first: 1) { nodes { id } } } }',
                         small_schema)
    b = load_typed_query('{ repository(owner: "a", name: "b") { languages(first: 1) { nodes { name } } } }',
                         small_schema)
    assert wl_labels(a, 2)[-1] != wl_labels(b, 2)[-1]


def test_graph_features_normalised(example_tq):
    v = graph_features(example_tq, GraphFeatureParams(dimension=64, wl_iterations=3))
    assert v.shape == (64,)
    assert v.sum() == pytest.approx(40 / 17)


def test_graph_hash_seed_changes_buckets(example_tq):
    a = graph_features(example_tq, GraphFeatureParams(hash_seed=0))
    b = graph_features(example_tq, GraphFeatureParams(hash_seed=1))
    assert not np.array_equal(a, b)
    assert a.sum() == pytest.approx(b.sum())


def test_graph_features_pinned(example_tq):
    # regression guard: a change to labelling or hashing moves these buckets
    v = graph_features(example_tq) * 17
    nz = np.nonzero(v)[0].tolist()
    assert nz == [1, 2, 3, 4, 6, 13, 17, 19, 24, 29, 31, 33, 36, 37, 39, 41, 42, 43, 44, 45,
                  47, 48, 49, 51, 53, 54, 56, 57, 58]
    assert np.round(v[nz]).astype(int).tolist() == [2, 1, 1, 2, 2, 1, 2, 1, 1, 3, 1, 1, 1, 1, 2,
                                                   1, 1, 1, 2, 2, 2, 1, 1, 1, 1, 1, 1, 2, 1]


def test_graph_params_validation():
    with pytest.raises(ValueError):
        GraphFeatureParams(dimension=0)


def test_featurizer_and_csv(example_tq, small_schema, github_config):
    feat = Featurizer.build(small_schema, github_config)
    mats = feat.transform([example_tq, example_tq])
    assert set(mats) == {"field", "graph", "summary"}
    assert mats["summary"].values.shape == (2, 6)
    assert mats["field"].columns[0].startswith("f:")
    assert mats["graph"].columns[0] == "g:bucket_0"
    for name, m in mats.items():
        back = FeatureMatrix.from_csv(m.to_csv(), name)
        assert back.columns == m.columns
        assert np.array_equal(back.values, m.values)
