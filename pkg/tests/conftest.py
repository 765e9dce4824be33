import json
from importlib import resources

import numpy as np
import pytest

from gqlcost.cost import CostConfig
from gqlcost.dataset import GeneratorConfig, generate_synthetic
from gqlcost.features import Featurizer
from gqlcost.pipeline import train_stacked
from gqlcost.query import load_typed_query
from gqlcost.schema import parse_schema

DATA = resources.files("gqlcost") / "data"


def data_text(name: str) -> str:
    return (DATA / name).read_text(encoding="utf-8")


def data_path(name: str) -> str:
    return str(DATA / name)


@pytest.fixture(scope="session")
def small_schema():
    return parse_schema(data_text("github_small.graphql"))


@pytest.fixture(scope="session")
def github_config():
    return CostConfig.from_dict(json.loads(data_text("github_weights.json")))


@pytest.fixture(scope="session")
def example_query():
    return data_text("example_query.graphql")


@pytest.fixture(scope="session")
def example_response():
    return json.loads(data_text("example_response.json"))


@pytest.fixture(scope="session")
def ext_schema():
    return parse_schema(data_text("github_extended.graphql"))


@pytest.fixture(scope="session")
def ext_config():
    return CostConfig.from_dict(json.loads(data_text("github_extended_weights.json")))


@pytest.fixture(scope="session")
def small_model(ext_schema, ext_config):
    recs = generate_synthetic(ext_schema, ext_config, GeneratorConfig(max_depth=5, seed=3), 150)
    feat = Featurizer.build(ext_schema, ext_config)
    mats = feat.transform([load_typed_query(r.query_text, ext_schema) for r in recs])
    y = np.array([float(r.label) for r in recs])
    prov = {"schema_hash": ext_schema.fingerprint(), "config_hash": ext_config.fingerprint()}
    X = {k: m.values for k, m in mats.items()}
    model = train_stacked(X, y, search_budget=3, seed=0, field_space=feat.space,
                          graph_params=feat.graph_params, provenance=prov)
    return model, X, y, recs
