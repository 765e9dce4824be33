import json
from fractions import Fraction

import pytest

from gqlcost.dataset import (DatasetRecord, GeneratorConfig, dump_jsonl, generate_synthetic,
                             label_records, load_jsonl, save_jsonl, split)
from gqlcost.errors import DatasetError
from gqlcost.query import parse_query


def test_jsonl_roundtrip(tmp_path):
    recs = [DatasetRecord("{ a }", {"a": 1}, Fraction(3), Fraction(7, 2))]
    p = tmp_path / "c.jsonl"
    save_jsonl(recs, p)
    assert load_jsonl(p) == recs
    assert json.loads(p.read_text())["staticBound"] == "7/2"


@pytest.mark.parametrize("body,where", [
    ('{"query": "{ a }", "response": {}}\n{oops\n', "line 2"),
    ('[1]\n', "line 1"),
    ('{"query": "{ a }"}\n', "line 1"),
    ('{"query": 5, "response": {}}\n', "line 1"),
])
def test_jsonl_errors_name_line(tmp_path, body, where):
    p = tmp_path / "bad.jsonl"
    p.write_text(body)
    with pytest.raises(DatasetError, match=where):
        load_jsonl(p)


def test_label_reports_failures(small_schema, github_config, example_query, example_response):
    recs = [DatasetRecord(example_query, example_response),
            DatasetRecord("{ nope }", {}),
            DatasetRecord("{ viewer { id } }", {"viewer": []})]
    labeled, errors = label_records(recs, small_schema, github_config)
    assert [r.label for r in labeled] == [23] and labeled[0].static_bound == 118
    assert [(e.index, e.code) for e in errors] == [(1, "validate.unknown_field"),
                                                  (2, "cost.shape_mismatch")]


def test_generator_deterministic_and_sound(ext_schema, ext_config):
    gen = GeneratorConfig(max_depth=6, seed=11)
    a = generate_synthetic(ext_schema, ext_config, gen, 40)
    assert dump_jsonl(a) == dump_jsonl(generate_synthetic(ext_schema, ext_config, gen, 40))
    assert all(0 <= r.label <= r.static_bound for r in a)
    # record i only depends on (seed, i)
    assert generate_synthetic(ext_schema, ext_config, gen, 5) == a[:5]


def test_generator_respects_depth(ext_schema, ext_config):
    gen = GeneratorConfig(max_depth=3, seed=2)
    for r in generate_synthetic(ext_schema, ext_config, gen, 30):
        depth = 0
        stack = [(f, 1) for f in parse_query(r.query_text).root.fields]
        while stack:
            node, d = stack.pop()
            depth = max(depth, d)
            if node.selection:
                stack.extend((c, d + 1) for c in node.selection.fields)
        assert depth <= 3


def test_generator_labels_match_relabel(ext_schema, ext_config):
    recs = generate_synthetic(ext_schema, ext_config, GeneratorConfig(seed=4), 20)
    stripped = [DatasetRecord(r.query_text, r.response) for r in recs]
    labeled, errors = label_records(stripped, ext_schema, ext_config)
    assert not errors and labeled == recs


def test_generator_unsatisfiable(small_schema, github_config):
    with pytest.raises(DatasetError):
        generate_synthetic(small_schema, github_config, GeneratorConfig(max_depth=1), 1)


@pytest.mark.parametrize("kw", [{"max_depth": 0}, {"list_limit_range": (5, 2)},
                                {"list_fill": "random"}])
def test_generator_config_validation(kw):
    with pytest.raises(ValueError):
        GeneratorConfig(**kw)


def test_split():
    items = list(range(100))
    train, test = split(items, 0.2, seed=1)
    assert len(test) == 20 and sorted(train + test) == items
    assert split(items, 0.2, seed=1) == (train, test)
    with pytest.raises(DatasetError):
        split(items, 1.0)
