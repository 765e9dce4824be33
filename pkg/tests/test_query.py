import pytest
from hypothesis import given, settings, strategies as st

from gqlcost.dataset import GeneratorConfig, generate_synthetic
from gqlcost.errors import GraphQLSyntaxError, UnsupportedConstructError, ValidationError
from gqlcost.query import EnumValue, load_typed_query, parse_query, print_query, validate


def test_example_counts(example_query):
    doc = parse_query(example_query)
    assert doc.count_fields() == 9
    assert doc.count_selection_sets() == 7


def test_args_and_literals():
    doc = parse_query('{ a(x: 1, y: "s", z: true, e: OPEN) { b } }')
    node = doc.root.fields[0]
    assert node.arg("x") == 1 and node.arg("y") == "s" and node.arg("z") is True
    assert node.arg("e") == EnumValue("OPEN")
    assert node.arg("missing", 7) == 7


def test_named_operation():
    assert parse_query("query Q { a }").name == "Q"


@pytest.mark.parametrize("text", [
    "mutation { a }",
    "subscription { a }",
    "{ ...F } fragment F on Query { a }",
    "{ ... on Query { a } }",
    "query ($n: Int) { a(first: $n) }",
    "{ x: a }",
    "{ a @include(if: true) }",
    "{ a(x: 1.5) }",
    "{ a(x: null) }",
    "{ a(x: [1]) }",
    "{ a(x: {k: 1}) }",
])
def test_rejected_constructs(text):
    with pytest.raises(UnsupportedConstructError):
        parse_query(text)


def test_single_operation_only():
    with pytest.raises((UnsupportedConstructError, GraphQLSyntaxError)):
        parse_query("{ a } { b }")


@pytest.mark.parametrize("text", ["{ a ", "{ }", "{ a(x: ) }", "query { a } }"])
def test_syntax_errors(text):
    with pytest.raises(GraphQLSyntaxError):
        parse_query(text)


def test_typed_annotations(small_schema, example_query):
    tq = load_typed_query(example_query, small_schema)
    keys = [tf.key for tf in tq.walk()]
    assert keys[0] == "Query.licenses"
    assert "Repository.issues" in keys and "IssueConnection.nodes" in keys
    nodes = [tf for tf in tq.walk() if tf.key == "IssueConnection.nodes"][0]
    assert nodes.enclosing.key == "Repository.issues"


@pytest.mark.parametrize("text,code", [
    ("{ nope }", "validate.unknown_field"),
    ('{ repository(owner: "a") { name } }', "validate.missing_argument"),
    ('{ repository(owner: "a", name: "b", x: 1) { name } }', "validate.unknown_argument"),
    ('{ repository(owner: 1, name: "b") { name } }', "validate.arg_type"),
    ("{ licenses }", "validate.missing_selection"),
    ("{ licenses { name { x } } }", "validate.selection_on_leaf"),
])
def test_validation_errors(small_schema, text, code):
    with pytest.raises(ValidationError) as e:
        load_typed_query(text, small_schema)
    assert e.value.code == code


def test_print_is_canonical(example_query):
    once = print_query(parse_query(example_query))
    assert print_query(parse_query(once)) == once


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_print_parse_roundtrip(ext_schema, ext_config, seed):
    rec = generate_synthetic(ext_schema, ext_config, GeneratorConfig(max_depth=5, seed=seed), 1)[0]
    doc = parse_query(rec.query_text)
    assert parse_query(print_query(doc)) == doc
    validate(doc, ext_schema)
