import pytest

from gqlcost.errors import GraphQLSyntaxError, SchemaError, UnsupportedConstructError
from gqlcost.lexer import tokenize
from gqlcost.schema import parse_schema


def test_fig1_types(small_schema):
    assert len(small_schema.types) == 8
    assert small_schema.query_root == "Query"
    assert len(small_schema.types["Query"].fields) == 3


def test_type_refs(small_schema):
    lic = small_schema.field_def("Query", "licenses").returns
    assert lic.is_list and lic.list_depth == 1 and lic.base == "License"
    assert str(lic).startswith("[License")


def test_required_args(small_schema):
    repo = small_schema.field_def("Query", "repository")
    assert {a.name for a in repo.args if a.required} == {"owner", "name"}


def test_descriptions_and_defaults():
    s = parse_schema('''
        """Root"""
        type Query {
          "how many"
          items(first: Int = 10, tag: String): [Item!]!
        }
        type Item { id: ID! kind: Kind }
        enum Kind { A B }
    ''')
    f = s.field_def("Query", "items")
    assert f.arg("first") is not None and not f.arg("first").required
    assert s.types["Kind"].enum_values == ("A", "B")
    assert s.kind_of("ID") == "scalar"


def test_schema_block_renames_root():
    s = parse_schema("schema { query: Root } type Root { x: Int }")
    assert s.query_root == "Root"


@pytest.mark.parametrize("sdl", [
    "interface Node { id: ID! } type Query { a: Int }",
    "union U = A | B type Query { a: Int }",
    "input I { a: Int } type Query { a: Int }",
    "type Query { a: Int @deprecated }",
    "extend type Query { b: Int }",
])
def test_unsupported_constructs(sdl):
    with pytest.raises(UnsupportedConstructError):
        parse_schema(sdl)


def test_duplicate_type():
    with pytest.raises(SchemaError) as e:
        parse_schema("type Query { a: Int } type Query { b: Int }")
    assert e.value.code == "schema.duplicate"


def test_unknown_type():
    with pytest.raises(SchemaError) as e:
        parse_schema("type Query { a: Missing }")
    assert e.value.code == "schema.unknown_type"


def test_syntax_error_position():
    with pytest.raises(GraphQLSyntaxError) as e:
        parse_schema("type Query {\n  a: Int\n  b Int\n}")
    assert e.value.line == 3


def test_lexer_strings_and_commas():
    toks = [t.value for t in tokenize('a, "x\\ny" """block""" 1.5 -3 ...')][:6]
    assert toks[0] == "a"
    assert "x\ny" in toks
    assert "block" in toks


def test_fingerprint_tracks_source(small_schema):
    other = parse_schema("type Query { a: Int }")
    assert small_schema.fingerprint() != other.fingerprint()
    assert len(small_schema.fingerprint()) == 64
