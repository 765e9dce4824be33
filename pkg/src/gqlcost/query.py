"""Query documents: parsing, printing, and validation against a schema."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import UnsupportedConstructError, ValidationError
from .lexer import TokenStream
from .schema import FieldDef, Schema, TypeRef


@dataclass(frozen=True)
class EnumValue:
    name: str

    def __str__(self) -> str:
        return self.name


Literal = Union[int, str, bool, EnumValue]


@dataclass(frozen=True)
class FieldNode:
    name: str
    args: tuple[tuple[str, Literal], ...] = ()
    selection: SelectionSet | None = None

    def arg(self, name: str, default=None):
        for k, v in self.args:
            if k == name:
                return v
        return default


@dataclass(frozen=True)
class SelectionSet:
    fields: tuple[FieldNode, ...]


@dataclass(frozen=True)
class QueryDocument:
    root: SelectionSet
    source_text: str = field(default="", compare=False, repr=False)
    name: str | None = None

    def iter_fields(self) -> Iterator[FieldNode]:
        stack = list(reversed(self.root.fields))
        while stack:
            node = stack.pop()
            yield node
            if node.selection is not None:
                stack.extend(reversed(node.selection.fields))

    def count_fields(self) -> int:
        return sum(1 for _ in self.iter_fields())

    def count_selection_sets(self) -> int:
        return 1 + sum(1 for f in self.iter_fields() if f.selection is not None)


_REJECTED_KEYWORDS = {
    "mutation": "mutations",
    "subscription": "subscriptions",
    "fragment": "fragments",
}


def _unsupported(what: str, tok) -> UnsupportedConstructError:
    return UnsupportedConstructError(
        f"{what} are not supported (line {tok.line}, column {tok.column})"
    )


def _parse_literal(ts: TokenStream) -> Literal:
    tok = ts.peek()
    if tok.kind == "int":
        ts.next()
        return int(tok.value)
    if tok.kind == "string":
        ts.next()
        return tok.value
    if tok.kind == "name":
        ts.next()
        if tok.value == "true":
            return True
        if tok.value == "false":
            return False
        if tok.value == "null":
            raise _unsupported("null argument literals", tok)
        return EnumValue(tok.value)
    if tok.kind == "float":
        raise _unsupported("float argument literals", tok)
    if tok.value == "$":
        raise _unsupported("variables", tok)
    if tok.value in ("[", "{"):
        raise _unsupported("list and object argument literals", tok)
    raise ts.error("expected an argument value")


def _parse_selection_set(ts: TokenStream) -> SelectionSet:
    open_tok = ts.expect("{")
    fields = []
    while not ts.at("}"):
        tok = ts.peek()
        if tok.kind == "spread":
            raise _unsupported("fragments", tok)
        name = ts.expect_name().value
        if ts.at(":"):
            raise _unsupported("aliases", tok)
        args = []
        if ts.at("("):
            ts.next()
            seen = set()
            while not ts.at(")"):
                arg_tok = ts.expect_name()
                if arg_tok.value in seen:
                    raise ts.error(f"duplicate argument {arg_tok.value!r}", arg_tok)
                seen.add(arg_tok.value)
                ts.expect(":")
                args.append((arg_tok.value, _parse_literal(ts)))
            ts.expect(")")
        if ts.at("@"):
            raise _unsupported("directives", ts.peek())
        selection = _parse_selection_set(ts) if ts.at("{") else None
        fields.append(FieldNode(name, tuple(args), selection))
    ts.next()
    if not fields:
        raise ts.error("empty selection set", open_tok)
    return SelectionSet(tuple(fields))


def parse_query(text: str) -> QueryDocument:
    """Parse a single (possibly named) query operation."""
    ts = TokenStream(text)
    name = None
    tok = ts.peek()
    if tok.kind == "name":
        if tok.value in _REJECTED_KEYWORDS:
            raise _unsupported(_REJECTED_KEYWORDS[tok.value], tok)
        ts.expect_name("query")
        if ts.at_name():
            name = ts.next().value
        if ts.at("("):
            raise _unsupported("variables", ts.peek())
        if ts.at("@"):
            raise _unsupported("directives", ts.peek())
    root = _parse_selection_set(ts)
    trailing = ts.peek()
    if trailing.kind != "eof":
        if trailing.kind == "name" and trailing.value in _REJECTED_KEYWORDS:
            raise _unsupported(_REJECTED_KEYWORDS[trailing.value], trailing)
        raise ts.error("expected end of document (one operation per document)")
    return QueryDocument(root, text, name)


def _format_literal(value: Literal) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    return str(value)


def print_query(doc: QueryDocument, indent: str = "  ") -> str:
    lines = ["query " + doc.name + " {" if doc.name else "query {"]

    def emit(sel: SelectionSet, depth: int) -> None:
        for f in sel.fields:
            head = f.name
            if f.args:
                head += "(" + ", ".join(f"{k}: {_format_literal(v)}" for k, v in f.args) + ")"
            if f.selection is None:
                lines.append(indent * depth + head)
            else:
                lines.append(indent * depth + head + " {")
                emit(f.selection, depth + 1)
                lines.append(indent * depth + "}")

    emit(doc.root, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"


@dataclass(eq=False)
class TypedField:
    """A query field resolved against the schema.

    ``enclosing`` points at the field whose selection set contains this one
    (``None`` at the top level).
    """

    node: FieldNode
    parent_type: str
    definition: FieldDef
    children: tuple[TypedField, ...] = ()
    enclosing: TypedField | None = field(default=None, repr=False)

    @property
    def name(self) -> str:
        return self.node.name

    @property
    def returns(self) -> TypeRef:
        return self.definition.returns

    @property
    def key(self) -> str:
        return f"{self.parent_type}.{self.node.name}"

    def walk(self) -> Iterator[TypedField]:
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass(eq=False)
class TypedQuery:
    document: QueryDocument
    root_type: str
    fields: tuple[TypedField, ...]

    def walk(self) -> Iterator[TypedField]:
        for f in self.fields:
            yield from f.walk()

    def annotations(self) -> list[tuple[str, str, str]]:
        return [(f.parent_type, f.name, str(f.returns)) for f in self.walk()]


def _check_arg(schema: Schema, owner: str, arg_name: str, ref: TypeRef, value: Literal) -> None:
    where = f"argument {owner}({arg_name})"
    if ref.is_list:
        raise ValidationError(f"{where} expects a list, literal lists are not supported",
                              code="validate.arg_type")
    kind = schema.kind_of(ref.base)
    ok = True
    if ref.base == "Int":
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif ref.base == "Float":
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif ref.base == "String":
        ok = isinstance(value, str)
    elif ref.base == "ID":
        ok = isinstance(value, (str, int)) and not isinstance(value, bool)
    elif ref.base == "Boolean":
        ok = isinstance(value, bool)
    elif kind == "enum":
        ok = isinstance(value, EnumValue) and value.name in schema.types[ref.base].enum_values
    if not ok:
        raise ValidationError(
            f"{where} expects {ref}, got {_format_literal(value)}", code="validate.arg_type"
        )


def _validate_selection(schema: Schema, type_name: str, sel: SelectionSet,
                        enclosing: TypedField | None) -> tuple[TypedField, ...]:
    tdef = schema.types[type_name]
    out = []
    for node in sel.fields:
        fdef = tdef.field(node.name)
        if fdef is None:
            raise ValidationError(f"unknown field {node.name!r} on type {type_name}",
                                  code="validate.unknown_field")
        owner = f"{type_name}.{node.name}"
        for arg_name, value in node.args:
            adef = fdef.arg(arg_name)
            if adef is None:
                raise ValidationError(f"unknown argument {arg_name!r} on {owner}",
                                      code="validate.unknown_argument")
            _check_arg(schema, owner, arg_name, adef.type, value)
        given = {k for k, _ in node.args}
        for adef in fdef.args:
            if adef.required and adef.name not in given:
                raise ValidationError(f"missing required argument {adef.name!r} on {owner}",
                                      code="validate.missing_argument")
        ret = fdef.returns
        if ret.list_depth > 1:
            raise ValidationError(f"nested list type {ret} on {owner} is not supported",
                                  code="validate.unsupported")
        tf = TypedField(node, type_name, fdef, (), enclosing)
        if schema.is_composite(ret.base):
            if node.selection is None:
                raise ValidationError(f"field {owner} of type {ret} needs a selection set",
                                      code="validate.missing_selection")
            tf.children = _validate_selection(schema, ret.base, node.selection, tf)
        elif node.selection is not None:
            raise ValidationError(f"field {owner} of type {ret} cannot have a selection set",
                                  code="validate.selection_on_leaf")
        out.append(tf)
    return tuple(out)


def validate(doc: QueryDocument, schema: Schema) -> TypedQuery:
    """Resolve every field of ``doc`` against ``schema``."""
    fields = _validate_selection(schema, schema.query_root, doc.root, None)
    return TypedQuery(doc, schema.query_root, fields)


def load_typed_query(text: str, schema: Schema) -> TypedQuery:
    return validate(parse_query(text), schema)
