"""GraphQL SDL subset: object types, enums, custom scalars and a schema block."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .errors import SchemaError, UnsupportedConstructError
from .lexer import TokenStream

BUILTIN_SCALARS = frozenset({"Int", "Float", "String", "Boolean", "ID"})

_UNSUPPORTED_DEFS = {"interface", "union", "input", "extend", "directive"}


@dataclass(frozen=True)
class TypeRef:
    """A possibly wrapped named type.

    ``non_null_flags`` runs from the outermost wrapper inwards, so ``[Int!]!``
    is ``TypeRef("Int", 1, (True, True))``.
    """

    base: str
    list_depth: int = 0
    non_null_flags: tuple[bool, ...] = (False,)

    def __post_init__(self):
        if self.list_depth < 0 or len(self.non_null_flags) != self.list_depth + 1:
            raise ValueError("non_null_flags must have list_depth + 1 entries")

    @property
    def is_list(self) -> bool:
        return self.list_depth > 0

    @property
    def non_null(self) -> bool:
        return self.non_null_flags[0]

    def __str__(self) -> str:
        out = self.base + ("!" if self.non_null_flags[-1] else "")
        for flag in reversed(self.non_null_flags[:-1]):
            out = f"[{out}]" + ("!" if flag else "")
        return out


@dataclass(frozen=True)
class ArgDef:
    name: str
    type: TypeRef
    required: bool


@dataclass(frozen=True)
class FieldDef:
    name: str
    args: tuple[ArgDef, ...]
    returns: TypeRef

    def arg(self, name: str) -> ArgDef | None:
        for a in self.args:
            if a.name == name:
                return a
        return None


@dataclass(frozen=True)
class TypeDef:
    name: str
    kind: str  # "object" | "scalar" | "enum"
    fields: tuple[FieldDef, ...] = ()
    enum_values: tuple[str, ...] = ()

    def field(self, name: str) -> FieldDef | None:
        for f in self.fields:
            if f.name == name:
                return f
        return None


@dataclass(frozen=True)
class Schema:
    types: dict[str, TypeDef]
    query_root: str
    source_text: str = field(default="", compare=False, repr=False)

    def kind_of(self, name: str) -> str:
        if name in BUILTIN_SCALARS:
            return "scalar"
        return self.types[name].kind

    def is_composite(self, name: str) -> bool:
        return self.kind_of(name) == "object"

    def object_types(self) -> list[TypeDef]:
        return [t for t in self.types.values() if t.kind == "object"]

    def field_def(self, type_name: str, field_name: str) -> FieldDef | None:
        t = self.types.get(type_name)
        return None if t is None else t.field(field_name)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()


def _parse_type_ref(ts: TokenStream) -> TypeRef:
    # flags are collected innermost first
    flags: list[bool] = []

    def inner() -> tuple[str, int]:
        if ts.at("["):
            ts.next()
            base, depth = inner()
            ts.expect("]")
            depth += 1
        else:
            base, depth = ts.expect_name().value, 0
        flags.append(ts.at("!"))
        if flags[-1]:
            ts.next()
        return base, depth

    base, depth = inner()
    return TypeRef(base, depth, tuple(reversed(flags)))


def _skip_value(ts: TokenStream) -> None:
    tok = ts.next()
    if tok.kind == "punct" and tok.value in "[{":
        close = "]" if tok.value == "[" else "}"
        while not ts.at(close):
            if ts.peek().kind == "eof":
                raise ts.error(f"expected {close!r}")
            if ts.at_name() and ts.peek(1).value == ":" and close == "}":
                ts.next()
                ts.next()
            _skip_value(ts)
        ts.next()
    elif tok.kind not in ("int", "float", "string", "name"):
        raise ts.error("expected a value", tok)


def _skip_description(ts: TokenStream) -> None:
    while ts.peek().kind == "string":
        ts.next()


def _reject_directives(ts: TokenStream) -> None:
    if ts.at("@"):
        tok = ts.peek()
        raise UnsupportedConstructError(
            f"directives are not supported (line {tok.line}, column {tok.column})"
        )


def _parse_fields(ts: TokenStream, type_name: str) -> tuple[FieldDef, ...]:
    ts.expect("{")
    fields: list[FieldDef] = []
    seen = set()
    while not ts.at("}"):
        _skip_description(ts)
        name_tok = ts.expect_name()
        name = name_tok.value
        if name in seen:
            raise SchemaError(
                f"duplicate field {type_name}.{name} (line {name_tok.line})",
                code="schema.duplicate",
            )
        seen.add(name)
        args: list[ArgDef] = []
        if ts.at("("):
            ts.next()
            arg_names = set()
            while not ts.at(")"):
                _skip_description(ts)
                arg_name = ts.expect_name().value
                if arg_name in arg_names:
                    raise SchemaError(
                        f"duplicate argument {type_name}.{name}({arg_name})",
                        code="schema.duplicate",
                    )
                arg_names.add(arg_name)
                ts.expect(":")
                ref = _parse_type_ref(ts)
                has_default = False
                if ts.at("="):
                    ts.next()
                    _skip_value(ts)
                    has_default = True
                _reject_directives(ts)
                args.append(ArgDef(arg_name, ref, ref.non_null and not has_default))
            ts.expect(")")
        ts.expect(":")
        ref = _parse_type_ref(ts)
        _reject_directives(ts)
        fields.append(FieldDef(name, tuple(args), ref))
    ts.expect("}")
    if not fields:
        raise SchemaError(f"type {type_name} declares no fields")
    return tuple(fields)


def parse_schema(text: str) -> Schema:
    """Parse SDL text into a :class:`Schema` and check its references."""
    ts = TokenStream(text)
    types: dict[str, TypeDef] = {}
    query_root = None

    def add(td: TypeDef, line: int) -> None:
        if td.name in types or td.name in BUILTIN_SCALARS:
            raise SchemaError(
                f"duplicate definition of type {td.name} (line {line})",
                code="schema.duplicate",
            )
        types[td.name] = td

    while ts.peek().kind != "eof":
        _skip_description(ts)
        tok = ts.expect_name()
        kw = tok.value
        if kw == "schema":
            if query_root is not None:
                raise SchemaError("duplicate schema definition", code="schema.duplicate")
            ts.expect("{")
            while not ts.at("}"):
                op = ts.expect_name()
                ts.expect(":")
                target = ts.expect_name().value
                if op.value != "query":
                    raise UnsupportedConstructError(
                        f"{op.value} operations are not supported (line {op.line})"
                    )
                query_root = target
            ts.next()
            if query_root is None:
                raise SchemaError("schema block does not name a query root")
        elif kw == "type":
            name = ts.expect_name().value
            if ts.at_name("implements"):
                raise UnsupportedConstructError(
                    f"interfaces are not supported (type {name}, line {tok.line})"
                )
            _reject_directives(ts)
            add(TypeDef(name, "object", _parse_fields(ts, name)), tok.line)
        elif kw == "enum":
            name = ts.expect_name().value
            _reject_directives(ts)
            ts.expect("{")
            values: list[str] = []
            while not ts.at("}"):
                _skip_description(ts)
                v = ts.expect_name().value
                if v in values:
                    raise SchemaError(f"duplicate enum value {name}.{v}", code="schema.duplicate")
                values.append(v)
                _reject_directives(ts)
            ts.next()
            if not values:
                raise SchemaError(f"enum {name} declares no values")
            add(TypeDef(name, "enum", enum_values=tuple(values)), tok.line)
        elif kw == "scalar":
            name = ts.expect_name().value
            _reject_directives(ts)
            add(TypeDef(name, "scalar"), tok.line)
        elif kw in _UNSUPPORTED_DEFS:
            raise UnsupportedConstructError(
                f"'{kw}' definitions are not supported (line {tok.line}, column {tok.column})"
            )
        else:
            raise ts.error("expected a type definition", tok)

    if query_root is None:
        query_root = "Query"
    schema = Schema(types, query_root, text)
    _check_references(schema)
    return schema


def _check_references(schema: Schema) -> None:
    root = schema.types.get(schema.query_root)
    if root is None or root.kind != "object":
        raise SchemaError(
            f"query root {schema.query_root!r} is not a declared object type",
            code="schema.unknown_type",
        )
    known = set(schema.types) | BUILTIN_SCALARS
    for t in schema.object_types():
        for f in t.fields:
            if f.returns.base not in known:
                raise SchemaError(
                    f"unknown type {f.returns.base!r} in {t.name}.{f.name}",
                    code="schema.unknown_type",
                )
            for a in f.args:
                if a.type.base not in known:
                    raise SchemaError(
                        f"unknown type {a.type.base!r} for argument {t.name}.{f.name}({a.name})",
                        code="schema.unknown_type",
                    )
                if schema.kind_of(a.type.base) == "object":
                    raise UnsupportedConstructError(
                        f"object-typed argument {t.name}.{f.name}({a.name}) is not supported"
                    )
