"""Type complexity of responses (ground truth) and of queries (static bound).

All arithmetic is exact: weights are :class:`fractions.Fraction` values.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError, ShapeMismatchError, UnboundedListError
from .query import TypedField, TypedQuery
from .schema import Schema

SCALAR_DEFAULT_KEY = "*scalarDefault"
OBJECT_DEFAULT_KEY = "*objectDefault"
DEFAULT_LIMIT_ARGS = ("first", "last", "limit")


def to_fraction(value) -> Fraction:
    if isinstance(value, bool):
        raise ConfigError(f"invalid weight {value!r}")
    if isinstance(value, float):
        value = str(value)
    try:
        out = Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(f"invalid weight {value!r}") from None
    if out < 0:
        raise ConfigError(f"negative weight {value!r}")
    return out


def _fraction_json(x: Fraction):
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class CostConfig:
    type_weights: dict[str, Fraction] = field(default_factory=dict)
    scalar_default: Fraction | None = None
    object_default: Fraction | None = None
    default_list_sizes: dict[str, int] = field(default_factory=dict)
    limit_arg_names: tuple[str, ...] = DEFAULT_LIMIT_ARGS

    @classmethod
    def uniform(cls, scalar=0, obj=1, default_list_sizes=None,
                limit_arg_names=DEFAULT_LIMIT_ARGS) -> CostConfig:
        """Scalars and enums weigh ``scalar``, every object type ``obj``."""
        return cls({}, to_fraction(scalar), to_fraction(obj),
                   dict(default_list_sizes or {}), tuple(limit_arg_names))

    @classmethod
    def from_dict(cls, data: dict) -> CostConfig:
        if not isinstance(data, dict):
            raise ConfigError("cost config must be a JSON object")
        unknown = set(data) - {"typeWeights", "defaultListSizes", "limitArgNames"}
        if unknown:
            raise ConfigError(f"unknown cost config keys: {sorted(unknown)}")
        raw = dict(data.get("typeWeights", {}))
        scalar_default = raw.pop(SCALAR_DEFAULT_KEY, None)
        object_default = raw.pop(OBJECT_DEFAULT_KEY, None)
        sizes = {}
        for key, n in data.get("defaultListSizes", {}).items():
            if isinstance(n, bool) or not isinstance(n, int) or n < 0:
                raise ConfigError(f"default list size for {key} must be a nonnegative integer")
            sizes[key] = n
        names = data.get("limitArgNames", list(DEFAULT_LIMIT_ARGS))
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise ConfigError("limitArgNames must be an array of strings")
        return cls(
            {k: to_fraction(v) for k, v in raw.items()},
            None if scalar_default is None else to_fraction(scalar_default),
            None if object_default is None else to_fraction(object_default),
            sizes,
            tuple(names),
        )

    @classmethod
    def load(cls, path) -> CostConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        weights = {k: _fraction_json(v) for k, v in sorted(self.type_weights.items())}
        if self.scalar_default is not None:
            weights[SCALAR_DEFAULT_KEY] = _fraction_json(self.scalar_default)
        if self.object_default is not None:
            weights[OBJECT_DEFAULT_KEY] = _fraction_json(self.object_default)
        return {
            "typeWeights": weights,
            "defaultListSizes": dict(sorted(self.default_list_sizes.items())),
            "limitArgNames": list(self.limit_arg_names),
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def weight(self, type_name: str, schema: Schema) -> Fraction:
        w = self.type_weights.get(type_name)
        if w is not None:
            return w
        w = self.object_default if schema.is_composite(type_name) else self.scalar_default
        if w is None:
            raise ConfigError(f"no weight configured for type {type_name}",
                              code="config.missing_weight")
        return w

    def check(self, schema: Schema) -> None:
        """Raise :class:`ConfigError` unless this config covers ``schema``."""
        names = set(schema.types)
        for t in schema.object_types():
            for f in t.fields:
                names.add(f.returns.base)
        for name in sorted(names):
            self.weight(name, schema)
        for key in self.default_list_sizes:
            type_name, _, field_name = key.partition(".")
            fdef = schema.field_def(type_name, field_name)
            if fdef is None or not fdef.returns.is_list:
                raise ConfigError(f"default list size key {key!r} is not a list field",
                                  code="config.bad_default")

    def with_weights(self, **changes) -> CostConfig:
        data = dict(self.__dict__)
        data.update(changes)
        return CostConfig(**data)


def _limit_from_args(tf: TypedField, names) -> int | None:
    for name in names:
        value = tf.node.arg(name)
        if value is None:
            continue
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"limit argument {tf.key}({name}) is not an integer")
        if value < 0:
            raise UnboundedListError(f"negative limit {value} on {tf.key}({name})",
                                     code="cost.negative_limit")
        return value
    return None


def resolve_list_limit(tf: TypedField, config: CostConfig) -> int:
    """Upper bound on the length of the list returned by ``tf``.

    Looks at the field's own limit arguments, then at those of the enclosing
    connection field (an object-returning field such as ``issues(first: 2)``
    whose ``nodes`` list it bounds), then at the configured default size.
    """
    if not tf.returns.is_list:
        raise ValueError(f"{tf.key} does not return a list")
    n = _limit_from_args(tf, config.limit_arg_names)
    if n is not None:
        return n
    parent = tf.enclosing
    if parent is not None and not parent.returns.is_list:
        n = _limit_from_args(parent, config.limit_arg_names)
        if n is not None:
            return n
    n = config.default_list_sizes.get(tf.key)
    if n is not None:
        return n
    raise UnboundedListError(
        f"list field {tf.key} has no limit argument ({', '.join(config.limit_arg_names)}) "
        f"and no configured default size"
    )


def _bound(tf: TypedField, schema: Schema, config: CostConfig) -> Fraction:
    w = config.weight(tf.returns.base, schema)
    inner = w + sum((_bound(c, schema, config) for c in tf.children), Fraction(0))
    if tf.returns.is_list:
        return resolve_list_limit(tf, config) * inner
    return inner


def static_bound(tq: TypedQuery, schema: Schema, config: CostConfig) -> Fraction:
    """Worst-case type complexity implied by the query alone."""
    return sum((_bound(f, schema, config) for f in tq.fields), Fraction(0))


def _index(fields) -> dict[str, list[TypedField]]:
    out: dict[str, list[TypedField]] = {}
    for f in fields:
        out.setdefault(f.name, []).append(f)
    return out


def _object_size(obj: dict, fields, schema, config, path) -> Fraction:
    index = _index(fields)
    total = Fraction(0)
    for key, value in obj.items():
        group = index.get(key)
        if group is None:
            raise ShapeMismatchError(f"response field {path}{key} is not in the query")
        total += _field_size(value, group, schema, config, f"{path}{key}")
    return total


def _field_size(value, group: list[TypedField], schema, config, path) -> Fraction:
    if value is None:
        return Fraction(0)
    ret = group[0].returns
    w = config.weight(ret.base, schema)
    composite = schema.is_composite(ret.base)
    children = [c for tf in group for c in tf.children]
    if ret.is_list:
        if not isinstance(value, list):
            raise ShapeMismatchError(f"{path}: expected a list for {ret}")
        total = Fraction(0)
        for i, elem in enumerate(value):
            if elem is None:
                continue
            if composite:
                if not isinstance(elem, dict):
                    raise ShapeMismatchError(f"{path}[{i}]: expected an object")
                total += w + _object_size(elem, children, schema, config, f"{path}[{i}].")
            else:
                if isinstance(elem, (dict, list)):
                    raise ShapeMismatchError(f"{path}[{i}]: expected a scalar")
                total += w
        return total
    if composite:
        if not isinstance(value, dict):
            raise ShapeMismatchError(f"{path}: expected an object for {ret}")
        return w + _object_size(value, children, schema, config, f"{path}.")
    if isinstance(value, (dict, list)):
        raise ShapeMismatchError(f"{path}: expected a scalar for {ret}")
    return w


def response_complexity(response, tq: TypedQuery, schema: Schema,
                        config: CostConfig) -> Fraction:
    """Type complexity of an actual response to ``tq``.

    Null values (and null list elements) contribute nothing. A top-level
    ``{"data": ...}`` envelope is unwrapped when the query has no ``data``
    field of its own.
    """
    if (isinstance(response, dict) and set(response) <= {"data", "errors"}
            and "data" in response and all(f.name != "data" for f in tq.fields)):
        response = response["data"]
    if not isinstance(response, dict):
        raise ShapeMismatchError("response root must be a JSON object")
    return _object_size(response, tq.fields, schema, config, "")
