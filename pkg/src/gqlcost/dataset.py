"""Query/response corpora: JSONL I/O, labelling, synthetic generation, splits."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cost import CostConfig, resolve_list_limit, response_complexity, static_bound
from .errors import DatasetError, GqlCostError
from .query import (EnumValue, FieldNode, QueryDocument, SelectionSet, TypedField,
                    load_typed_query, print_query, validate)
from .schema import FieldDef, Schema


@dataclass(frozen=True)
class DatasetRecord:
    query_text: str
    response: object
    label: Fraction | None = None
    static_bound: Fraction | None = None

    def to_json(self) -> dict:
        out = {"query": self.query_text, "response": self.response}
        if self.label is not None:
            out["label"] = _num(self.label)
        if self.static_bound is not None:
            out["staticBound"] = _num(self.static_bound)
        return out


def _num(x: Fraction):
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _parse_num(value, where: str) -> Fraction:
    try:
        return Fraction(value) if not isinstance(value, float) else Fraction(str(value))
    except (TypeError, ValueError):
        raise DatasetError(f"{where}: bad number {value!r}") from None


def load_jsonl(path) -> list[DatasetRecord]:
    """Read one ``{"query": ..., "response": ...}`` object per line."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise DatasetError(f"line {lineno}: expected a JSON object")
            missing = [k for k in ("query", "response") if k not in obj]
            if missing:
                raise DatasetError(f"line {lineno}: missing key(s) {', '.join(missing)}")
            if not isinstance(obj["query"], str):
                raise DatasetError(f"line {lineno}: 'query' must be a string")
            label = obj.get("label")
            bound = obj.get("staticBound")
            records.append(DatasetRecord(
                obj["query"], obj["response"],
                None if label is None else _parse_num(label, f"line {lineno}"),
                None if bound is None else _parse_num(bound, f"line {lineno}"),
            ))
    return records


def dump_jsonl(records: Iterable[DatasetRecord]) -> str:
    return "".join(json.dumps(r.to_json(), sort_keys=True, separators=(",", ":")) + "\n"
                   for r in records)


def save_jsonl(records: Iterable[DatasetRecord], path) -> None:
    Path(path).write_text(dump_jsonl(records), encoding="utf-8")


@dataclass(frozen=True)
class LabelError:
    index: int
    code: str
    message: str


def label_records(records: Sequence[DatasetRecord], schema: Schema,
                  config: CostConfig) -> tuple[list[DatasetRecord], list[LabelError]]:
    """Attach response complexity and static bound; failures go to the report."""
    labeled, errors = [], []
    for i, rec in enumerate(records):
        try:
            tq = load_typed_query(rec.query_text, schema)
            label = response_complexity(rec.response, tq, schema, config)
            bound = static_bound(tq, schema, config)
        except GqlCostError as exc:
            errors.append(LabelError(i, exc.code, str(exc)))
            continue
        labeled.append(replace(rec, label=label, static_bound=bound))
    return labeled, errors


@dataclass(frozen=True)
class GeneratorConfig:
    max_depth: int = 4
    max_fields_per_level: int = 3
    list_limit_range: tuple[int, int] = (1, 10)
    list_fill: str = "uniform"  # "uniform" | "full"
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.list_limit_range
        if self.max_depth < 1 or self.max_fields_per_level < 1 or lo < 0 or hi < lo:
            raise ValueError("invalid generator configuration")
        if self.list_fill not in ("uniform", "full"):
            raise ValueError(f"unknown list fill {self.list_fill!r}")


class _QueryGenerator:
    def __init__(self, schema: Schema, config: CostConfig, gen: GeneratorConfig):
        self.schema = schema
        self.config = config
        self.gen = gen
        self.height = self._min_heights()

    def _min_heights(self) -> dict[str, float]:
        # fewest selection levels needed below a type to reach scalar leaves;
        # the values are a fixed point computed by relaxation
        h = {t.name: float("inf") for t in self.schema.object_types()}
        changed = True
        while changed:
            changed = False
            for t in self.schema.object_types():
                best = min((0.0 if not self.schema.is_composite(f.returns.base)
                            else h[f.returns.base]) + 1.0 for f in t.fields
                           if self._args_satisfiable(f))
                if best < h[t.name]:
                    h[t.name] = best
                    changed = True
        return h

    def _args_satisfiable(self, f: FieldDef) -> bool:
        return all(not (a.required and a.type.is_list) for a in f.args)

    def _literal(self, base: str, rng: np.random.Generator, limit: bool):
        if limit:
            lo, hi = self.gen.list_limit_range
            return int(rng.integers(lo, hi + 1))
        if base == "Int" or base == "Float":
            return int(rng.integers(0, 100))
        if base == "Boolean":
            return bool(rng.integers(0, 2))
        kind = self.schema.kind_of(base)
        if kind == "enum":
            values = self.schema.types[base].enum_values
            return EnumValue(values[int(rng.integers(len(values)))])
        return f"s{int(rng.integers(0, 10**6))}"

    def _args(self, f: FieldDef, rng) -> tuple:
        out = []
        for a in f.args:
            is_limit = a.name in self.config.limit_arg_names and a.type.base == "Int"
            if is_limit:
                # only the first matching limit argument is honoured
                if not any(k in self.config.limit_arg_names for k, _ in out):
                    out.append((a.name, self._literal("Int", rng, True)))
            elif a.required:
                out.append((a.name, self._literal(a.type.base, rng, False)))
        return tuple(out)

    def _bounded(self, f: FieldDef, type_name: str, args, parent_args, parent_is_list) -> bool:
        if not f.returns.is_list:
            return True
        names = self.config.limit_arg_names
        if any(k in names for k, _ in args):
            return True
        if parent_args is not None and not parent_is_list and any(k in names for k, _ in parent_args):
            return True
        return f"{type_name}.{f.name}" in self.config.default_list_sizes

    def selection(self, type_name: str, depth: int, rng, parent_args=None,
                  parent_is_list=False) -> SelectionSet:
        tdef = self.schema.types[type_name]
        remaining = self.gen.max_depth - depth
        options = []
        for f in tdef.fields:
            if not self._args_satisfiable(f):
                continue
            if self.schema.is_composite(f.returns.base) and self.height[f.returns.base] > remaining:
                continue
            options.append(f)
        if not options:
            raise DatasetError(f"cannot build a selection on {type_name} within max_depth",
                               code="dataset.unsatisfiable")
        k = int(rng.integers(1, min(self.gen.max_fields_per_level, len(options)) + 1))
        picks = sorted(rng.choice(len(options), size=k, replace=False).tolist())
        nodes = []
        for i in picks:
            f = options[i]
            args = self._args(f, rng)
            if not self._bounded(f, type_name, args, parent_args, parent_is_list):
                continue
            sub = None
            if self.schema.is_composite(f.returns.base):
                sub = self.selection(f.returns.base, depth + 1, rng, args, f.returns.is_list)
            nodes.append(FieldNode(f.name, args, sub))
        if not nodes:
            scalars = [f for f in options if not self.schema.is_composite(f.returns.base)
                       and self._bounded(f, type_name, self._args(f, rng), parent_args,
                                         parent_is_list)]
            if not scalars:
                raise DatasetError(f"no bounded field available on {type_name}",
                                   code="dataset.unsatisfiable")
            f = scalars[0]
            nodes.append(FieldNode(f.name, self._args(f, rng), None))
        return SelectionSet(tuple(nodes))

    def response(self, fields: Sequence[TypedField], rng) -> dict:
        return {tf.name: self._value(tf, rng) for tf in fields}

    def _scalar(self, base: str):
        if base in ("Int", "Float"):
            return 0
        if base == "Boolean":
            return False
        if self.schema.kind_of(base) == "enum":
            return self.schema.types[base].enum_values[0]
        return ""

    def _value(self, tf: TypedField, rng):
        composite = self.schema.is_composite(tf.returns.base)
        def one():
            return self.response(tf.children, rng) if composite else self._scalar(tf.returns.base)
        if tf.returns.is_list:
            limit = resolve_list_limit(tf, self.config)
            n = limit if self.gen.list_fill == "full" else int(rng.integers(0, limit + 1))
            return [one() for _ in range(n)]
        return one()


def generate_synthetic(schema: Schema, config: CostConfig, gen: GeneratorConfig,
                       n: int) -> list[DatasetRecord]:
    """Seeded random queries with fabricated responses that respect every limit.

    Record ``i`` draws from its own stream seeded by ``(gen.seed, i)``.
    """
    qg = _QueryGenerator(schema, config, gen)
    if qg.height[schema.query_root] > gen.max_depth:
        raise DatasetError("no query fits within max_depth", code="dataset.unsatisfiable")
    out = []
    for i in range(n):
        rng = np.random.default_rng([gen.seed, i])
        doc = QueryDocument(qg.selection(schema.query_root, 1, rng))
        text = print_query(doc)
        tq = validate(doc, schema)
        response = qg.response(tq.fields, rng)
        label = response_complexity(response, tq, schema, config)
        bound = static_bound(tq, schema, config)
        if label > bound:
            raise AssertionError(f"record {i}: label {label} exceeds static bound {bound}")
        out.append(DatasetRecord(text, response, label, bound))
    return out


def split(records: Sequence, test_fraction: float, seed: int = 0) -> tuple[list, list]:
    if not 0 < test_fraction < 1:
        raise DatasetError("test_fraction must lie strictly between 0 and 1")
    n = len(records)
    if n < 2:
        raise DatasetError("need at least two records to split")
    n_test = min(n - 1, max(1, int(round(n * test_fraction))))
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = set(perm[:n_test].tolist())
    train = [r for i, r in enumerate(records) if i not in test_idx]
    test = [r for i, r in enumerate(records) if i in test_idx]
    return train, test
