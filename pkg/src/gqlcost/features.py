"""Query embeddings: field counts, hashed WL subtree features, summary features."""
from __future__ import annotations

import csv
import hashlib
import io
from collections import Counter
from dataclasses import astuple, dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cost import CostConfig, resolve_list_limit, static_bound
from .errors import FeatureSpaceError
from .query import TypedField, TypedQuery
from .schema import Schema

SUMMARY_NAMES = ("static_bound", "query_size", "width", "nesting", "lists", "sum_of_limits")


@dataclass(frozen=True)
class FieldFeatureSpace:
    columns: tuple[str, ...]

    @classmethod
    def from_schema(cls, schema: Schema) -> FieldFeatureSpace:
        return cls(tuple(f"{t.name}.{f.name}" for t in schema.object_types() for f in t.fields))

    @property
    def dimension(self) -> int:
        return len(self.columns)

    @property
    def index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.columns)}


@dataclass(frozen=True)
class GraphFeatureParams:
    dimension: int = 64
    wl_iterations: int = 3
    hash_seed: int = 0

    def __post_init__(self):
        if self.dimension < 1 or self.wl_iterations < 0:
            raise ValueError("dimension must be >= 1 and wl_iterations >= 0")


@dataclass(frozen=True)
class SummaryFeatures:
    static_bound: Fraction
    query_size: int
    width: int
    nesting: int
    lists: int
    sum_of_limits: int

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in astuple(self)], dtype=np.float64)


def field_features(tq: TypedQuery, space: FieldFeatureSpace) -> np.ndarray:
    """Bag-of-fields count vector indexed by ``Type.field``."""
    index = space.index
    out = np.zeros(space.dimension, dtype=np.float64)
    for tf in tq.walk():
        i = index.get(tf.key)
        if i is None:
            raise FeatureSpaceError(f"field {tf.key} is not in the feature space")
        out[i] += 1.0
    return out


def summary_features(tq: TypedQuery, schema: Schema, config: CostConfig) -> SummaryFeatures:
    n_fields = 0
    n_sets = 1
    width = len(tq.fields)
    nesting = 0
    lists = 0
    limits = 0
    stack: list[tuple[TypedField, int]] = [(f, 1) for f in tq.fields]
    while stack:
        tf, depth = stack.pop()
        n_fields += 1
        nesting = max(nesting, depth - 1)
        if tf.node.selection is not None:
            n_sets += 1
            width = max(width, len(tf.children))
        if tf.returns.is_list:
            lists += 1
            limits += resolve_list_limit(tf, config)
        stack.extend((c, depth + 1) for c in tf.children)
    # the operation node itself counts as one AST node
    query_size = 1 + n_fields + n_sets
    return SummaryFeatures(static_bound(tq, schema, config), query_size, width,
                           nesting, lists, limits)


def _digest(text: str, key: bytes = b"") -> bytes:
    return hashlib.blake2b(text.encode("utf-8"), digest_size=8, key=key).digest()


def _bucket(label: str, params: GraphFeatureParams) -> int:
    key = params.hash_seed.to_bytes(8, "little", signed=True)
    return int.from_bytes(_digest(label, key), "little") % params.dimension


def wl_labels(tq: TypedQuery, iterations: int) -> list[str]:
    """Every node label from every refinement round, root included."""
    # node 0 is the operation root; children lists hold node ids
    labels = [f"{tq.root_type}."]
    children: list[list[int]] = [[]]
    stack = [(f, 0) for f in reversed(tq.fields)]
    while stack:
        tf, parent = stack.pop()
        nid = len(labels)
        labels.append(tf.key)
        children.append([])
        children[parent].append(nid)
        stack.extend((c, nid) for c in reversed(tf.children))
    emitted = list(labels)
    for _ in range(iterations):
        labels = [
            _digest(lab + "(" + ",".join(sorted(labels[c] for c in kids)) + ")").hex()
            for lab, kids in zip(labels, children)
        ]
        emitted.extend(labels)
    return emitted


def graph_features(tq: TypedQuery, params: GraphFeatureParams = GraphFeatureParams()) -> np.ndarray:
    """Hashed Weisfeiler-Lehman subtree counts, normalised by query size."""
    out = np.zeros(params.dimension, dtype=np.float64)
    counts = Counter(_bucket(lab, params) for lab in wl_labels(tq, params.wl_iterations))
    for b, n in counts.items():
        out[b] = n
    n_fields = sum(1 for _ in tq.walk())
    n_sets = 1 + sum(1 for f in tq.walk() if f.children)
    return out / (1 + n_fields + n_sets)


@dataclass
class FeatureMatrix:
    values: np.ndarray
    columns: list[str]
    space: str  # "field" | "graph" | "summary" | "stacked"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1, len(self.columns))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.values:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, space: str) -> FeatureMatrix:
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        values = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
        return cls(values.reshape(len(body), len(header)), header, space)


@dataclass(frozen=True)
class Featurizer:
    """All three extractors bound to one schema and config."""

    schema: Schema
    config: CostConfig
    space: FieldFeatureSpace
    graph_params: GraphFeatureParams = GraphFeatureParams()

    @classmethod
    def build(cls, schema: Schema, config: CostConfig,
              graph_params: GraphFeatureParams = GraphFeatureParams()) -> Featurizer:
        return cls(schema, config, FieldFeatureSpace.from_schema(schema), graph_params)

    def columns(self, space: str) -> list[str]:
        if space == "field":
            return ["f:" + c for c in self.space.columns]
        if space == "graph":
            return [f"g:bucket_{i}" for i in range(self.graph_params.dimension)]
        if space == "summary":
            return ["s:" + n for n in SUMMARY_NAMES]
        raise ValueError(f"unknown feature space {space!r}")

    def transform(self, queries: Sequence[TypedQuery]) -> dict[str, FeatureMatrix]:
        f_rows, g_rows, s_rows = [], [], []
        for tq in queries:
            f_rows.append(field_features(tq, self.space))
            g_rows.append(graph_features(tq, self.graph_params))
            s_rows.append(summary_features(tq, self.schema, self.config).as_array())
        out = {}
        for name, rows in (("field", f_rows), ("graph", g_rows), ("summary", s_rows)):
            cols = self.columns(name)
            values = np.vstack(rows) if rows else np.zeros((0, len(cols)))
            out[name] = FeatureMatrix(values, cols, name)
        return out

