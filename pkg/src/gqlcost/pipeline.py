"""Scaler -> transform -> regressor pipelines, random search, and stacking."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cost import CostConfig
from .errors import ModelError
from .features import Featurizer, FieldFeatureSpace, GraphFeatureParams, SUMMARY_NAMES
from .query import load_typed_query
from .regressors import OperatorSpec, dump_operator, fit, load_operator, polynomial_width
from .schema import Schema

log = logging.getLogger(__name__)

MODEL_FORMAT = "gqlcost.stacked-model"
MODEL_VERSION = 1
SPACES = ("field", "graph", "summary")
DEFAULT_BUDGET = 60
# polynomial expansions wider than this are left out of the search
DEFAULT_MAX_POLY_WIDTH = 512


@dataclass(frozen=True)
class PipelineSpec:
    transform: OperatorSpec
    regressor: OperatorSpec

    def label(self) -> str:
        return f"SS -> {self.transform.label()} -> {self.regressor.label()}"

    def to_dict(self) -> dict:
        return {"scaler": {"kind": "standard_scaler", "params": {}},
                "transform": self.transform.to_dict(),
                "regressor": self.regressor.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> PipelineSpec:
        return cls(OperatorSpec.from_dict(data["transform"]),
                   OperatorSpec.from_dict(data["regressor"]))


class FittedPipeline:
    def __init__(self, spec: PipelineSpec, scaler, transform, regressor):
        self.spec = spec
        self.scaler = scaler
        self.transform = transform
        self.regressor = regressor

    @property
    def n_features(self) -> int:
        return self.scaler.n_features

    def predict(self, X) -> np.ndarray:
        Z = self.transform.transform(self.scaler.transform(X))
        return self.regressor.predict(Z)

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(),
                "steps": [dump_operator(self.scaler), dump_operator(self.transform),
                          dump_operator(self.regressor)]}

    @classmethod
    def from_dict(cls, data: dict) -> FittedPipeline:
        scaler, transform, regressor = (load_operator(s) for s in data["steps"])
        return cls(PipelineSpec.from_dict(data["spec"]), scaler, transform, regressor)


def fit_pipeline(spec: PipelineSpec, X, y) -> FittedPipeline:
    scaler = fit(OperatorSpec.make("standard_scaler"), X)
    Z = scaler.transform(X)
    transform = fit(spec.transform, Z)
    regressor = fit(spec.regressor, transform.transform(Z), y)
    return FittedPipeline(spec, scaler, transform, regressor)


def kfold(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Held-out index blocks of a seeded shuffled k-fold split."""
    if k < 2:
        raise ModelError("cross validation needs k >= 2")
    if n < k:
        raise ModelError(f"{n} rows cannot be split into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(block) for block in np.array_split(perm, k)]


def cross_validate(spec: PipelineSpec, X, y, k: int = 5, seed: int = 0) -> float:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    scores = []
    for held in kfold(X.shape[0], k, seed):
        train = np.setdiff1d(np.arange(X.shape[0]), held, assume_unique=True)
        model = fit_pipeline(spec, X[train], y[train])
        scores.append(float(np.mean(np.abs(model.predict(X[held]) - y[held]))))
    return float(np.mean(scores))


def out_of_fold(spec: PipelineSpec, X, y, k: int = 5, seed: int = 0) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)
    for held in kfold(X.shape[0], k, seed):
        train = np.setdiff1d(np.arange(X.shape[0]), held, assume_unique=True)
        out[held] = fit_pipeline(spec, X[train], y[train]).predict(X[held])
    return out


def _regressor_grid(seed: int) -> list[OperatorSpec]:
    grid = [OperatorSpec.make("linear_regression"), OperatorSpec.make("knn")]
    grid += [OperatorSpec.make("ridge", alpha=a) for a in (0.1, 1.0, 10.0)]
    grid += [OperatorSpec.make("decision_tree", max_depth=d, min_leaf=m)
             for d in (3, 6, None) for m in (1, 5)]
    grid += [OperatorSpec.make("random_forest", n_trees=t, max_depth=d, min_leaf=m, seed=seed)
             for t in (50, 100) for d in (3, 6, None) for m in (1, 5)]
    grid += [OperatorSpec.make("gradient_boosting", n_stages=s, learning_rate=lr,
                               max_depth=d, seed=seed)
             for s in (50, 200) for lr in (0.05, 0.1) for d in (3, 6)]
    return grid


@dataclass(frozen=True)
class SearchSpace:
    """Candidate pipelines with sampling weights.

    ``transform_prior`` weights the no-op/polynomial choice; regressor kinds
    are equally likely and hyperparameters uniform within a kind.
    """

    candidates: tuple[tuple[PipelineSpec, float], ...]

    @classmethod
    def default(cls, n_features: int, seed: int = 0, no_op_prior: float = 0.5,
                max_poly_width: int = DEFAULT_MAX_POLY_WIDTH) -> SearchSpace:
        transforms = [(OperatorSpec.make("no_op"), no_op_prior)]
        polys = [OperatorSpec.make("polynomial", degree=d) for d in (1, 2)
                 if polynomial_width(n_features, d) <= max_poly_width]
        for p in polys:
            transforms.append((p, (1.0 - no_op_prior) / len(polys)))
        if not polys:
            transforms = [(transforms[0][0], 1.0)]
        regs = _regressor_grid(seed)
        per_kind: dict[str, int] = {}
        for r in regs:
            per_kind[r.kind] = per_kind.get(r.kind, 0) + 1
        out = []
        for t, tw in transforms:
            for r in regs:
                out.append((PipelineSpec(t, r), tw / len(per_kind) / per_kind[r.kind]))
        return cls(tuple(out))

    @classmethod
    def of(cls, specs: Sequence[PipelineSpec]) -> SearchSpace:
        return cls(tuple((s, 1.0) for s in specs))

    def sample(self, budget: int, seed: int) -> list[PipelineSpec]:
        if not self.candidates:
            raise ModelError("empty search space")
        if budget < 1:
            raise ModelError("search budget must be >= 1")
        w = np.array([c[1] for c in self.candidates], dtype=np.float64)
        size = min(budget, len(self.candidates))
        picks = np.random.default_rng(seed).choice(len(w), size=size, replace=False,
                                                   p=w / w.sum())
        return [self.candidates[i][0] for i in picks]


@dataclass
class SearchResult:
    best: PipelineSpec
    score: float
    trials: list[tuple[PipelineSpec, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"best": self.best.label(), "score": self.score,
                "trials": [{"pipeline": s.label(), "cv_mae": v} for s, v in self.trials]}


def search(space: SearchSpace, X, y, budget: int = DEFAULT_BUDGET, seed: int = 0,
           k: int = 5) -> SearchResult:
    """Seeded random search; the first sampled spec wins ties."""
    trials = []
    best = None
    for spec in space.sample(budget, seed):
        score = cross_validate(spec, X, y, k, seed)
        log.debug("cv %.6g  %s", score, spec.label())
        trials.append((spec, score))
        if best is None or score < best[1]:
            best = (spec, score)
    return SearchResult(best[0], best[1], trials)


def _space_for(name: str, n_features: int, seed: int) -> SearchSpace:
    # field counts favour the untransformed pipeline
    prior = 0.75 if name == "field" else 0.5
    return SearchSpace.default(n_features, seed, no_op_prior=prior)


@dataclass
class StackedModel:
    base: dict[str, FittedPipeline]
    combiner: FittedPipeline
    field_space: FieldFeatureSpace
    graph_params: GraphFeatureParams
    provenance: dict
    searches: dict[str, dict] = field(default_factory=dict)

    def predict_parts(self, features: dict[str, np.ndarray]) -> np.ndarray:
        cols = [self.base[name].predict(features[name]) for name in SPACES]
        return np.column_stack(cols)

    def predict(self, features: dict[str, np.ndarray]) -> np.ndarray:
        raw = self.combiner.predict(self.predict_parts(features))
        return np.maximum(raw, 0.0)

    def featurizer(self, schema: Schema, config: CostConfig) -> Featurizer:
        return Featurizer(schema, config, self.field_space, self.graph_params)

    def check_compatible(self, schema: Schema, config: CostConfig) -> None:
        expected = (self.provenance.get("schema_hash"), self.provenance.get("config_hash"))
        if expected != (schema.fingerprint(), config.fingerprint()):
            raise ModelError("model was trained for a different schema or cost config",
                             code="model.provenance_mismatch")

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "features": {
                "field": list(self.field_space.columns),
                "graph": {"dimension": self.graph_params.dimension,
                          "wl_iterations": self.graph_params.wl_iterations,
                          "hash_seed": self.graph_params.hash_seed},
                "summary": list(SUMMARY_NAMES),
            },
            "provenance": self.provenance,
            "base": {name: self.base[name].to_dict() for name in SPACES},
            "combiner": self.combiner.to_dict(),
            "searches": self.searches,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_dict(cls, data: dict) -> StackedModel:
        if data.get("format") != MODEL_FORMAT:
            raise ModelError("not a stacked model file")
        if data.get("version") != MODEL_VERSION:
            raise ModelError(f"unsupported model version {data.get('version')}")
        feats = data["features"]
        if tuple(feats["summary"]) != SUMMARY_NAMES:
            raise ModelError("model lacks the summary feature layout")
        model = cls(
            {name: FittedPipeline.from_dict(data["base"][name]) for name in SPACES},
            FittedPipeline.from_dict(data["combiner"]),
            FieldFeatureSpace(tuple(feats["field"])),
            GraphFeatureParams(**feats["graph"]),
            data["provenance"],
            data.get("searches", {}),
        )
        if model.combiner.n_features != len(SPACES):
            raise ModelError("combiner must take three inputs")
        return model

    @classmethod
    def load(cls, path) -> StackedModel:
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: invalid JSON ({exc.msg})") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"{path}: malformed model ({exc})") from None


def train_stacked(features: dict[str, np.ndarray], y, search_budget: int = DEFAULT_BUDGET,
                  seed: int = 0, *, field_space: FieldFeatureSpace | None = None,
                  graph_params: GraphFeatureParams = GraphFeatureParams(),
                  provenance: dict | None = None, k: int = 5) -> StackedModel:
    """Fit one searched pipeline per feature space and a combiner over their
    out-of-fold predictions; base pipelines are then refit on all rows."""
    y = np.asarray(y, dtype=np.float64)
    for name in SPACES:
        if np.asarray(features[name]).shape[0] != y.shape[0]:
            raise ModelError(f"{name} features and targets differ in length")
    base, oof, searches = {}, [], {}
    for name in SPACES:
        X = np.asarray(features[name], dtype=np.float64)
        result = search(_space_for(name, X.shape[1], seed), X, y, search_budget, seed, k)
        log.info("%s model: %s (cv mae %.4g)", name, result.best.label(), result.score)
        searches[name] = result.to_dict()
        oof.append(out_of_fold(result.best, X, y, k, seed))
        base[name] = fit_pipeline(result.best, X, y)
    stacked = np.column_stack(oof)
    result = search(_space_for("final", 3, seed), stacked, y, search_budget, seed, k)
    log.info("final model: %s (cv mae %.4g)", result.best.label(), result.score)
    searches["final"] = result.to_dict()
    combiner = fit_pipeline(result.best, stacked, y)
    if field_space is None:
        field_space = FieldFeatureSpace(tuple(f"col{i}" for i in
                                              range(np.asarray(features["field"]).shape[1])))
    prov = dict(provenance or {})
    prov.update({"search_seed": seed, "search_budget": search_budget, "folds": k})
    return StackedModel(base, combiner, field_space, graph_params, prov, searches)


def estimate(model: StackedModel, query_text: str, schema: Schema, config: CostConfig) -> float:
    tq = load_typed_query(query_text, schema)
    mats = model.featurizer(schema, config).transform([tq])
    return float(model.predict({k: m.values for k, m in mats.items()})[0])
