"""Accuracy metrics, static-vs-learned comparison, and mutual-information ranking."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cost import CostConfig
from .errors import DatasetError
from .query import load_typed_query
from .schema import Schema

QUANTILES = (0.005, 0.05, 0.25, 0.5, 0.75, 0.95, 0.995)


def mae(actual, predicted) -> float:
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {p.shape}")
    if a.size == 0:
        raise ValueError("MAE of an empty sample")
    return float(np.mean(np.abs(a - p)))


def error_percent(actual: float, predicted: float) -> float:
    """Signed relative error; negative values are underestimates."""
    if actual == 0:
        raise ZeroDivisionError("error percentage is undefined for a zero-cost response")
    return (predicted - actual) / actual


@dataclass
class EvalReport:
    mae: float
    mae_std: float
    error_percent_quantiles: dict[float, float]
    n: int
    n_zero_cost: int = 0

    def to_dict(self) -> dict:
        return {"mae": self.mae, "mae_std": self.mae_std, "n": self.n,
                "n_zero_cost": self.n_zero_cost,
                "error_percent_quantiles": {str(q): v for q, v in
                                            self.error_percent_quantiles.items()}}


def evaluate(actual, predicted) -> EvalReport:
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    abs_err = np.abs(a - p)
    nz = a != 0
    errs = (p[nz] - a[nz]) / a[nz]
    quants = {q: float(np.quantile(errs, q)) for q in QUANTILES} if errs.size else {}
    return EvalReport(mae(a, p), float(abs_err.std()), quants, int(a.size), int((~nz).sum()))


def display_clip(values, percentile: float = 99.5) -> np.ndarray:
    """Drop values above the given percentile, for plotting only."""
    v = np.asarray(values, dtype=np.float64)
    return v[v <= np.percentile(v, percentile)]


@dataclass
class Comparison:
    ml: EvalReport
    static: EvalReport
    labels: np.ndarray
    static_estimates: np.ndarray
    ml_estimates: np.ndarray = field(repr=False)

    @property
    def deltas(self) -> np.ndarray:
        """Per-record |static error| - |ml error|."""
        return np.abs(self.static_estimates - self.labels) - np.abs(self.ml_estimates - self.labels)

    def to_dict(self) -> dict:
        return {"ml": self.ml.to_dict(), "static": self.static.to_dict(),
                "mean_delta": float(self.deltas.mean())}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "static", "ml"])
        for row in zip(self.labels, self.static_estimates, self.ml_estimates):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def compare(records: Sequence, model, schema: Schema, config: CostConfig) -> Comparison:
    """Score the stacked model and the static bound on the same labelled records."""
    if not records:
        raise DatasetError("empty test set")
    if any(r.label is None for r in records):
        raise DatasetError("compare needs labelled records")
    tqs = [load_typed_query(r.query_text, schema) for r in records]
    mats = model.featurizer(schema, config).transform(tqs)
    ml = model.predict({k: m.values for k, m in mats.items()})
    static = mats["summary"].values[:, 0]
    labels = np.array([float(r.label) for r in records])
    return Comparison(evaluate(labels, ml), evaluate(labels, static), labels, static, ml)


def _equal_frequency_bins(x: np.ndarray, bins: int) -> np.ndarray:
    edges = np.unique(np.quantile(x, np.linspace(0.0, 1.0, bins + 1)[1:-1]))
    return np.searchsorted(edges, x, side="right")


def binned_entropy(counts: np.ndarray, n: int, correction: bool = True) -> float:
    """Entropy (nats) of a histogram; Miller-Madow corrected by default."""
    p = counts[counts > 0] / n
    h = float(-np.sum(p * np.log(p)))
    if correction:
        h += (p.size - 1) / (2.0 * n)
    return h


def mutual_information(x, y, bins: int = 32, correction: bool = True) -> float:
    """MI (nats) of equal-frequency binned ``x`` and ``y``.

    Computed as H(x) + H(y) - H(x, y). With ``correction`` each entropy gets
    the Miller-Madow term, which removes the (bx-1)(by-1)/2n upward bias the
    plug-in estimate shows on independent columns.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("feature and labels differ in length")
    if x.size < bins:
        raise ValueError(f"need at least {bins} samples")
    if np.all(x == x[0]) or np.all(y == y[0]):
        return 0.0
    n = x.size
    bx = _equal_frequency_bins(x, bins)
    by = _equal_frequency_bins(y, bins)
    joint = np.zeros((bx.max() + 1, by.max() + 1))
    np.add.at(joint, (bx, by), 1.0)
    mi = (binned_entropy(joint.sum(axis=1), n, correction)
          + binned_entropy(joint.sum(axis=0), n, correction)
          - binned_entropy(joint.ravel(), n, correction))
    return max(mi, 0.0)


def rank_features(X, columns: Sequence[str], labels, bins: int = 32,
                  top_k: int | None = 10) -> list[tuple[str, float]]:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != len(columns):
        raise ValueError("column names do not match the feature matrix")
    scores = [(c, mutual_information(X[:, i], labels, bins)) for i, c in enumerate(columns)]
    # stable: equal scores keep column order
    scores.sort(key=lambda t: -t[1])
    return scores if top_k is None else scores[:top_k]
