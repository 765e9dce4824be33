"""Threshold gateway simulation and the inflated-static-bound robustness sweep."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import spearmanr

from ._accel import backend, njit
from .errors import DatasetError, ModelError
from .query import load_typed_query

ESTIMATORS = ("static", "ml")


@dataclass(frozen=True)
class SimConfig:
    threshold: float
    n_sims: int = 1000
    sample_size: int = 1000
    seed: int = 0
    estimator: str = "ml"

    def __post_init__(self):
        if self.threshold < 0 or self.n_sims < 1 or self.sample_size < 1:
            raise ValueError("invalid simulation config")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")


@dataclass
class SimReport:
    threshold: float
    estimator: str
    acceptance_rate: float
    violation_rate: float
    mean_violation_excess: float | None
    cumulative_actual: np.ndarray = field(repr=False)
    cumulative_budget: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "estimator": self.estimator,
            "acceptance_rate": self.acceptance_rate,
            "violation_rate": self.violation_rate,
            "mean_violation_excess": self.mean_violation_excess,
            "cumulative_actual": self.cumulative_actual.tolist(),
            "cumulative_budget": self.cumulative_budget.tolist(),
        }


@dataclass
class SimCorpus:
    """Actual costs with both estimators' predictions, row-aligned."""

    labels: np.ndarray
    estimates: dict[str, np.ndarray]

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.labels.size == 0:
            raise DatasetError("empty simulation corpus")
        for k, v in self.estimates.items():
            self.estimates[k] = np.asarray(v, dtype=np.float64)
            if self.estimates[k].shape != self.labels.shape:
                raise DatasetError(f"{k} estimates do not align with labels")

    @classmethod
    def from_comparison(cls, comparison) -> SimCorpus:
        return cls(comparison.labels, {"static": comparison.static_estimates,
                                       "ml": comparison.ml_estimates})


def sample_indices(n_records: int, cfg: SimConfig) -> np.ndarray:
    """Per-trial draws with replacement; trial ``t`` uses stream ``(seed, t)``."""
    return np.vstack([np.random.default_rng([cfg.seed, t]).integers(0, n_records, cfg.sample_size)
                      for t in range(cfg.n_sims)])


@njit
def _trials_nb(idx, est, actual, thr):
    n_sims, size = idx.shape
    cum_actual = np.zeros(size, dtype=np.float64)
    cum_count = np.zeros(size, dtype=np.float64)
    accepted = 0
    violators = 0
    excess = 0.0
    for t in range(n_sims):
        run_cost = 0.0
        run_count = 0
        for s in range(size):
            r = idx[t, s]
            if est[r] <= thr:
                a = actual[r]
                run_cost += a
                run_count += 1
                if a > thr:
                    violators += 1
                    if thr > 0:
                        excess += (a - thr) / thr
            cum_actual[s] += run_cost
            cum_count[s] += run_count
        accepted += run_count
    return cum_actual, cum_count, accepted, violators, excess


def _trials_np(idx, est, actual, thr):
    ok = est[idx] <= thr
    cost = np.where(ok, actual[idx], 0.0)
    cum_actual = np.cumsum(cost, axis=1).sum(axis=0)
    cum_count = np.cumsum(ok, axis=1).sum(axis=0).astype(np.float64)
    viol = ok & (actual[idx] > thr)
    excess = float(((actual[idx][viol] - thr) / thr).sum()) if thr > 0 else 0.0
    return cum_actual, cum_count, int(ok.sum()), int(viol.sum()), excess


def _run(idx, est, actual, cfg: SimConfig) -> SimReport:
    thr = float(cfg.threshold)
    if backend() == "numba":
        cum_actual, cum_count, accepted, violators, excess = _trials_nb(idx, est, actual, thr)
    else:
        cum_actual, cum_count, accepted, violators, excess = _trials_np(idx, est, actual, thr)
    n_sims, size = idx.shape
    mean_excess = None
    if violators and thr > 0:
        mean_excess = excess / violators
    return SimReport(
        threshold=thr,
        estimator=cfg.estimator,
        acceptance_rate=accepted / (n_sims * size),
        violation_rate=violators / accepted if accepted else 0.0,
        mean_violation_excess=mean_excess,
        cumulative_actual=cum_actual / n_sims,
        cumulative_budget=thr * cum_count / n_sims,
    )


def simulate(corpus: SimCorpus, cfg: SimConfig, idx: np.ndarray | None = None) -> SimReport:
    """Accept sampled queries whose estimate is at most the threshold."""
    est = corpus.estimates.get(cfg.estimator)
    if est is None:
        raise DatasetError(f"corpus has no {cfg.estimator} estimates")
    if idx is None:
        idx = sample_indices(corpus.labels.size, cfg)
    return _run(idx, est, corpus.labels, cfg)


def threshold_sweep(corpus: SimCorpus, thresholds: Sequence[float],
                    base: SimConfig) -> list[tuple[float, SimReport, SimReport]]:
    """Static and ml runs per threshold, all on the same sampled queries."""
    thresholds = [float(t) for t in thresholds]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly ascending")
    idx = sample_indices(corpus.labels.size, base)
    out = []
    for thr in thresholds:
        pair = [simulate(corpus, SimConfig(thr, base.n_sims, base.sample_size, base.seed, k), idx)
                for k in ESTIMATORS]
        out.append((thr, pair[0], pair[1]))
    return out


def default_thresholds(labels, n_points: int = 10) -> list[float]:
    """From the 25th percentile of labels up to max(5 x 75th percentile, max label)."""
    labels = np.asarray(labels, dtype=np.float64)
    lo = float(np.percentile(labels, 25))
    hi = max(5.0 * float(np.percentile(labels, 75)), float(labels.max()))
    lo = max(lo, 1e-9)
    return np.unique(np.geomspace(lo, hi, n_points)).tolist()


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "est_kind", "acceptance", "violations", "mean_excess"])
    for thr, *reports in rows:
        for rep in reports:
            excess = "" if rep.mean_violation_excess is None else repr(rep.mean_violation_excess)
            w.writerow([repr(thr), rep.estimator, repr(rep.acceptance_rate),
                        repr(rep.violation_rate), excess])
    return buf.getvalue()


DEFAULT_MULTIPLIERS = (1, 2, 5, 10, 50, 100, 1000)


def robustness_sweep_features(model, features: dict[str, np.ndarray],
                              multipliers: Sequence[float]) -> list[tuple[float, float]]:
    """Scale only the static-bound summary component and re-estimate."""
    if "summary" not in features or model.base.get("summary") is None:
        raise ModelError("robustness sweep needs the summary feature model")
    if any(m < 1 for m in multipliers):
        raise ValueError("multipliers must be >= 1")
    if any(b <= a for a, b in zip(multipliers, multipliers[1:])):
        raise ValueError("multipliers must be ascending")
    base = {k: np.asarray(v, dtype=np.float64).reshape(1, -1) for k, v in features.items()}
    bound = float(base["summary"][0, 0])
    out = []
    for m in multipliers:
        feats = dict(base)
        s = base["summary"].copy()
        s[0, 0] = bound * m
        feats["summary"] = s
        out.append((float(s[0, 0]), float(model.predict(feats)[0])))
    return out


def robustness_sweep(model, query_text: str, schema, config,
                     multipliers: Sequence[float] = DEFAULT_MULTIPLIERS) -> list[tuple[float, float]]:
    tq = load_typed_query(query_text, schema)
    mats = model.featurizer(schema, config).transform([tq])
    return robustness_sweep_features(model, {k: m.values for k, m in mats.items()}, multipliers)


def rank_correlation(points: Sequence[tuple[float, float]]) -> float:
    """Spearman correlation of (bound, estimate); a flat estimate counts as 0."""
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    if len(set(ys)) < 2 or len(set(xs)) < 2:
        return 0.0
    rho = spearmanr(xs, ys).statistic
    return 0.0 if math.isnan(rho) else float(rho)


def robustness_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bound", "estimate"])
    for b, e in points:
        w.writerow([repr(b), repr(e)])
    return buf.getvalue()
