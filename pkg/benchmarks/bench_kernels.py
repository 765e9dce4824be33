"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--rows 4000] [--features 64] [--repeat 3]

Each kernel is run once per backend before timing so JIT compilation is
excluded. Results are checked for agreement before any timing is reported.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from gqlcost._accel import HAVE_NUMBA, use_backend
from gqlcost.regressors._kernels import apply_tree, build_tree, knn_predict, presort
from gqlcost.simulator import SimConfig, SimCorpus, sample_indices, simulate


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=4000)
    ap.add_argument("--features", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    X = rng.integers(0, 6, (args.rows, args.features)).astype(np.float64)
    y = X[:, :8].sum(axis=1) + rng.normal(size=args.rows)
    order = presort(X)
    Q = X[: args.rows // 4] + 0.5
    labels = np.abs(y)
    corpus = SimCorpus(labels, {"static": labels * 2, "ml": labels + rng.normal(size=args.rows)})
    cfg = SimConfig(float(np.median(labels)), n_sims=200, sample_size=1000, seed=args.seed)
    idx = sample_indices(args.rows, cfg)

    cases = {
        "build_tree depth 6": lambda: build_tree(X, y, order, max_depth=6),
        "build_tree unbounded": lambda: build_tree(X, y, order),
        "apply_tree": None,
        "knn k=3": lambda: knn_predict(X, y, Q, 3),
        "simulate 200x1000": lambda: simulate(corpus, cfg, idx),
    }
    results: dict[str, dict[str, float]] = {}
    outputs: dict[str, dict[str, object]] = {}
    for backend in ("numpy", "numba"):
        with use_backend(backend):
            tree = build_tree(X, y, order)
            cases["apply_tree"] = lambda: apply_tree(X, tree)
            for name, fn in cases.items():
                outputs.setdefault(name, {})[backend] = fn()
                results.setdefault(name, {})[backend] = best_of(fn, args.repeat)

    for name, out in outputs.items():
        a, b = out["numpy"], out["numba"]
        if isinstance(a, tuple):
            same = all(np.array_equal(u, v) for u, v in zip(a, b))
        elif isinstance(a, np.ndarray):
            same = np.allclose(a, b, rtol=1e-12)
        else:
            same = np.isclose(a.acceptance_rate, b.acceptance_rate)
        if not same:
            raise SystemExit(f"{name}: backends disagree")

    print(f"rows={args.rows} features={args.features} best of {args.repeat}")
    print(f"{'kernel':<24}{'numpy s':>10}{'numba s':>10}{'speedup':>9}")
    for name, t in results.items():
        print(f"{name:<24}{t['numpy']:>10.4f}{t['numba']:>10.4f}{t['numpy'] / t['numba']:>8.1f}x")


if __name__ == "__main__":
    main()
