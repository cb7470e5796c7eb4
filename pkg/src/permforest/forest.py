"""Subsampled tree ensembles and prediction matrices.

A forest is B trees, each grown on an independent without-replacement
subsample of size k_n = round(n^exponent).  Per-tree random streams are
spawned from one master seed, so fitting is reproducible bit-for-bit no
matter how the trees are scheduled across threads.  The per-tree prediction
matrix at a fixed test set is the object the permutation test shuffles.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import Dataset
from .tree import RegressionTree, TreeConfig, draw_subsample, fit_tree

THREADS_ENV_VAR = "PERMFOREST_THREADS"


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int
    subsample_exponent: float = 0.6
    k_n: Optional[int] = None
    tree: TreeConfig = field(default_factory=TreeConfig)
    master_seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be positive")
        if self.k_n is None and not 0.0 < self.subsample_exponent < 1.0:
            raise ValueError("subsample_exponent must lie in (0, 1)")
        if self.k_n is not None and self.k_n < 1:
            raise ValueError("explicit k_n must be positive")


def subsample_size(cfg: ForestConfig, n: int) -> int:
    """Resolve k_n: explicit override, else n^exponent rounded half away from zero."""
    if cfg.k_n is not None:
        k = cfg.k_n
    else:
        k = int(math.floor(n ** cfg.subsample_exponent + 0.5))
    if not 1 <= k <= n - 1:
        raise ValueError(f"subsample size k_n={k} out of range [1, {n - 1}] for n={n}")
    return k


def _resolve_threads(n_threads: Optional[int]) -> int:
    if n_threads is None:
        n_threads = int(os.environ.get(THREADS_ENV_VAR, "1"))
    return max(1, n_threads)


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple
    config: ForestConfig
    k_n: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, X) -> np.ndarray:
        """Ensemble prediction: the average of the per-tree predictions."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        acc = np.zeros(X.shape[0])
        for t in self.trees:
            acc += t.predict(X)
        return acc / self.n_trees


@dataclass(frozen=True, eq=False)
class PredictionMatrix:
    """Per-tree predictions at a fixed test set.

    ``values[i, j]`` is tree i's prediction at test point j; ``y`` holds the
    true responses at those points.
    """

    values: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("values must be a 2-d matrix")
        if y.shape != (values.shape[1],):
            raise ValueError(
                f"y has shape {y.shape}, expected ({values.shape[1]},)"
            )
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("prediction matrix must be non-empty")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(y))):
            raise ValueError("prediction matrix entries must be finite")
        values.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "y", y)

    @property
    def n_trees(self) -> int:
        return self.values.shape[0]

    @property
    def n_test(self) -> int:
        return self.values.shape[1]


def fit_forest(
    d: Dataset,
    cfg: ForestConfig,
    seed_seq: Optional[np.random.SeedSequence] = None,
    n_threads: Optional[int] = None,
) -> Forest:
    """Fit B trees on independent subsamples of size k_n.

    Tree i consumes the i-th child of the master seed sequence (by default
    ``SeedSequence(cfg.master_seed)``), which makes the result identical
    across thread counts and execution orders.  ``PERMFOREST_THREADS``
    overrides the thread count when ``n_threads`` is not given.
    """
    k = subsample_size(cfg, d.n)
    if seed_seq is None:
        seed_seq = np.random.SeedSequence(cfg.master_seed)
    children = seed_seq.spawn(cfg.n_trees)

    def build(i: int) -> RegressionTree:
        rng = np.random.Generator(np.random.PCG64(children[i]))
        rows = draw_subsample(d, k, rng)
        return fit_tree(d, rows, cfg.tree, rng)

    threads = _resolve_threads(n_threads)
    if threads == 1 or cfg.n_trees == 1:
        trees = [build(i) for i in range(cfg.n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            trees = list(ex.map(build, range(cfg.n_trees)))
    return Forest(tuple(trees), cfg, k)


def predict_matrix(f: Forest, test_X, test_y, n_threads: Optional[int] = None) -> PredictionMatrix:
    """Evaluate every tree at every test point."""
    X = np.ascontiguousarray(test_X, dtype=np.float64)
    y = np.asarray(test_y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("test set must be a non-empty 2-d matrix")
    p = f.trees[0].p
    if X.shape[1] != p:
        raise ValueError(f"test set has {X.shape[1]} columns, forest expects {p}")
    if y.shape != (X.shape[0],):
        raise ValueError("test responses must match the number of test rows")
    values = np.empty((f.n_trees, X.shape[0]))
    threads = _resolve_threads(n_threads)
    if threads == 1 or f.n_trees == 1:
        for i, t in enumerate(f.trees):
            values[i] = t.predict(X)
    else:
        def run(i):
            values[i] = f.trees[i].predict(X)

        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(run, range(f.n_trees)))
    return PredictionMatrix(values, y)


def forest_mse(pm: PredictionMatrix, row_subset=None) -> float:
    """Test-set MSE of the forest formed by the selected matrix rows.

    With no subset the full ensemble is used.  The permutation loop calls
    this with row subsets to score reshuffled forests without copying the
    matrix.
    """
    if row_subset is None:
        means = pm.values.mean(axis=0)
    else:
        rows = np.asarray(row_subset, dtype=np.intp)
        if rows.size == 0:
            raise ValueError("row subset must be non-empty")
        if rows.min() < 0 or rows.max() >= pm.n_trees:
            raise ValueError("row subset indices out of range")
        means = pm.values[rows].mean(axis=0)
    diff = means - pm.y
    return float(diff @ diff / pm.n_test)


@dataclass(frozen=True)
class SubsampleDiagnostics:
    """Disjointness diagnostics for a subsampling plan.

    ``pair_disjoint_prob`` is the exact probability that two independent
    size-k subsamples of n rows share no index, C(n-k, k) / C(n, k).
    ``log_all_pairs_disjoint`` is C(B, 2) times its log: the log-probability
    that all tree pairs are disjoint, a proxy for how far the collection is
    from pairwise independence.  ``dependence_warning`` marks values below
    -1, where between-tree dependence is material.
    """

    pair_disjoint_prob: float
    log_all_pairs_disjoint: float
    dependence_warning: bool

    def as_dict(self) -> dict:
        return {
            "pair_disjoint_prob": self.pair_disjoint_prob,
            "log_all_pairs_disjoint": self.log_all_pairs_disjoint,
            "dependence_warning": self.dependence_warning,
        }


def _log_comb(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def subsample_diagnostics(n: int, k: int, b: int) -> SubsampleDiagnostics:
    """Exact disjoint-pair probability via log-gamma, safe up to n ~ 1e6."""
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    if b < 1:
        raise ValueError("b must be positive")
    if 2 * k > n:
        # two subsamples larger than half the data always intersect
        prob = 0.0
        log_term = -math.inf if b >= 2 else 0.0
    else:
        log_prob = _log_comb(n - k, k) - _log_comb(n, k)
        prob = math.exp(log_prob)
        log_term = (b * (b - 1) // 2) * log_prob
    return SubsampleDiagnostics(prob, log_term, log_term < -1.0)


def write_prediction_matrix_csv(pm: PredictionMatrix, path) -> None:
    """Export per-tree predictions for offline analysis.

    One row per tree with the predictions at each test point; the final row,
    labeled ``y``, carries the test responses.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tree"] + [f"point{j}" for j in range(pm.n_test)])
        for i in range(pm.n_trees):
            writer.writerow([i] + [repr(float(v)) for v in pm.values[i]])
        writer.writerow(["y"] + [repr(float(v)) for v in pm.y])
