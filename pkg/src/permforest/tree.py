"""CART regression trees grown on subsamples.

A tree here is the exchangeable base learner of the ensemble: fit on a
without-replacement subsample with ``mtry`` candidate features drawn fresh
at every node, split by total within-child SSE, leaves storing the mean
response of the training rows they receive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .dataset import Dataset

KIND_NUMERIC = _kernels.KIND_NUMERIC
KIND_SUBSET = _kernels.KIND_SUBSET
KIND_LEVEL = _kernels.KIND_LEVEL


@dataclass(frozen=True)
class TreeConfig:
    """Growth parameters.

    mtry
        Features sampled (without replacement) at each split; ``None`` means
        ``ceil(p / 3)``, resolved when the training data is seen.
    min_node_size
        Minimum rows per child; the default 1 grows trees to full depth.
    max_depth
        ``None`` for unlimited.
    min_split_fraction
        When positive, every split must leave at least this fraction of the
        tree's subsample in each child.  Must be below 0.5.
    """

    mtry: Optional[int] = None
    min_node_size: int = 1
    max_depth: Optional[int] = None
    min_split_fraction: float = 0.0

    def __post_init__(self):
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be positive")
        if self.min_node_size < 1:
            raise ValueError("min_node_size must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if not 0.0 <= self.min_split_fraction < 0.5:
            raise ValueError("min_split_fraction must lie in [0, 0.5)")

    def resolve_mtry(self, p: int) -> int:
        if self.mtry is None:
            return max(1, math.ceil(p / 3))
        if self.mtry > p:
            raise ValueError(f"mtry={self.mtry} exceeds feature count p={p}")
        return self.mtry


@dataclass(frozen=True, eq=False)
class RegressionTree:
    """Fitted tree as flat node arrays plus the subsample it was grown on."""

    feature: np.ndarray
    kind: np.ndarray
    num: np.ndarray
    mask: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray
    kinds: tuple
    trained_on_rows: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def p(self) -> int:
        return len(self.kinds)

    def predict(self, X) -> np.ndarray:
        """Predictions for an (m, p) matrix of query points."""
        X = self._check_query(X)
        out = np.empty(X.shape[0])
        _kernels.predict_points(
            X, self.feature, self.kind, self.num, self.mask, self.left, self.right,
            self.value, out,
        )
        return out

    def apply(self, X) -> np.ndarray:
        """Leaf node id reached by each query point."""
        X = self._check_query(X)
        out = np.empty(X.shape[0], np.int64)
        _kernels.apply_points(
            X, self.feature, self.kind, self.num, self.mask, self.left, self.right, out
        )
        return out

    def _check_query(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.p:
            raise ValueError(f"query must be 2-d with {self.p} columns, got {X.shape}")
        return X

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def to_nested(self, node: int = 0) -> dict:
        """Debug serialization to a nested dict (not a stability contract)."""
        if self.feature[node] < 0:
            return {"leaf": float(self.value[node]), "count": int(self.count[node])}
        j = int(self.feature[node])
        k = int(self.kind[node])
        if k == KIND_NUMERIC:
            split = {"feature": j, "threshold": float(self.num[node])}
        elif k == KIND_SUBSET:
            levels = [b for b in range(63) if (int(self.mask[node]) >> b) & 1]
            split = {"feature": j, "left_levels": levels}
        else:
            split = {"feature": j, "left_levels": [int(self.num[node])]}
        return {
            "split": split,
            "count": int(self.count[node]),
            "left": self.to_nested(int(self.left[node])),
            "right": self.to_nested(int(self.right[node])),
        }


def draw_subsample(d: Dataset, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``k`` distinct row indices uniformly without replacement, k < n."""
    if not 1 <= k < d.n:
        raise ValueError(f"subsample size k={k} must satisfy 1 <= k < n={d.n}")
    return rng.choice(d.n, size=k, replace=False)


def fit_tree(
    d: Dataset, rows, cfg: TreeConfig, rng: np.random.Generator
) -> RegressionTree:
    """Grow a tree on ``d`` restricted to ``rows``.

    Per-node feature draws are pre-generated from ``rng`` before growth, so
    the result depends only on (data, rows, config, stream state) and is
    reproducible under any execution schedule.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("rows must be non-empty")
    if rows.min() < 0 or rows.max() >= d.n:
        raise ValueError("row indices out of range")
    k = rows.size
    p = d.p
    mtry = cfg.resolve_mtry(p)
    cap = max(2 * k, 3)
    feat_order = np.argsort(rng.random((cap, p)), axis=1).astype(np.int64)
    level_counts = np.array(
        [kind.level_count if kind.is_categorical else 0 for kind in d.kinds], np.int64
    )
    max_depth = -1 if cfg.max_depth is None else cfg.max_depth
    min_child_extra = 0
    if cfg.min_split_fraction > 0.0:
        min_child_extra = int(math.ceil(cfg.min_split_fraction * k - 1e-9))

    feature = np.empty(cap, np.int64)
    kind = np.zeros(cap, np.int64)
    num = np.zeros(cap)
    mask = np.zeros(cap, np.int64)
    left = np.zeros(cap, np.int64)
    right = np.zeros(cap, np.int64)
    value = np.zeros(cap)
    count = np.zeros(cap, np.int64)
    n_nodes = _kernels.grow_tree(
        d.X, d.y, rows, level_counts, feat_order, mtry, cfg.min_node_size,
        max_depth, min_child_extra,
        feature, kind, num, mask, left, right, value, count,
    )
    sl = slice(0, n_nodes)
    return RegressionTree(
        feature[sl].copy(), kind[sl].copy(), num[sl].copy(), mask[sl].copy(),
        left[sl].copy(), right[sl].copy(), value[sl].copy(), count[sl].copy(),
        d.kinds, rows.copy(),
    )


def predict_tree(t: RegressionTree, x) -> float:
    """Prediction at a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != t.p:
        raise ValueError(f"expected a feature vector of length {t.p}, got shape {x.shape}")
    return float(t.predict(x.reshape(1, -1))[0])
