"""Shared oracles and builders for the test suite."""

import numpy as np
import pytest

from permforest import Dataset, FeatureKind, NUMERIC


def child_sse(v: np.ndarray) -> float:
    """Sum of squared deviations from the mean, the split-scoring unit."""
    if len(v) == 0:
        return 0.0
    return float(np.sum((v - v.mean()) ** 2))


def exhaustive_best_split_sse(X, y, kinds) -> float:
    """Brute-force minimum total within-child SSE over every possible split.

    Numeric columns: every threshold between distinct values.  Categorical
    columns: every non-empty proper subset of the levels present.  This is
    the independent oracle the greedy splitter is checked against.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    best = np.inf
    for j in range(p):
        col = X[:, j]
        if kinds[j].is_categorical:
            levels = sorted(set(int(v) for v in col))
            if len(levels) < 2:
                continue
            for mask in range(1, 2 ** len(levels) - 1):
                left = {levels[b] for b in range(len(levels)) if (mask >> b) & 1}
                sel = np.array([int(v) in left for v in col])
                if sel.all() or not sel.any():
                    continue
                best = min(best, child_sse(y[sel]) + child_sse(y[~sel]))
        else:
            for t in np.unique(col)[:-1]:
                sel = col <= t
                best = min(best, child_sse(y[sel]) + child_sse(y[~sel]))
    return best


def root_split_sse(tree, d: Dataset) -> float:
    """Recompute the SSE of the fitted tree's root split with the oracle's
    arithmetic, over the rows the tree was trained on."""
    assert tree.feature[0] >= 0, "tree has no root split"
    rows = tree.trained_on_rows
    X = d.X[rows]
    y = d.y[rows]
    j = int(tree.feature[0])
    kind = int(tree.kind[0])
    if kind == 0:
        sel = X[:, j] <= tree.num[0]
    elif kind == 1:
        sel = np.array([(int(tree.mask[0]) >> int(v)) & 1 == 1 for v in X[:, j]])
    else:
        sel = X[:, j].astype(int) == int(tree.num[0])
    return child_sse(y[sel]) + child_sse(y[~sel])


def random_mixed_instance(rng, n=None, p=None):
    """Small random dataset with a mix of numeric and 3-level columns."""
    n = n if n is not None else int(rng.integers(4, 13))
    p = p if p is not None else int(rng.integers(1, 4))
    kinds = []
    cols = []
    for _ in range(p):
        if rng.random() < 0.4:
            kinds.append(FeatureKind(3))
            cols.append(rng.integers(0, 3, n).astype(float))
        else:
            kinds.append(NUMERIC)
            cols.append(rng.random(n))
    X = np.column_stack(cols)
    y = rng.standard_normal(n)
    return Dataset(X, y, tuple(kinds))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
