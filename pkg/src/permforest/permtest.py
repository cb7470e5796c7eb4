"""Permutation significance tests over pairs of forests.

The procedure: fit one forest on the original training data and one on a
muted copy in which the candidate features were made uninformative, record
each tree's predictions at a fixed test set, and compare the two test-set
MSEs.  The null distribution is built by repeatedly reassigning the pooled
2B prediction rows into two pseudo-forests of B trees each and recomputing
the MSE difference, so no variance or covariance estimation is ever needed
and the cost is independent of the test-set size.  The one-sided alternative
is fixed: muting informative features should raise the MSE.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .dataset import (
    Dataset,
    Exclude,
    FeatureSubset,
    MutingStrategy,
    mute_features,
)
from .forest import (
    ForestConfig,
    PredictionMatrix,
    SubsampleDiagnostics,
    fit_forest,
    forest_mse,
    predict_matrix,
    subsample_diagnostics,
    subsample_size,
)


@dataclass(frozen=True)
class PermTestConfig:
    """Permutation-loop settings: number of reshuffles and the master seed."""

    n_perm: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.n_perm < 1:
            raise ValueError("n_perm must be at least 1")


@dataclass(frozen=True, eq=False)
class PermTestResult:
    """Outcome of one muting test.

    delta_observed
        MSE of the muted forest minus MSE of the original forest.
    deltas_permuted
        The n_perm reshuffled differences forming the null distribution.
    p_value
        Add-one-corrected upper tail: (1 + #{delta_observed <= delta_j})
        / (n_perm + 1), never exactly zero.
    z_score
        Standardized distance of the observed difference from the center of
        the permutation distribution (sample sd, n-1 denominator); reported
        as 0 with ``degenerate`` set when the distribution has no spread.
    """

    delta_observed: float
    deltas_permuted: np.ndarray
    p_value: float
    z_score: float
    degenerate: bool
    diagnostics: SubsampleDiagnostics
    config: dict

    def as_dict(self) -> dict:
        return {
            "delta_observed": self.delta_observed,
            "p_value": self.p_value,
            "z_score": self.z_score,
            "degenerate": self.degenerate,
            "n_perm": len(self.deltas_permuted),
            "diagnostics": self.diagnostics.as_dict(),
            "config": self.config,
        }


def selection_masks(rng: np.random.Generator, n_perm: int, n_pool: int) -> np.ndarray:
    """(n_perm, n_pool) boolean masks, each selecting exactly half the pool
    uniformly at random without replacement."""
    if n_pool % 2 != 0:
        raise ValueError("pool size must be even")
    half = n_pool // 2
    order = np.argsort(rng.random((n_perm, n_pool)), axis=1)
    masks = np.zeros((n_perm, n_pool), dtype=bool)
    np.put_along_axis(masks, order[:, :half], True, axis=1)
    return masks


def permutation_deltas(pooled: np.ndarray, y: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """MSE(unselected half) - MSE(selected half) for each mask.

    ``pooled`` stacks the original forest's prediction rows on top of the
    muted forest's; each mask picks the rows of a pseudo-original forest.
    Each permutation fills its own output slot, so results do not depend on
    evaluation order.
    """
    n_pool, n_test = pooled.shape
    half = n_pool // 2
    col_tot = pooled.sum(axis=0)
    sums_sel = masks.astype(np.float64) @ pooled
    mean_sel = sums_sel / half
    mean_rest = (col_tot - sums_sel) / half
    mse_sel = ((mean_sel - y) ** 2).mean(axis=1)
    mse_rest = ((mean_rest - y) ** 2).mean(axis=1)
    return mse_rest - mse_sel


def add_one_p_value(delta_observed: float, deltas: np.ndarray) -> float:
    """Upper-tail p-value with the add-one correction; ties count as exceedances."""
    n_perm = len(deltas)
    return (1 + int(np.count_nonzero(delta_observed <= deltas))) / (n_perm + 1)


def _as_test_arrays(test):
    if isinstance(test, Dataset):
        return test.X, test.y
    X, y = test
    return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)


def _summarize(
    original: PredictionMatrix,
    muted: PredictionMatrix,
    perm_rng: np.random.Generator,
    pcfg: PermTestConfig,
    diagnostics: SubsampleDiagnostics,
    config: dict,
) -> PermTestResult:
    if muted.values.shape != original.values.shape:
        raise ValueError("original and muted prediction matrices must share a shape")
    delta_observed = forest_mse(muted) - forest_mse(original)
    pooled = np.vstack([original.values, muted.values])
    masks = selection_masks(perm_rng, pcfg.n_perm, pooled.shape[0])
    deltas = permutation_deltas(pooled, original.y, masks)
    p = add_one_p_value(delta_observed, deltas)
    sd = float(deltas.std(ddof=1)) if len(deltas) > 1 else 0.0
    degenerate = sd == 0.0
    z = 0.0 if degenerate else float((delta_observed - deltas.mean()) / sd)
    deltas.flags.writeable = False
    return PermTestResult(
        float(delta_observed), deltas, float(p), z, degenerate, diagnostics, config
    )


def _config_snapshot(train, test_y, s, strategy, fcfg, pcfg, k):
    return {
        "n_train": train.n,
        "n_test": int(len(test_y)),
        "features": list(s.indices),
        "feature_names": [train.names[i] for i in s.indices],
        "strategy": type(strategy).__name__,
        "n_trees": fcfg.n_trees,
        "k_n": k,
        "subsample_exponent": fcfg.subsample_exponent,
        "mtry": fcfg.tree.resolve_mtry(train.p),
        "min_node_size": fcfg.tree.min_node_size,
        "max_depth": fcfg.tree.max_depth,
        "min_split_fraction": fcfg.tree.min_split_fraction,
        "n_perm": pcfg.n_perm,
        "seed": pcfg.seed,
    }


def run_test(
    train: Dataset,
    test,
    s: FeatureSubset,
    strategy: MutingStrategy,
    fcfg: ForestConfig,
    pcfg: PermTestConfig,
    original: Optional[PredictionMatrix] = None,
) -> PermTestResult:
    """Test whether the features in ``s`` carry predictive signal.

    Fits the original-data and muted-data forests with independent seed
    streams spawned from ``pcfg.seed`` (2B trees total), then runs the
    permutation loop over the pooled prediction rows.  ``test`` is a
    ``(X, y)`` pair or a Dataset.  Passing ``original`` skips refitting the
    original forest; the result is identical to an independent call whose
    original forest happened to produce that matrix.
    """
    s.validate_for(train)
    test_X, test_y = _as_test_arrays(test)
    if len(test_y) < 1:
        raise ValueError("need at least one test point")
    root = np.random.SeedSequence(pcfg.seed)
    orig_ss, mut_ss, pi_ss, perm_ss = root.spawn(4)
    if original is None:
        original = predict_matrix(fit_forest(train, fcfg, seed_seq=orig_ss), test_X, test_y)
    muted_train = mute_features(
        train, s, strategy, rng=np.random.Generator(np.random.PCG64(pi_ss))
    )
    if isinstance(strategy, Exclude):
        # the muted forest lives in the reduced column space
        keep = [j for j in range(train.p) if j not in set(s.indices)]
        muted_test_X = np.ascontiguousarray(np.asarray(test_X, dtype=np.float64)[:, keep])
    else:
        muted_test_X = test_X
    muted = predict_matrix(fit_forest(muted_train, fcfg, seed_seq=mut_ss), muted_test_X, test_y)
    k = subsample_size(fcfg, train.n)
    diag = subsample_diagnostics(train.n, k, fcfg.n_trees)
    config = _config_snapshot(train, test_y, s, strategy, fcfg, pcfg, k)
    return _summarize(
        original, muted, np.random.Generator(np.random.PCG64(perm_ss)), pcfg, diag, config
    )


@dataclass(frozen=True, eq=False)
class ImportanceEntry:
    subset: FeatureSubset
    result: PermTestResult

    @property
    def feature_index(self) -> int:
        return self.subset.indices[0]


@dataclass(frozen=True, eq=False)
class ImportanceReport:
    """Per-feature test results, ordered by z-score descending."""

    entries: tuple

    def as_dict(self) -> dict:
        return {
            "entries": [
                {"features": list(e.subset.indices), **e.result.as_dict()}
                for e in self.entries
            ]
        }


def importance_all(
    train: Dataset,
    test,
    features: Sequence[FeatureSubset],
    strategy: MutingStrategy,
    fcfg: ForestConfig,
    pcfg: PermTestConfig,
) -> ImportanceReport:
    """Marginal significance test for each feature subset in turn.

    The original-data forest is fit once and reused for every subset; only
    the muted forest and the permutation loop are per-feature.  Each subset
    gets its own seed derived from ``pcfg.seed``, so entry i equals
    ``run_test`` called with that derived seed and the shared original
    prediction matrix.
    """
    features = list(features)
    if not features:
        raise ValueError("need at least one feature subset")
    seen = set()
    for s in features:
        s.validate_for(train)
        if s.indices in seen:
            warnings.warn(f"duplicate feature subset {s.indices} in importance request")
        seen.add(s.indices)
    test_X, test_y = _as_test_arrays(test)
    root = np.random.SeedSequence(pcfg.seed)
    orig_ss = root.spawn(1)[0]
    original = predict_matrix(fit_forest(train, fcfg, seed_seq=orig_ss), test_X, test_y)
    feature_seeds = root.generate_state(2 * len(features), dtype=np.uint64)
    entries = []
    for i, s in enumerate(features):
        sub_seed = int(feature_seeds[2 * i]) ^ (int(feature_seeds[2 * i + 1]) << 1)
        sub_pcfg = replace(pcfg, seed=sub_seed)
        result = run_test(train, (test_X, test_y), s, strategy, fcfg, sub_pcfg, original=original)
        entries.append(ImportanceEntry(s, result))
    entries.sort(key=lambda e: e.result.z_score, reverse=True)
    return ImportanceReport(tuple(entries))


def overall_test(
    train: Dataset,
    test,
    strategy: MutingStrategy,
    fcfg: ForestConfig,
    pcfg: PermTestConfig,
) -> PermTestResult:
    """Any-signal test: mute every feature column at once.

    With row permutation this applies a single shared permutation to the
    whole design matrix, analogous to an overall F-test.
    """
    return run_test(train, test, FeatureSubset.all_columns(train), strategy, fcfg, pcfg)


@dataclass(frozen=True)
class NormalitySummary:
    mean: float
    sd: float
    skewness: float
    excess_kurtosis: float
    ks_distance: float
    degenerate: bool

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "sd": self.sd,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
            "ks_distance": self.ks_distance,
            "degenerate": self.degenerate,
        }


def permutation_normality(result: PermTestResult) -> NormalitySummary:
    """Moments of the permutation distribution and its KS distance to the
    normal with matched mean and sd.  Needs at least 30 permutations."""
    deltas = result.deltas_permuted
    if len(deltas) < 30:
        raise ValueError("normality summary needs at least 30 permutations")
    mean = float(deltas.mean())
    sd = float(deltas.std(ddof=1))
    if sd == 0.0:
        return NormalitySummary(mean, 0.0, 0.0, 0.0, 0.0, True)
    centered = deltas - mean
    m2 = float(np.mean(centered**2))
    skew = float(np.mean(centered**3) / m2**1.5)
    kurt = float(np.mean(centered**4) / m2**2 - 3.0)
    ks = float(stats.kstest(deltas, "norm", args=(mean, sd)).statistic)
    return NormalitySummary(mean, sd, skew, kurt, ks, False)
