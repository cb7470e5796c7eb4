"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Heavy simulations are shared across criteria through session fixtures.
Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
complete; the whole suite takes a few minutes on a laptop.
"""

import numpy as np
import pytest
from scipy import stats

import permforest as pf
from permforest import (
    Dataset,
    FeatureSubset,
    ForestConfig,
    Model1,
    Model2,
    NUMERIC,
    PermTestConfig,
    PermuteRows,
    PredictionMatrix,
    TreeConfig,
    add_one_p_value,
    bench_tree_config,
    desk_scale_config,
    draw_subsample,
    fit_forest,
    forest_mse,
    importance_all,
    permutation_normality,
    predict_matrix,
    run_power_experiment,
    subsample_diagnostics,
)

from conftest import exhaustive_best_split_sse, random_mixed_instance, root_split_sse

ALPHA = 0.05
MASTER_SEED = 0


def criterion(num: int, ok: bool, detail: str) -> None:
    print(f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="session")
def model1_desk_rates():
    """Shared by criteria 1 and 2: desk-scale Model 1 at sigma=10, targets
    x1 (signal) and x2 (null), 200 replicates."""
    cfg = desk_scale_config(
        Model1(beta=10.0, sigma=10.0),
        targets=[0, 1],
        grid=[10.0],
        replicates=200,
        master_seed=MASTER_SEED,
    )
    curve = run_power_experiment(cfg)
    return {pt.target.indices[0]: pt.rejection_rate for pt in curve.points}


def test_criterion_1_null_level(model1_desk_rates):
    rate = model1_desk_rates[1]
    criterion(1, 0.0 <= rate <= 0.10, f"null-feature rejection rate {rate:.3f} in [0, 0.10]")


def test_criterion_2_power(model1_desk_rates):
    power, level = model1_desk_rates[0], model1_desk_rates[1]
    ok = power >= 0.60 and (power - level) >= 0.40
    criterion(
        2,
        ok,
        f"signal rejection rate {power:.3f} >= 0.60 and margin over null "
        f"{power - level:.3f} >= 0.40",
    )


def test_criterion_3_power_monotonicity():
    cfg = desk_scale_config(
        Model1(beta=10.0, sigma=10.0), targets=[0], replicates=200, master_seed=MASTER_SEED
    )
    curve = run_power_experiment(cfg)
    rates = [pt.rejection_rate for pt in curve.points]  # grid order = increasing SNR
    inversions = sum(1 for a, b in zip(rates, rates[1:]) if b < a)
    rho = float(stats.spearmanr(np.arange(len(rates)), rates).statistic)
    ok = inversions <= 1 and rho >= 0.0
    criterion(
        3,
        ok,
        f"rates over the SNR grid {['%.2f' % r for r in rates]}: "
        f"{inversions} adjacent inversion(s) <= 1, spearman {rho:.2f} >= 0",
    )


def test_criterion_4_p_value_super_uniformity():
    cfg = desk_scale_config(
        Model1(beta=0.0, sigma=10.0),
        targets=[0],
        grid=[10.0],
        replicates=500,
        master_seed=MASTER_SEED,
    )
    curve = run_power_experiment(cfg)
    ps = np.sort(np.array(curve.points[0].p_values))
    n = len(ps)
    d_plus = float(np.max(np.arange(1, n + 1) / n - ps))
    crit = float(np.sqrt(np.log(1 / 0.01) / (2 * n)))
    criterion(
        4,
        d_plus < crit,
        f"global-null ECDF excess over uniform {d_plus:.4f} < one-sided KS 1% "
        f"critical value {crit:.4f} over {n} replicates",
    )


def test_criterion_5_permutation_normality():
    model = Model2(beta=10.0, sigma=10.0)
    fcfg = ForestConfig(n_trees=200, subsample_exponent=0.6, tree=bench_tree_config(model))
    targets = [FeatureSubset((2,)), FeatureSubset((4,))]  # x3 signal, x5 null
    reps = 50
    close = {2: 0, 4: 0}
    for ri in range(reps):
        rep_ss = np.random.SeedSequence([MASTER_SEED, 0, ri])
        data_ss, p_ss = rep_ss.spawn(2)
        data = pf.generate(model, 550, np.random.Generator(np.random.PCG64(data_ss)))
        train = data.take(np.arange(500))
        test = (data.X[500:], data.y[500:])
        state = p_ss.generate_state(2, dtype=np.uint64)
        pcfg = PermTestConfig(n_perm=1000, seed=(int(state[0]) << 64) | int(state[1]))
        report = importance_all(train, test, targets, PermuteRows(), fcfg, pcfg)
        for entry in report.entries:
            if permutation_normality(entry.result).ks_distance < 0.1:
                close[entry.subset.indices[0]] += 1
    frac_signal, frac_null = close[2] / reps, close[4] / reps
    ok = frac_signal >= 0.90 and frac_null >= 0.90
    criterion(
        5,
        ok,
        f"KS distance to matched normal < 0.1 in {frac_signal:.0%} (signal) and "
        f"{frac_null:.0%} (null) of {reps} replicates, both >= 90%",
    )


def test_criterion_6_subsample_exponent_breakdown():
    def null_rate(exponent):
        cfg = pf.SimConfig(
            model=Model2(beta=10.0, sigma=4.0),
            n=500,
            n_test=50,
            fcfg=ForestConfig(
                n_trees=100,
                subsample_exponent=exponent,
                tree=bench_tree_config(Model2(beta=10.0, sigma=4.0)),
            ),
            pcfg=PermTestConfig(n_perm=300),
            replicates=200,
            targets=(4,),  # x5 carries no signal
            grid=(4.0,),
            master_seed=MASTER_SEED,
        )
        return run_power_experiment(cfg).points[0].rejection_rate

    r_low, r_high = null_rate(0.6), null_rate(0.99)
    criterion(
        6,
        r_high - r_low >= 0.05,
        f"null rejection rate {r_high:.3f} at exponent 0.99 exceeds {r_low:.3f} "
        f"at 0.6 by {r_high - r_low:.3f} >= 0.05",
    )


def test_criterion_7_disjointness_monte_carlo():
    rng = np.random.default_rng(MASTER_SEED)
    pairs = 100_000
    results = []
    for n, k in ((100, 5), (1000, 31), (10, 2)):
        d = Dataset(np.zeros((n, 1)), np.zeros(n), (NUMERIC,))
        exact = subsample_diagnostics(n, k, 2).pair_disjoint_prob
        mark = np.zeros(n, dtype=bool)
        hits = 0
        for _ in range(pairs):
            a = draw_subsample(d, k, rng)
            b = draw_subsample(d, k, rng)
            mark[a] = True
            if not mark[b].any():
                hits += 1
            mark[a] = False
        freq = hits / pairs
        results.append((n, k, freq, exact))
    ok = all(abs(freq - exact) <= 0.01 for _, _, freq, exact in results)
    detail = ", ".join(
        f"(n={n},k={k}): |{freq:.4f}-{exact:.4f}|<=0.01" for n, k, freq, exact in results
    )
    criterion(7, ok, detail)


def test_criterion_8_split_oracle_equivalence():
    rng = np.random.default_rng(MASTER_SEED)
    checked = 0
    while checked < 100:
        d = random_mixed_instance(rng)
        tree = pf.fit_tree(
            d, np.arange(d.n), TreeConfig(mtry=d.p), np.random.default_rng(int(rng.integers(1 << 30)))
        )
        if tree.n_nodes == 1:
            continue  # nothing to split on; draw another instance
        oracle = exhaustive_best_split_sse(d.X, d.y, d.kinds)
        assert root_split_sse(tree, d) == oracle, f"instance {checked}: split not optimal"
        checked += 1
    criterion(8, True, "root split SSE equals the exhaustive minimum on 100 random instances")


def test_criterion_9_property_suite():
    rng = np.random.default_rng(MASTER_SEED)

    # tree-order exchangeability of the MSE statistic
    for _ in range(1000):
        b, m = int(rng.integers(2, 12)), int(rng.integers(1, 8))
        pm = PredictionMatrix(rng.standard_normal((b, m)), rng.standard_normal(m))
        permuted = PredictionMatrix(pm.values[rng.permutation(b)], pm.y)
        assert np.isclose(forest_mse(pm), forest_mse(permuted), rtol=1e-12, atol=1e-14)

    # bitwise reproducibility across thread counts
    for case in range(1000):
        r = np.random.default_rng(case)
        d = Dataset(r.random((20, 2)), r.standard_normal(20), (NUMERIC, NUMERIC))
        cfg = ForestConfig(n_trees=4, k_n=6, master_seed=case)
        testX, testY = r.random((3, 2)), r.random(3)
        seq = predict_matrix(fit_forest(d, cfg, n_threads=1), testX, testY, n_threads=1)
        par = predict_matrix(fit_forest(d, cfg, n_threads=4), testX, testY, n_threads=4)
        assert seq.values.tobytes() == par.values.tobytes()

    # scaled p-values are integers in [1, n_perm + 1]
    for _ in range(1000):
        n_perm = int(rng.integers(1, 300))
        p = add_one_p_value(float(rng.standard_normal()), rng.standard_normal(n_perm))
        scaled = p * (n_perm + 1)
        assert abs(scaled - round(scaled)) < 1e-9 and 1 <= round(scaled) <= n_perm + 1

    criterion(
        9,
        True,
        "mse exchangeability, thread-count reproducibility, and p-value "
        "integrality hold on 1000 randomized cases each",
    )
