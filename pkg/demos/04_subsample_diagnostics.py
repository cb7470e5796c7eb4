"""When is a tree collection close to pairwise independent?

Two trees are independent exactly when their subsamples share no rows.
The diagnostic reports the exact disjointness probability C(n-k,k)/C(n,k)
and the log-probability that all C(B,2) tree pairs are disjoint; strongly
negative values flag between-tree dependence.  A Monte Carlo check against
the exact number and a small level experiment at an aggressive subsampling
rate show why the flag matters.
"""

import numpy as np

from permforest import (
    Dataset,
    Model2,
    NUMERIC,
    SimConfig,
    ForestConfig,
    PermTestConfig,
    bench_tree_config,
    draw_subsample,
    run_power_experiment,
    subsample_diagnostics,
)

print("exact disjointness probabilities")
print("   n      k    B    P(disjoint pair)   log P(all pairs disjoint)")
for n, k, b in ((1000, 31, 50), (2000, 96, 125), (500, 42, 100), (500, 470, 100)):
    d = subsample_diagnostics(n, k, b)
    flag = "  <- dependence warning" if d.dependence_warning else ""
    print(
        f"{n:6d} {k:5d} {b:5d}   {d.pair_disjoint_prob:14.6g}   "
        f"{d.log_all_pairs_disjoint:14.4g}{flag}"
    )

print()
print("Monte Carlo check of the pair probability at n=100, k=5")
rng = np.random.default_rng(0)
host = Dataset(np.zeros((100, 1)), np.zeros(100), (NUMERIC,))
hits = 0
pairs = 20000
for _ in range(pairs):
    a = draw_subsample(host, 5, rng)
    b = draw_subsample(host, 5, rng)
    hits += len(np.intersect1d(a, b)) == 0
exact = subsample_diagnostics(100, 5, 2).pair_disjoint_prob
print(f"empirical {hits / pairs:.4f} vs exact {exact:.4f}")

print()
print("null rejection rate as subsamples grow toward the full sample")
print("(20 replicates per point; the rate drifts above the nominal 5% once")
print("subsamples overlap heavily)")
for exponent in (0.6, 0.99):
    cfg = SimConfig(
        model=Model2(beta=10.0, sigma=4.0),
        n=500,
        n_test=50,
        fcfg=ForestConfig(
            n_trees=100,
            subsample_exponent=exponent,
            tree=bench_tree_config(Model2(beta=10.0, sigma=4.0)),
        ),
        pcfg=PermTestConfig(n_perm=300),
        replicates=20,
        targets=(4,),  # x5 carries no signal
        grid=(4.0,),
        master_seed=2,
    )
    rate = run_power_experiment(cfg).points[0].rejection_rate
    k = round(500**exponent)
    print(f"exponent {exponent:.2f} (k={k:3d}): null rejection rate {rate:.2f}")
