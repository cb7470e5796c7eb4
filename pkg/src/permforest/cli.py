"""Command-line front end.

Subcommands: ``test`` (one feature subset), ``importance`` (every feature in
turn), ``overall`` (all features at once), ``simulate`` (power/level
experiments on the synthetic models), ``diagnose`` (subsample disjointness
probabilities).  Every command writes a versioned JSON report under the
``--out`` directory; runs with identical flags and seeds produce
byte-identical reports, and every number printed to the console also
appears in the report.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .dataset import (
    Dataset,
    Exclude,
    FeatureSubset,
    KnockoffColumns,
    PermuteRows,
    load_csv,
    split_indices,
)
from .forest import ForestConfig, subsample_diagnostics
from .permtest import PermTestConfig, importance_all, overall_test, run_test
from .simbench import (
    Model1,
    Model2,
    Model3,
    desk_scale_config,
    full_scale_config,
    run_power_experiment,
    write_power_curve_csv,
)
from .svgplot import render_histogram
from .tree import TreeConfig

SCHEMA_VERSION = 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permforest",
        description="Permutation significance tests for subsampled random forests",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_forest_flags(p):
        p.add_argument("--b-trees", type=int, default=125, help="trees per forest")
        p.add_argument("--subsample-exponent", type=float, default=0.6)
        p.add_argument("--k-n", type=int, default=None, help="explicit subsample size")
        p.add_argument("--mtry", type=int, default=None)
        p.add_argument("--min-node", type=int, default=1)
        p.add_argument("--max-depth", type=int, default=None)
        p.add_argument("--gamma", type=float, default=0.0, help="min split fraction per child")
        p.add_argument("--n-perm", type=int, default=500)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=".", help="directory for report files")
        p.add_argument("--svg", action="store_true", help="emit histogram SVGs")
        p.add_argument("--write-deltas", action="store_true", help="emit permutation deltas CSV")

    def add_data_flags(p):
        p.add_argument("--data", required=True, help="CSV file with a header row")
        p.add_argument("--response", required=True, help="response column name")
        p.add_argument("--test-fraction", type=float, default=0.15)
        p.add_argument(
            "--strategy",
            choices=("permute", "exclude", "knockoff"),
            default="permute",
            help="how to mute the tested features (default: row permutation)",
        )
        p.add_argument("--knockoff-file", default=None, help="CSV of knockoff columns")

    p_test = sub.add_parser("test", help="test one feature subset jointly")
    add_data_flags(p_test)
    p_test.add_argument(
        "--features", required=True, help="comma-separated feature column names"
    )
    add_forest_flags(p_test)

    p_imp = sub.add_parser("importance", help="marginal test for each feature")
    add_data_flags(p_imp)
    p_imp.add_argument(
        "--features", default=None, help="comma-separated names (default: all features)"
    )
    add_forest_flags(p_imp)

    p_all = sub.add_parser("overall", help="any-signal test over all features")
    add_data_flags(p_all)
    add_forest_flags(p_all)

    p_sim = sub.add_parser("simulate", help="run a level/power experiment")
    p_sim.add_argument("--model", choices=("model1", "model2", "model3"), required=True)
    p_sim.add_argument(
        "--target", action="append", required=True, help="feature name, repeatable"
    )
    scale = p_sim.add_mutually_exclusive_group()
    scale.add_argument("--desk-scale", action="store_true", default=True)
    scale.add_argument("--full-scale", dest="desk_scale", action="store_false")
    p_sim.add_argument("--beta", type=float, default=10.0)
    p_sim.add_argument("--replicates", type=int, default=None)
    p_sim.add_argument("--n-perm", type=int, default=None)
    p_sim.add_argument("--grid", default=None, help="comma-separated grid values")
    p_sim.add_argument("--b-trees", type=int, default=None)
    p_sim.add_argument("--subsample-exponent", type=float, default=None)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", default=".")

    p_diag = sub.add_parser("diagnose", help="subsample disjointness diagnostics")
    p_diag.add_argument("--n", type=int, required=True)
    p_diag.add_argument("--k", type=int, required=True)
    p_diag.add_argument("--b", "--B", dest="b", type=int, required=True)
    p_diag.add_argument("--out", default=".")
    return parser


def _write_report(out_dir: str, name: str, report: dict) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report, sort_keys=True, indent=2))
        fh.write("\n")
    return path


def _write_deltas_csv(path, deltas) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta"])
        for v in deltas:
            writer.writerow([repr(float(v))])


def _forest_config(args) -> ForestConfig:
    tree = TreeConfig(
        mtry=args.mtry,
        min_node_size=args.min_node,
        max_depth=args.max_depth,
        min_split_fraction=args.gamma,
    )
    return ForestConfig(
        n_trees=args.b_trees,
        subsample_exponent=args.subsample_exponent,
        k_n=args.k_n,
        tree=tree,
        master_seed=args.seed,
    )


def _prepare_data(args):
    data = load_csv(args.data, args.response)
    train_idx, test_idx = split_indices(data.n, args.test_fraction, args.seed)
    train = data.take(train_idx)
    test = data.take(test_idx)
    return data, train, test, train_idx


def _strategy(args, data, train_idx, subset):
    if args.strategy == "permute":
        return PermuteRows()
    if args.strategy == "exclude":
        return Exclude()
    if args.knockoff_file is None:
        raise ValueError("--strategy knockoff requires --knockoff-file")
    with open(args.knockoff_file, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        rows = [[float(c) for c in row] for row in reader if row]
    cols = np.asarray(rows)
    if cols.shape[0] != data.n:
        raise ValueError(
            f"knockoff file has {cols.shape[0]} rows, dataset has {data.n}"
        )
    if cols.shape[1] != len(subset.indices):
        raise ValueError(
            f"knockoff file has {cols.shape[1]} columns for {len(subset.indices)} features"
        )
    return KnockoffColumns(cols[train_idx])


def _feature_subset(train: Dataset, csv_names: str) -> FeatureSubset:
    names = [s.strip() for s in csv_names.split(",") if s.strip()]
    if not names:
        raise ValueError("no feature names given")
    return FeatureSubset(tuple(train.column_index(n) for n in names))


def _result_payload(result, names) -> dict:
    payload = result.as_dict()
    payload["features"] = names
    return payload


def _emit_single(result, names, args, stem: str):
    label = "+".join(names)
    print(f"feature={label} p={result.p_value!r} z={result.z_score!r}")
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": stem,
        "result": _result_payload(result, names),
    }
    path = _write_report(args.out, f"{stem}_report.json", report)
    if args.write_deltas:
        _write_deltas_csv(os.path.join(args.out, f"{stem}_deltas.csv"), result.deltas_permuted)
    if args.svg:
        render_histogram(
            result.deltas_permuted,
            result.delta_observed,
            os.path.join(args.out, f"{stem}_histogram.svg"),
        )
    return path


def cmd_test(args) -> int:
    data, train, test, train_idx = _prepare_data(args)
    subset = _feature_subset(train, args.features)
    strategy = _strategy(args, data, train_idx, subset)
    result = run_test(
        train, (test.X, test.y), subset, strategy, _forest_config(args),
        PermTestConfig(n_perm=args.n_perm, seed=args.seed),
    )
    _emit_single(result, [train.names[i] for i in subset.indices], args, "test")
    return 0


def cmd_overall(args) -> int:
    data, train, test, train_idx = _prepare_data(args)
    subset = FeatureSubset.all_columns(train)
    strategy = _strategy(args, data, train_idx, subset)
    result = overall_test(
        train, (test.X, test.y), strategy, _forest_config(args),
        PermTestConfig(n_perm=args.n_perm, seed=args.seed),
    )
    _emit_single(result, list(train.names), args, "overall")
    return 0


def cmd_importance(args) -> int:
    data, train, test, train_idx = _prepare_data(args)
    if args.features:
        subsets = [
            FeatureSubset((train.column_index(n.strip()),))
            for n in args.features.split(",")
            if n.strip()
        ]
    else:
        subsets = [FeatureSubset((j,)) for j in range(train.p)]
    if args.strategy == "knockoff" and len(subsets) > 1:
        raise ValueError("knockoff muting supports a single feature subset per run")
    strategy = (
        _strategy(args, data, train_idx, subsets[0])
        if args.strategy == "knockoff"
        else (PermuteRows() if args.strategy == "permute" else Exclude())
    )
    report = importance_all(
        train, (test.X, test.y), subsets, strategy, _forest_config(args),
        PermTestConfig(n_perm=args.n_perm, seed=args.seed),
    )
    entries = []
    for entry in report.entries:
        names = [train.names[i] for i in entry.subset.indices]
        label = "+".join(names)
        print(
            f"feature={label} p={entry.result.p_value!r} z={entry.result.z_score!r}"
        )
        entries.append(_result_payload(entry.result, names))
        if args.svg:
            render_histogram(
                entry.result.deltas_permuted,
                entry.result.delta_observed,
                os.path.join(args.out, f"importance_{label}_histogram.svg"),
            )
        if args.write_deltas:
            _write_deltas_csv(
                os.path.join(args.out, f"importance_{label}_deltas.csv"),
                entry.result.deltas_permuted,
            )
    _write_report(
        args.out,
        "importance_report.json",
        {"schema_version": SCHEMA_VERSION, "command": "importance", "entries": entries},
    )
    return 0


_SIM_MODELS = {
    "model1": lambda beta: Model1(beta=beta, sigma=10.0),
    "model2": lambda beta: Model2(beta=beta, sigma=10.0),
    "model3": lambda beta: Model3(beta=beta),
}


def _target_index(name: str, p: int) -> int:
    name = name.strip().lower()
    if not name.startswith("x"):
        raise ValueError(f"target {name!r}: expected a column name like x3")
    try:
        idx = int(name[1:]) - 1
    except ValueError:
        raise ValueError(f"target {name!r}: expected a column name like x3") from None
    if not 0 <= idx < p:
        raise ValueError(f"target {name!r} out of range for p={p}")
    return idx


def cmd_simulate(args) -> int:
    model = _SIM_MODELS[args.model](args.beta)
    p = 500 if args.model == "model3" else 10
    targets = [FeatureSubset((_target_index(t, p),)) for t in args.target]
    make = desk_scale_config if args.desk_scale else full_scale_config
    cfg = make(model, targets, master_seed=args.seed)
    if args.grid is not None:
        cfg = replace(cfg, grid=tuple(float(v) for v in args.grid.split(",")))
    if args.replicates is not None:
        cfg = replace(cfg, replicates=args.replicates)
    if args.n_perm is not None:
        cfg = replace(cfg, pcfg=replace(cfg.pcfg, n_perm=args.n_perm))
    if args.b_trees is not None:
        cfg = replace(cfg, fcfg=replace(cfg.fcfg, n_trees=args.b_trees))
    if args.subsample_exponent is not None:
        cfg = replace(cfg, fcfg=replace(cfg.fcfg, subsample_exponent=args.subsample_exponent))
    curve = run_power_experiment(cfg)
    os.makedirs(args.out, exist_ok=True)
    write_power_curve_csv(curve, os.path.join(args.out, "power_curve.csv"))
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "model": args.model,
        "beta": args.beta,
        "desk_scale": args.desk_scale,
        "n": cfg.n,
        "n_test": cfg.n_test,
        "n_trees": cfg.fcfg.n_trees,
        "subsample_exponent": cfg.fcfg.subsample_exponent,
        "n_perm": cfg.pcfg.n_perm,
        "replicates": cfg.replicates,
        "grid": list(cfg.grid),
        "targets": [list(t.indices) for t in cfg.targets],
        "master_seed": cfg.master_seed,
        "points": [
            {
                "grid_value": pt.param_value,
                "target": "+".join(f"x{i + 1}" for i in pt.target.indices),
                "rejection_rate": pt.rejection_rate,
                "mean_p": pt.mean_p,
                "mean_z": pt.mean_z,
                "replicates": pt.replicates,
            }
            for pt in curve.points
        ],
    }
    _write_report(args.out, "simulate_manifest.json", manifest)
    for pt in curve.points:
        label = "+".join(f"x{i + 1}" for i in pt.target.indices)
        print(
            f"grid={pt.param_value!r} target={label} reject_rate={pt.rejection_rate!r} "
            f"mean_p={pt.mean_p!r} mean_z={pt.mean_z!r}"
        )
    return 0


def cmd_diagnose(args) -> int:
    diag = subsample_diagnostics(args.n, args.k, args.b)
    print(
        f"pair_disjoint_prob={diag.pair_disjoint_prob!r} "
        f"log_all_pairs_disjoint={diag.log_all_pairs_disjoint!r} "
        f"dependence_warning={diag.dependence_warning}"
    )
    _write_report(
        args.out,
        "diagnose_report.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": "diagnose",
            "n": args.n,
            "k": args.k,
            "b": args.b,
            "result": diag.as_dict(),
        },
    )
    return 0


_COMMANDS = {
    "test": cmd_test,
    "importance": cmd_importance,
    "overall": cmd_overall,
    "simulate": cmd_simulate,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
