"""Drive the command-line interface against a CSV on disk.

Writes a dataset with one continuous and one categorical signal feature to
CSV, then runs the `test`, `importance`, and `diagnose` subcommands the way
a shell user would, collecting JSON reports and an SVG under ./cli_out.
"""

import json
import pathlib
import subprocess
import sys

import numpy as np

from permforest import Model1, generate, write_csv

out = pathlib.Path("cli_out")
out.mkdir(exist_ok=True)

data = generate(Model1(beta=10.0, sigma=5.0), 400, np.random.default_rng(9))
csv_path = out / "swallows.csv"
write_csv(data, csv_path)
print(f"wrote {csv_path} ({data.n} rows, {data.p} features + response)")


def cli(*args):
    cmd = [sys.executable, "-m", "permforest.cli", *args]
    print("\n$", " ".join(str(a) for a in cmd[2:]))
    res = subprocess.run(cmd, capture_output=True, text=True)
    print(res.stdout.strip())
    if res.returncode != 0:
        print(res.stderr.strip())
        raise SystemExit(res.returncode)


cli(
    "test", "--data", csv_path, "--response", "y", "--features", "x1",
    "--strategy", "permute", "--n-perm", "200", "--b-trees", "60",
    "--seed", "1", "--out", out, "--svg",
)
cli(
    "importance", "--data", csv_path, "--response", "y",
    "--features", "x1,x2,x6", "--n-perm", "200", "--b-trees", "60",
    "--seed", "1", "--out", out,
)
cli("diagnose", "--n", "340", "--k", "33", "--b", "60", "--out", out)

report = json.loads((out / "test_report.json").read_text())
print("\ntest_report.json -> p =", report["result"]["p_value"])
print("files under", out, ":", sorted(p.name for p in out.iterdir()))
