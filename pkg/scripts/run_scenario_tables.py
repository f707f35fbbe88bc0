"""Metrics tables for every scenario with the default algorithm set.

    python3 scripts/run_scenario_tables.py --N 200 --n 500 --out runs/tables
"""

import argparse
from pathlib import Path

from partialid.cli import main
from partialid.scenarios import Scenario


def parse():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/tables")
    p.add_argument("--scenarios", default=",".join(s.value for s in Scenario))
    return p.parse_args()


if __name__ == "__main__":
    a = parse()
    for sc in a.scenarios.split(","):
        print(f"# {sc}\n")
        code = main(["run", "--scenario", sc, "--N", str(a.N), "--n", str(a.n),
                     "--seed", str(a.seed), "--out", str(Path(a.out) / sc)])
        if code:
            raise SystemExit(code)
