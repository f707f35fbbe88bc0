"""ATE net width per confounder-entropy level: entropy bounds with the true
theta against Manski, on BinaryEntropyConf.

    python3 scripts/entropy_level_sweep.py --N 400
"""

import argparse
import contextlib
import csv
import io
from pathlib import Path

from partialid.cli import main
from partialid.scenarios import ENTROPY_LEVELS

ALGOS = ("ATE_manski", "ATE_entropybounds-trueTheta", "ATE_entropybounds-0.80")


def net_widths(out: Path):
    with open(out / "metrics.csv", newline="") as fh:
        return {r["algorithm"]: r["net_bound_width"] for r in csv.DictReader(fh)}


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=400, help="total sims; each level gets N/10")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/entropy_levels")
    a = p.parse_args()

    print("| H(U) | " + " | ".join(ALGOS) + " |")
    print("|---:|" + "---:|" * len(ALGOS))
    for h in ENTROPY_LEVELS:
        out = Path(a.out) / f"{h:.2f}"
        args = ["run", "--scenario", "BinaryEntropyConf", "--N", str(a.N), "--n", str(a.n), "--seed", str(a.seed),
                "--level", str(h), "--algos", ",".join(ALGOS), "--out", str(out)]
        # the CLI prints its own table; keep only ours
        with contextlib.redirect_stdout(io.StringIO()):
            code = main(args)
        if code:
            raise SystemExit(code)
        w = net_widths(out)
        print(f"| {h:.2f} | " + " | ".join(w.get(x, "-") for x in ALGOS) + " |")
