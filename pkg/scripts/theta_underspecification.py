"""How underspecifying theta relates to invalid entropy bounds.

Runs the underspecifyTheta variants on BinaryEntropyConf for several seeds,
then reports the raw point-biserial correlation between the invalid flag and
thetaerror = H(U) - theta, and a logistic fit of the flag on thetaerror and
H(U). The raw correlation is confounded: invalid bounds need a tiny theta,
which mostly happens when H(U) itself is small.

    python3 scripts/theta_underspecification.py --seeds 0,1,2,3
"""

import argparse
import contextlib
import csv
import io
from pathlib import Path

import numpy as np
from scipy import optimize, stats

from partialid.cli import load_run_outcomes, main
from partialid.metrics import Verdict

ALGOS = "ATE_entropybounds-underspecifyTheta,PNS_entropybounds-underspecifyTheta"


def collect(out: Path):
    with open(out / "bounds.csv", newline="") as fh:
        rows = {(int(r["j"]), r["query"]): r for r in csv.DictReader(fh)}
    data = []
    for q, runs in load_run_outcomes(out).items():
        for r in runs:
            if r.verdict is Verdict.FAILED:
                continue
            row = rows[(r.j, q.value)]
            err, theta = float(row["thetaerror"]), float(row["theta"])
            data.append((r.verdict is Verdict.INVALID, err, theta + err, theta))
    return np.array(data, dtype=float)


def logistic(y, X):
    X = np.column_stack([np.ones(len(y)), X])
    nll = lambda b: np.sum(np.logaddexp(0.0, X @ b) - y * (X @ b))
    return optimize.minimize(nll, np.zeros(X.shape[1]), method="BFGS").x


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=400)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seeds", default="0,1,2,3")
    p.add_argument("--out", default="runs/underspecify")
    a = p.parse_args()

    parts = []
    for s in a.seeds.split(","):
        out = Path(a.out) / f"seed{s}"
        with contextlib.redirect_stdout(io.StringIO()):
            code = main(["run", "--scenario", "BinaryEntropyConf", "--N", str(a.N), "--n", str(a.n),
                         "--seed", s, "--algos", ALGOS, "--out", str(out)])
        if code:
            raise SystemExit(code)
        d = collect(out)
        r, pv = stats.pointbiserialr(d[:, 0], d[:, 1])
        print(f"seed {s}: {int(d[:, 0].sum())}/{len(d)} invalid, r = {r:+.3f} (p = {pv:.3f})")
        parts.append(d)

    d = np.vstack(parts)
    inv = d[:, 0].astype(bool)
    b = logistic(d[:, 0], d[:, 1:3])
    print(f"pooled: {inv.sum()}/{len(d)} invalid")
    print(f"logit(invalid) = {b[0]:+.2f} {b[1]:+.2f}*thetaerror {b[2]:+.2f}*H(U)")
    if inv.any():
        print(f"theta among invalid runs: max {d[inv, 3].max():.4f}, median {np.median(d[inv, 3]):.4f}")
