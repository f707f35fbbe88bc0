"""Command line front end: ``simulate``, ``bound``, ``report`` and ``run``.

Settings come from an optional JSON config (``--config``); any flag given on
the command line overrides the config value of the same name. Exit codes: 0
success, 2 invalid specification, 3 missing or unwritable files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional

from .algorithms import (
    BINNED,
    DISCRETE,
    AlgorithmSpec,
    SimContext,
    SpecError,
    check_algorithms,
    default_algorithms,
    run_algorithm,
)
from .core import BoundOutcome, Failure, Interval, Query, binary_entropy, read_dataset_csv, write_dataset_csv
from .em_bounds import EmConfig
from .metrics import FEATURE_COLUMNS, METRIC_COLUMNS, RunOutcome, best_algorithm, evaluate, features
from .scenarios import Scenario, SimulationConfig, binarize, generate, level_indices, write_truth_json

EXIT_OK, EXIT_SPEC, EXIT_IO = 0, 2, 3

BOUNDS_COLUMNS = ("j", "algorithm", "query", "lower", "upper", "status", "reason", "theta", "thetaerror", "runtime")
RUNTIME_COLUMNS = ("runtime",)


class IoProblem(RuntimeError):
    pass


@dataclass
class RunSpec:
    scenario: str = "BinaryConf"
    N: int = 2000
    n: int = 500
    seed: int = 0
    algos: List[str] = field(default_factory=list)
    theta: List[str] = field(default_factory=list)
    level: Optional[float] = None
    binned: bool = False
    out: str = "out"
    jobs: int = 1
    em: Dict[str, float] = field(default_factory=dict)

    def validate(self) -> "RunSpec":
        try:
            sc = Scenario(self.scenario)
        except ValueError:
            raise SpecError(f"unknown scenario {self.scenario!r}; choose from {[s.value for s in Scenario]}") from None
        if self.N < 1 or self.n < 2:
            raise SpecError("need N >= 1 and n >= 2")
        if self.jobs < 1:
            raise SpecError("--jobs must be at least 1")
        if self.level is not None:
            if sc is not Scenario.BINARY_ENTROPY_CONF:
                raise SpecError("--level only applies to BinaryEntropyConf")
            try:
                level_indices(self.N, self.level)
            except ValueError as exc:
                raise SpecError(str(exc)) from None
        try:
            self.em_config()
        except (TypeError, ValueError) as exc:
            raise SpecError(f"bad em settings: {exc}") from None
        return self

    @property
    def scenario_enum(self) -> Scenario:
        return Scenario(self.scenario)

    def sim_config(self) -> SimulationConfig:
        return SimulationConfig(self.scenario_enum, self.N, self.n, self.seed)

    def indices(self) -> List[int]:
        if self.level is not None:
            return level_indices(self.N, self.level)
        return list(range(1, self.N + 1))

    def em_config(self) -> EmConfig:
        return EmConfig(**self.em)

    def algorithm_names(self, scenario: Optional[Scenario] = None) -> List[str]:
        names = list(self.algos) or default_algorithms(scenario or self.scenario_enum)
        expanded = []
        for name in names:
            base = name[: -len(BINNED)] if name.endswith(BINNED) else name
            suffix = name[len(base) :]
            if base.endswith("_entropybounds") and self.theta:
                expanded.extend(f"{base}-{_theta_label(t)}{suffix}" for t in self.theta)
            else:
                expanded.append(name)
        if self.binned:
            out = []
            for name in expanded:
                try:
                    method = AlgorithmSpec.parse(name).method
                except SpecError:
                    method = None
                out.append(name + BINNED if method in DISCRETE and not name.endswith(BINNED) else name)
            expanded = out
        return list(dict.fromkeys(expanded))


def _theta_label(t) -> str:
    try:
        return f"{float(t):.2f}"
    except ValueError:
        return str(t)


# -- helpers ------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoProblem(f"cannot write {path}: {exc}") from exc


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise IoProblem(f"missing file {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise IoProblem(f"cannot read {path}: {exc}") from exc


def _dataset_name(j: int) -> str:
    return f"sim_{j:04d}"


# -- simulate -----------------------------------------------------------------


def cmd_simulate(spec: RunSpec) -> dict:
    out = Path(spec.out)
    cfg = spec.sim_config()
    sims = []
    for j in spec.indices():
        rec = generate(cfg, j)
        name = _dataset_name(j)
        csv_path = out / "datasets" / f"{name}.csv"
        truth_path = out / "datasets" / f"{name}.truth.json"
        try:
            csv_path.parent.mkdir(parents=True, exist_ok=True)
            write_dataset_csv(rec.dataset, csv_path)
            write_truth_json(rec, truth_path)
        except OSError as exc:
            raise IoProblem(f"cannot write {csv_path}: {exc}") from exc
        sims.append({"j": j, "seed": rec.seed, "dataset": f"datasets/{name}.csv", "truth": f"datasets/{name}.truth.json"})
    manifest = {
        "scenario": cfg.scenario.value,
        "N": cfg.N,
        "n": cfg.n,
        "master_seed": cfg.master_seed,
        "level": spec.level,
        "simulations": sims,
    }
    _write_text(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    return manifest


# -- bound --------------------------------------------------------------------


def _bound_one(task):
    root, sim, names, scenario, master_seed, em = task
    d = read_dataset_csv(Path(root) / sim["dataset"])
    truth = json.loads((Path(root) / sim["truth"]).read_text(encoding="utf-8"))
    p_u = truth["params"].get("p_u")
    ctx = SimContext(Scenario(scenario), sim["j"], master_seed, None if p_u is None else binary_entropy(p_u))
    em_cfg = EmConfig(**em)
    rows = []
    for name in names:
        res = run_algorithm(AlgorithmSpec.parse(name), d, ctx, em_cfg)
        o = res.outcome
        if o.failed:
            lower = upper = None
            status, reason = "failure", o.result.reason
        else:
            lower, upper = float(o.result.lower), float(o.result.upper)
            status, reason = "ok", ""
        rows.append(
            [sim["j"], name, o.query.value, _fmt(lower), _fmt(upper), status, reason, _fmt(res.theta), _fmt(res.thetaerror), f"{o.runtime:.6f}"]
        )
    return rows


def _load_manifest(out: Path) -> dict:
    manifest = _read_json(out / "manifest.json")
    for sim in manifest.get("simulations", []):
        for key in ("dataset", "truth"):
            if not (out / sim[key]).is_file():
                raise IoProblem(f"missing file {out / sim[key]}")
    return manifest


def cmd_bound(spec: RunSpec) -> Path:
    out = Path(spec.out)
    manifest = _load_manifest(out)
    scenario = Scenario(manifest["scenario"])
    names = spec.algorithm_names(scenario)
    check_algorithms(names, scenario)
    tasks = [(str(out), sim, names, scenario.value, manifest["master_seed"], spec.em) for sim in manifest["simulations"]]
    if spec.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(spec.jobs) as pool:
            chunks = list(pool.map(_bound_one, tasks, chunksize=max(1, len(tasks) // (4 * spec.jobs))))
    else:
        chunks = [_bound_one(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    path = out / "bounds.csv"
    _write_text(path, _csv_text(BOUNDS_COLUMNS, rows))
    return path


# -- report -------------------------------------------------------------------


def _read_bounds(path: Path) -> List[dict]:
    try:
        with path.open(encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))
    except FileNotFoundError:
        raise IoProblem(f"missing file {path}") from None


def load_run_outcomes(out: Path) -> Dict[Query, List[RunOutcome]]:
    manifest = _load_manifest(out)
    truths = {sim["j"]: _read_json(out / sim["truth"]) for sim in manifest["simulations"]}
    by_query: Dict[Query, List[RunOutcome]] = {Query.ATE: [], Query.PNS: []}
    for row in _read_bounds(out / "bounds.csv"):
        j = int(row["j"])
        if j not in truths:
            raise IoProblem(f"bounds.csv refers to simulation {j}, which is not in the manifest")
        q = Query(row["query"])
        truth = truths[j]["true_ate" if q is Query.ATE else "true_pns"]
        if truth is None:
            raise IoProblem(f"simulation {j} has no {q.value} ground truth")
        if row["status"] == "ok":
            result = Interval(float(row["lower"]), float(row["upper"]))
        else:
            result = Failure(row["reason"])
        by_query[q].append(RunOutcome(j, row["algorithm"], BoundOutcome(row["algorithm"], q, result), float(truth)))
    return by_query


def _markdown(reports) -> str:
    lines = []
    head = "| Algorithm | Fail Rate | Invalid Rate | Net Width | Bound Width | Invalid Δ |"
    for q, rep in reports:
        lines += [f"## {q.value}", "", head, "|---|---:|---:|---:|---:|---:|"]
        for r in rep.sorted_rows():
            f = r.formatted()
            name = r.algorithm
            if AlgorithmSpec.parse(name).method in ("OLS", "2SLS"):
                name += " (CI heuristic)"
            lines.append(
                f"| {name} | {f['failure_rate']} | {f['invalid_rate']} | {f['net_bound_width']} "
                f"| {f['bound_width']} | {f['invalid_delta']} |"
            )
        lines.append("")
    return "\n".join(lines)


def cmd_report(spec: RunSpec):
    out = Path(spec.out)
    by_query = load_run_outcomes(out)
    manifest = _load_manifest(out)
    reports = [(q, evaluate(runs, q)) for q, runs in by_query.items() if runs]
    metric_rows = []
    for q, rep in reports:
        for r in rep.sorted_rows():
            f = r.formatted(6)
            metric_rows.append([q.value, r.algorithm, r.n_runs] + [f[c] for c in METRIC_COLUMNS])
    _write_text(out / "metrics.csv", _csv_text(("query", "algorithm", "n_runs") + METRIC_COLUMNS, metric_rows))
    _write_text(out / "metrics.md", _markdown(reports))

    feats = {}
    for sim in manifest["simulations"]:
        d = read_dataset_csv(out / sim["dataset"])
        feats[sim["j"]] = features(d if d.binary_outcome else binarize(d))
    best_rows = []
    for q, runs in by_query.items():
        per_j: Dict[int, List[RunOutcome]] = {}
        for r in runs:
            per_j.setdefault(r.j, []).append(r)
        for j in sorted(per_j):
            best = best_algorithm(per_j[j], q)
            f = feats[j]
            best_rows.append([j, q.value, best or ""] + [_fmt(f.get(c)) for c in FEATURE_COLUMNS])
    _write_text(out / "best.csv", _csv_text(("j", "query", "best") + FEATURE_COLUMNS, best_rows))
    return reports


def cmd_run(spec: RunSpec):
    # check the algorithm list before spending time on simulation
    names = spec.algorithm_names()
    check_algorithms(names, spec.scenario_enum)
    cmd_simulate(spec)
    cmd_bound(spec)
    return cmd_report(spec)


# -- argument handling --------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="partialid", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "bound", "report", "run"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with RunSpec fields")
        s.add_argument("--out", help="output directory")
        if name in ("simulate", "run"):
            s.add_argument("--scenario", choices=[sc.value for sc in Scenario])
            s.add_argument("--N", type=int, dest="N")
            s.add_argument("--n", type=int, dest="n")
            s.add_argument("--seed", type=int)
            s.add_argument("--level", type=float, help="BinaryEntropyConf: keep one entropy level")
        if name in ("bound", "run"):
            s.add_argument("--algos", help="comma-separated algorithm names")
            s.add_argument("--theta", help="comma-separated theta values for bare *_entropybounds entries")
            s.add_argument("--binned", action="store_true", default=None, help="binarize y for discrete algorithms")
            s.add_argument("--jobs", type=int)
    return p


def build_spec(args: argparse.Namespace) -> RunSpec:
    base = {}
    if getattr(args, "config", None):
        try:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise IoProblem(f"missing config {args.config}") from None
        except json.JSONDecodeError as exc:
            raise SpecError(f"config is not valid JSON: {exc}") from None
        if not isinstance(base, dict):
            raise SpecError("config must be a JSON object")
        unknown = set(base) - {f.name for f in fields(RunSpec)}
        if unknown:
            raise SpecError(f"unknown config keys: {sorted(unknown)}")
    for key in ("out", "scenario", "N", "n", "seed", "level", "binned", "jobs"):
        v = getattr(args, key, None)
        if v is not None:
            base[key] = v
    for key in ("algos", "theta"):
        v = getattr(args, key, None)
        if v is not None:
            base[key] = [s.strip() for s in v.split(",") if s.strip()]
    try:
        spec = RunSpec(**base)
    except TypeError as exc:
        raise SpecError(str(exc)) from None
    return spec.validate()


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        spec = build_spec(args)
        command = {"simulate": cmd_simulate, "bound": cmd_bound, "report": cmd_report, "run": cmd_run}[args.command]
        if args.command == "simulate":
            manifest = command(spec)
            print(json.dumps({s["j"]: s["seed"] for s in manifest["simulations"]}))
        elif args.command in ("report", "run"):
            command(spec)
            print((Path(spec.out) / "metrics.md").read_text(encoding="utf-8"), end="")
        else:
            print(command(spec))
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except IoProblem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
