"""Sweep metrics, the per-simulation best-algorithm rule and observable features.

All widths and distances are normalised by the query range R (2 for the ATE,
1 for the PNS) and reported in percent. A bound counts as invalid when the
truth lies outside it by more than ``VALID_TOL``; the slack absorbs float
noise in bounds that are tight by construction.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .core import BoundOutcome, Dataset, Interval, Query, clip_to_ceiling, entropy_bits, query_range

VALID_TOL = 1e-9
BEST_DELTA_PCT = 1.0

METRIC_COLUMNS = ("failure_rate", "invalid_rate", "bound_width", "net_bound_width", "invalid_delta")


class Verdict(str, enum.Enum):
    FAILED = "failed"
    INVALID = "invalid"
    VALID = "valid"


@dataclass(frozen=True)
class RunOutcome:
    j: int
    algorithm: str
    outcome: BoundOutcome
    truth: float

    @property
    def bound(self) -> Optional[Interval]:
        iv = self.outcome.interval
        return None if iv is None else clip_to_ceiling(iv, self.outcome.query)

    @property
    def verdict(self) -> Verdict:
        b = self.bound
        if b is None:
            return Verdict.FAILED
        return Verdict.VALID if b.contains(self.truth, VALID_TOL) else Verdict.INVALID

    def delta(self) -> float:
        b = self.bound
        return 0.0 if b is None else invalid_delta(b, self.truth)


def invalid_delta(bound: Interval, truth: float) -> float:
    if truth < bound.lower:
        return bound.lower - truth
    if truth > bound.upper:
        return truth - bound.upper
    return 0.0


@dataclass(frozen=True)
class AlgorithmMetrics:
    algorithm: str
    n_runs: int
    failure_rate: Optional[float]
    invalid_rate: Optional[float]
    bound_width: Optional[float]
    net_bound_width: Optional[float]
    invalid_delta: Optional[float]

    def formatted(self, digits: int = 2) -> Dict[str, str]:
        out = {"algorithm": self.algorithm}
        for col in METRIC_COLUMNS:
            v = getattr(self, col)
            out[col] = "N/A" if v is None else f"{v:.{digits}f}"
        return out


@dataclass(frozen=True)
class MetricsReport:
    query: Query
    rows: Dict[str, AlgorithmMetrics]

    def sorted_rows(self) -> List[AlgorithmMetrics]:
        """Rows by net width ascending; N/A last, then by name."""
        return sorted(
            self.rows.values(),
            key=lambda r: (r.net_bound_width is None, r.net_bound_width or 0.0, r.algorithm),
        )

    def __getitem__(self, algorithm: str) -> AlgorithmMetrics:
        return self.rows[algorithm]


def _mean(xs: Sequence[float]) -> Optional[float]:
    return float(np.mean(xs)) if len(xs) else None


def evaluate(runs: Iterable[RunOutcome], q: Query) -> MetricsReport:
    q = Query(q)
    R = query_range(q)
    groups: Dict[str, List[RunOutcome]] = defaultdict(list)
    seen = set()
    for r in runs:
        key = (r.j, r.algorithm)
        if key in seen:
            raise ValueError(f"duplicate run for simulation {r.j}, algorithm {r.algorithm}")
        seen.add(key)
        groups[r.algorithm].append(r)

    rows = {}
    for algo, rs in sorted(groups.items()):
        N = len(rs)
        verdicts = [r.verdict for r in rs]
        n_fail = verdicts.count(Verdict.FAILED)
        invalid = [r for r, v in zip(rs, verdicts) if v is Verdict.INVALID]
        valid = [r for r, v in zip(rs, verdicts) if v is Verdict.VALID]
        penalised = [100.0 * (r.bound.width / R if v is Verdict.VALID else 1.0) for r, v in zip(rs, verdicts)]
        rows[algo] = AlgorithmMetrics(
            algorithm=algo,
            n_runs=N,
            failure_rate=100.0 * n_fail / N,
            invalid_rate=100.0 * len(invalid) / (N - n_fail) if N > n_fail else None,
            bound_width=_mean(penalised),
            net_bound_width=_mean([100.0 * r.bound.width / R for r in valid]),
            invalid_delta=_mean([100.0 * r.delta() / R for r in invalid]),
        )
    return MetricsReport(q, rows)


def best_algorithm(per_sim: Iterable[RunOutcome], q: Query) -> Optional[str]:
    R = query_range(q)
    eligible = []
    for r in per_sim:
        v = r.verdict
        if v is Verdict.FAILED:
            continue
        if v is Verdict.INVALID and 100.0 * r.delta() / R >= BEST_DELTA_PCT:
            continue
        eligible.append((r.bound.width, r.algorithm))
    return min(eligible)[1] if eligible else None


def _mi(a: np.ndarray, b: np.ndarray) -> float:
    joint = np.zeros((2, 2))
    np.add.at(joint, (a.astype(int), b.astype(int)), 1.0)
    joint /= joint.sum()
    return entropy_bits(joint.sum(axis=1)) + entropy_bits(joint.sum(axis=0)) - entropy_bits(joint)


def _h(col: np.ndarray) -> float:
    p = float(np.mean(col))
    return entropy_bits([p, 1.0 - p])


def features(d: Dataset) -> Dict[str, float]:
    """Plug-in entropies and pairwise mutual informations in bits."""
    if not d.binary_outcome:
        raise ValueError("features need a binary outcome; binarize first")
    out = {"H(X)": _h(d.x), "H(Y)": _h(d.y)}
    if d.z is not None:
        out["H(Z)"] = _h(d.z)
        out["I(Z;X)"] = _mi(d.z, d.x)
        out["I(Z;Y)"] = _mi(d.z, d.y)
    out["I(X;Y)"] = _mi(d.x, d.y)
    return out


FEATURE_COLUMNS = ("H(X)", "H(Y)", "H(Z)", "I(Z;X)", "I(Z;Y)", "I(X;Y)")


def joint_features(p: np.ndarray) -> Dict[str, float]:
    """Same quantities from an exact 2x2 table P(X, Y)."""
    p = np.asarray(p, dtype=float).reshape(2, 2)
    hx, hy, hxy = entropy_bits(p.sum(axis=1)), entropy_bits(p.sum(axis=0)), entropy_bits(p)
    return {"H(X)": hx, "H(Y)": hy, "H(X,Y)": hxy, "I(X;Y)": hx + hy - hxy}
