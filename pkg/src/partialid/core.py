"""Domain types and small numerical helpers shared by every bounding algorithm.

Probabilities are plain plug-in frequencies: no smoothing is applied and zero
cells are legal everywhere downstream.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

JOINT_ATOL = 1e-12


class Query(str, enum.Enum):
    ATE = "ATE"
    PNS = "PNS"

    @property
    def trivial_lower(self) -> float:
        return -1.0 if self is Query.ATE else 0.0

    @property
    def trivial_upper(self) -> float:
        return 1.0

    @property
    def trivial(self) -> "Interval":
        return Interval(self.trivial_lower, self.trivial_upper)


def query_range(q: Query) -> float:
    """Normalisation constant R: 2 for the ATE, 1 for the PNS."""
    q = Query(q)
    return q.trivial_upper - q.trivial_lower


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not (self.lower <= self.upper):
            raise ValueError(f"empty interval [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def __iter__(self):
        yield self.lower
        yield self.upper


@dataclass(frozen=True)
class Failure:
    reason: str


class BoundFailure(Exception):
    """Raised by a bounding algorithm that cannot return an interval."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class BoundOutcome:
    algorithm: str
    query: Query
    result: Union[Interval, Failure]
    runtime: float = 0.0

    @property
    def failed(self) -> bool:
        return isinstance(self.result, Failure)

    @property
    def interval(self) -> Optional[Interval]:
        return None if self.failed else self.result


@dataclass(frozen=True)
class Dataset:
    """Unit-level observations. ``z`` is ``None`` when there is no instrument."""

    x: np.ndarray
    y: np.ndarray
    z: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        z = None if self.z is None else np.asarray(self.z, dtype=float)
        if x.ndim != 1 or y.ndim != 1 or len(x) == 0:
            raise ValueError("x and y must be non-empty 1-d columns")
        if len(y) != len(x) or (z is not None and len(z) != len(x)):
            raise ValueError("columns must have equal length")
        if not _is_binary(x):
            raise ValueError("x must be binary")
        if z is not None and not _is_binary(z):
            raise ValueError("z must be binary")
        if np.any((y < 0) | (y > 1)) or np.any(~np.isfinite(y)):
            raise ValueError("y must lie in [0, 1]")
        for name, col in (("x", x), ("y", y), ("z", z)):
            if col is not None:
                col.setflags(write=False)
            object.__setattr__(self, name, col)

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def has_instrument(self) -> bool:
        return self.z is not None

    @property
    def binary_outcome(self) -> bool:
        return _is_binary(self.y)


def _is_binary(col: np.ndarray) -> bool:
    return bool(np.all((col == 0) | (col == 1)))


@dataclass(frozen=True)
class BinaryJoint:
    """Table ``p[x][y]`` of P(X=x, Y=y)."""

    p: np.ndarray
    n: int = 0

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(2, 2)
        if np.any(p < 0) or abs(p.sum() - 1.0) > JOINT_ATOL:
            raise ValueError("joint must be non-negative and sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_cells(cls, p00, p01, p10, p11, n: int = 0) -> "BinaryJoint":
        return cls(np.array([[p00, p01], [p10, p11]]), n)

    @property
    def px(self) -> np.ndarray:
        return self.p.sum(axis=1)

    @property
    def py(self) -> np.ndarray:
        return self.p.sum(axis=0)

    def cond_y1(self, x: int) -> float:
        """P(Y=1 | X=x); raises if the arm has no mass."""
        if self.px[x] <= 0:
            raise ZeroDivisionError(f"P(X={x}) = 0")
        return self.p[x, 1] / self.px[x]


@dataclass(frozen=True)
class IvJoint:
    """P(Z=1) plus the within-arm tables ``cond[z][x][y]`` = P(x, y | z)."""

    pz: float
    cond: np.ndarray
    n: int = 0

    def __post_init__(self):
        cond = np.array(self.cond, dtype=float).reshape(2, 2, 2)
        if not 0.0 <= self.pz <= 1.0:
            raise ValueError("pz must be a probability")
        if np.any(cond < 0) or np.any(np.abs(cond.sum(axis=(1, 2)) - 1.0) > JOINT_ATOL):
            raise ValueError("each conditional table must sum to 1")
        cond.setflags(write=False)
        object.__setattr__(self, "cond", cond)

    def marginal(self) -> BinaryJoint:
        """Joint P(X, Y) with the instrument summed out."""
        p = (1 - self.pz) * self.cond[0] + self.pz * self.cond[1]
        return BinaryJoint(p / p.sum(), self.n)


def empirical_binary_joint(d: Dataset) -> BinaryJoint:
    if not d.binary_outcome:
        raise ValueError("continuous outcome requires binarization")
    counts = np.zeros((2, 2))
    np.add.at(counts, (d.x.astype(int), d.y.astype(int)), 1.0)
    return BinaryJoint(counts / d.n, d.n)


def empirical_iv_joint(d: Dataset) -> IvJoint:
    if d.z is None:
        raise ValueError("dataset has no instrument column")
    if not d.binary_outcome:
        raise ValueError("continuous outcome requires binarization")
    counts = np.zeros((2, 2, 2))
    np.add.at(counts, (d.z.astype(int), d.x.astype(int), d.y.astype(int)), 1.0)
    arm_sizes = counts.sum(axis=(1, 2))
    if np.any(arm_sizes == 0):
        raise BoundFailure("degenerate instrument arm")
    return IvJoint(float(d.z.mean()), counts / arm_sizes[:, None, None], d.n)


def clip_to_ceiling(b: Interval, q: Query) -> Interval:
    """Clip to the logically possible range of ``q``.

    An interval lying entirely outside the range is replaced by the full
    trivial interval and flagged ``degenerate``.
    """
    q = Query(q)
    lo = max(b.lower, q.trivial_lower)
    hi = min(b.upper, q.trivial_upper)
    if lo > hi:
        return Interval(q.trivial_lower, q.trivial_upper, degenerate=True)
    return Interval(lo, hi, degenerate=b.degenerate)


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def invert_binary_entropy(h: float, reflect: bool = False, tol: float = 1e-10) -> float:
    """Return p in [0, 0.5] with H(p) = h (or 1 - p when ``reflect``).

    Bisection on [0, 0.5], where H is increasing; Newton steps misbehave near 0.
    """
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"entropy out of range: {h}")
    lo, hi = 0.0, 0.5
    if h == 0.0:
        p = 0.0
    elif h == 1.0:
        p = 0.5
    else:
        p = 0.25
        for _ in range(200):
            p = 0.5 * (lo + hi)
            hp = binary_entropy(p)
            if abs(hp - h) <= tol * 1e-2 or hi - lo < 1e-17:
                break
            if hp < h:
                lo = p
            else:
                hi = p
    return 1.0 - p if reflect else p


def entropy_bits(probs: Sequence[float]) -> float:
    """Shannon entropy in bits with 0 log 0 = 0."""
    p = np.asarray(probs, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


# -- Dataset CSV ------------------------------------------------------------


def write_dataset_csv(d: Dataset, path: Union[str, Path]) -> None:
    path = Path(path)
    header = ["unit_id", "z", "x", "y"] if d.has_instrument else ["unit_id", "x", "y"]
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(d.n):
            row = [i, _fmt(d.x[i]), _fmt(d.y[i])]
            if d.has_instrument:
                row.insert(1, _fmt(d.z[i]))
            w.writerow(row)


def read_dataset_csv(path: Union[str, Path]) -> Dataset:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        cols = {k: [] for k in reader.fieldnames or []}
        for row in reader:
            for k, v in row.items():
                cols[k].append(float(v))
    missing = {"unit_id", "x", "y"} - cols.keys()
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    z = np.array(cols["z"]) if "z" in cols else None
    return Dataset(x=np.array(cols["x"]), y=np.array(cols["y"]), z=z)


def _fmt(v: float) -> str:
    if v == int(v):
        return str(int(v))
    return repr(float(v))
