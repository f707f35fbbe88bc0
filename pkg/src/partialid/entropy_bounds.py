"""Bounds under weak confounding: a cap ``theta`` on the confounder entropy.

If H(U) <= theta then, by data processing along X -> U -> Y_x, the mutual
information between the treatment and any potential outcome (or the pair of
potential outcomes) is at most theta. Both programs below are linear except
for that one convex mutual-information constraint, which is handled with
cutting planes. All information quantities are in bits.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .core import BinaryJoint, BoundFailure, Interval, Query, binary_entropy
from .lp_bounds import CONF_STATES, conf_index, conf_objective, conf_program
from .solver import ConvexConstraint, LinearProgram, SolverError, solve_convex_cut

LOG_FLOOR = 1e-12
# slack on the MI itself; near theta = 0 an MI slack e moves the objective by
# about sqrt(e), so this has to be far below the objective tolerance
CUT_TOL = 1e-11
VALUE_TOL = 1e-7
MAX_CUTS = 400


class ThetaSource(str, enum.Enum):
    FIXED = "fixed"
    TRUE = "trueTheta"
    RANDOM = "randomTheta"
    UNDERSPECIFY = "underspecifyTheta"


@dataclass(frozen=True)
class Theta:
    value: float
    source: ThetaSource = ThetaSource.FIXED

    def __post_init__(self):
        if not self.value >= 0.0:
            raise ValueError(f"theta must be non-negative, got {self.value}")


def _theta(theta) -> float:
    return theta.value if isinstance(theta, Theta) else float(theta)


def true_theta(p_u: float) -> Theta:
    return Theta(binary_entropy(p_u), ThetaSource.TRUE)


def _xlogy_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    return num * np.log2(np.maximum(num, LOG_FLOOR) / np.maximum(den, LOG_FLOOR))


# -- P(Y=1 | do(X=arm)) -------------------------------------------------------


def _b(i: int, j: int) -> int:
    return 2 * i + j


def do_mutual_information(b: np.ndarray, px: np.ndarray) -> float:
    """I(X; Y_x) for decision variables ``b[i, j] = P(Y_x = y_i | X = x_j)``."""
    b = np.asarray(b, dtype=float).reshape(2, 2)
    mix = b @ px  # P(Y_x = y_i)
    terms = _xlogy_ratio(b, mix[:, None]) * px[None, :]
    return float(terms.sum())


def do_mi_gradient(b: np.ndarray, px: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=float).reshape(2, 2)
    mix = b @ px
    ratio = np.maximum(b, LOG_FLOOR) / np.maximum(mix, LOG_FLOOR)[:, None]
    return (np.log2(ratio) * px[None, :]).ravel()


def do_program(j: BinaryJoint, arm: int) -> LinearProgram:
    px = j.px
    obj = np.zeros(4)
    for col in (0, 1):
        obj[_b(1, col)] = px[col]
    lp = LinearProgram(4, obj, var_bounds=[(0.0, 1.0)] * 4)
    total = np.zeros(4)
    for i, col in itertools.product((0, 1), repeat=2):
        total[_b(i, col)] = px[col]
    lp.add_eq(total, 1.0)
    for i in (0, 1):
        row = np.zeros(4)
        row[_b(i, arm)] = px[arm]
        lp.add_eq(row, j.p[arm, i])
    for col in (0, 1):
        # per-column normalisation, implied whenever P(X=col) > 0
        row = np.zeros(4)
        row[_b(0, col)] = row[_b(1, col)] = 1.0
        lp.add_eq(row, 1.0)
    return lp


def entropy_do_bound(j: BinaryJoint, arm: int, theta) -> Interval:
    px = j.px
    if px[arm] <= 0:
        raise BoundFailure(f"P(X={arm}) = 0")
    lp = do_program(j, arm)
    cond = j.p[arm] / px[arm]
    anchor = np.array([cond[0], cond[0], cond[1], cond[1]])  # Y_x independent of X
    cc = ConvexConstraint(
        lambda v: do_mutual_information(v, px),
        _theta(theta),
        anchor,
        gradient=lambda v: do_mi_gradient(v, px),
    )
    lo, hi = _solve_both(lp, cc)
    return Interval(float(np.clip(lo, 0, 1)), float(np.clip(hi, 0, 1)))


def entropy_ate(j: BinaryJoint, theta) -> Interval:
    if np.any(j.px <= 0):
        raise BoundFailure("both treatment arms need positive mass")
    one = entropy_do_bound(j, 1, theta)
    zero = entropy_do_bound(j, 0, theta)
    lo = max(-1.0, one.lower - zero.upper)
    hi = min(1.0, one.upper - zero.lower)
    return Interval(lo, hi)


# -- PNS ----------------------------------------------------------------------


def pns_mutual_information(q: np.ndarray) -> float:
    """I(X; (Y0, Y1)) = KL(q || r), r the product of q's two marginals."""
    q = np.asarray(q, dtype=float)
    qt = q.reshape(2, 2, 2)  # axes (y1, y0, x), matching conf_index
    p_types = qt.sum(axis=2)
    p_x = qt.sum(axis=(0, 1))
    r = p_types[:, :, None] * p_x[None, None, :]
    return float(_xlogy_ratio(qt, r).sum())


def pns_mi_gradient(q: np.ndarray) -> np.ndarray:
    # d/dq_i KL(q || r) = log2(q_i / r_i) - 1/ln 2; the constant lies along the
    # normalisation row and is projected away. Cells of an empty response type
    # (q = r = 0) get slope 0; a zero cell in a populated type gets the floored,
    # steeply negative log ratio.
    qt = np.asarray(q, dtype=float).reshape(2, 2, 2)
    r = qt.sum(axis=2)[:, :, None] * qt.sum(axis=(0, 1))[None, None, :]
    g = np.log2(np.maximum(qt, LOG_FLOOR) / np.maximum(r, LOG_FLOOR))
    return (g - 1.0 / np.log(2.0)).ravel()


def _pns_anchor(j: BinaryJoint) -> np.ndarray:
    px = j.px
    y0 = j.p[0] / px[0] if px[0] > 0 else np.array([0.5, 0.5])
    y1 = j.p[1] / px[1] if px[1] > 0 else np.array([0.5, 0.5])
    q = np.zeros(8)
    for a, b, x in CONF_STATES:
        q[conf_index(a, b, x)] = px[x] * y1[a] * y0[b]
    return q


def entropy_pns(j: BinaryJoint, theta) -> Interval:
    lp = conf_program(j, conf_objective(Query.PNS))
    cc = ConvexConstraint(
        pns_mutual_information, _theta(theta), _pns_anchor(j), gradient=pns_mi_gradient
    )
    lo, hi = _solve_both(lp, cc)
    return Interval(float(np.clip(lo, 0, 1)), float(np.clip(hi, 0, 1)))


def _solve_both(lp: LinearProgram, cc: ConvexConstraint):
    try:
        lo = solve_convex_cut(lp, cc, "min", tol=CUT_TOL, max_cuts=MAX_CUTS, value_tol=VALUE_TOL)
        hi = solve_convex_cut(lp, cc, "max", tol=CUT_TOL, max_cuts=MAX_CUTS, value_tol=VALUE_TOL)
    except SolverError as exc:
        raise BoundFailure(str(exc)) from exc
    if not (lo.optimal and hi.optimal):
        raise BoundFailure("entropy program infeasible")
    return min(lo.value, hi.value), max(lo.value, hi.value)
