"""Sharp bounds from linear programs over response-type distributions.

Confounded DAG (X <- U -> Y, X -> Y): eight masses ``q[i]`` with
``i = 4*y1 + 2*y0 + x``, i.e. a unit's treatment together with its pair of
potential outcomes. Instrumented DAG (Z -> X -> Y, U -> X, U -> Y): sixteen
masses over (compliance type, outcome type). For a continuous outcome the
instrumented program is linearised over (compliance type, treatment arm).
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import BinaryJoint, BoundFailure, Dataset, Interval, IvJoint, Query
from .solver import LinearProgram, SolverError, solve_lp

# (x under z=0, x under z=1): never-taker, complier, defier, always-taker
COMPLIANCE_TYPES = [(0, 0), (0, 1), (1, 0), (1, 1)]
# (y0, y1): never, responder, contrarian, always
OUTCOME_TYPES = [(0, 0), (0, 1), (1, 0), (1, 1)]
RESPONDER = OUTCOME_TYPES.index((0, 1))
CONTRARIAN = OUTCOME_TYPES.index((1, 0))


def conf_index(y1: int, y0: int, x: int) -> int:
    return 4 * y1 + 2 * y0 + x


CONF_STATES = [(y1, y0, x) for y1, y0, x in itertools.product((0, 1), repeat=3)]


def conf_program(j: BinaryJoint, objective: np.ndarray) -> LinearProgram:
    lp = LinearProgram(8, objective)
    for x, y in itertools.product((0, 1), repeat=2):
        row = np.zeros(8)
        for y1, y0, xs in CONF_STATES:
            if xs == x and (y1 if x else y0) == y:
                row[conf_index(y1, y0, xs)] = 1.0
        lp.add_eq(row, j.p[x, y])
    lp.add_eq(np.ones(8), 1.0)
    return lp


def conf_objective(q: Query) -> np.ndarray:
    c = np.zeros(8)
    for y1, y0, x in CONF_STATES:
        if (y1, y0) == (1, 0):
            c[conf_index(y1, y0, x)] = 1.0
        elif (y1, y0) == (0, 1) and Query(q) is Query.ATE:
            c[conf_index(y1, y0, x)] = -1.0
    return c


def _both_senses(lp: LinearProgram, infeasible_reason: str) -> Interval:
    try:
        lo = solve_lp(lp, "min")
        hi = solve_lp(lp, "max")
    except SolverError as exc:
        raise BoundFailure(str(exc)) from exc
    if not (lo.optimal and hi.optimal):
        raise BoundFailure(infeasible_reason)
    return Interval(min(lo.value, hi.value), max(lo.value, hi.value))


def conf_lp_bounds(j: BinaryJoint, q: Query) -> Interval:
    return _both_senses(conf_program(j, conf_objective(q)), "LP infeasible")


def iv_index(c: int, o: int) -> int:
    return 4 * c + o


def iv_program(j: IvJoint, objective: np.ndarray) -> LinearProgram:
    lp = LinearProgram(16, objective)
    for z, x, y in itertools.product((0, 1), repeat=3):
        row = np.zeros(16)
        for c, xz in enumerate(COMPLIANCE_TYPES):
            for o, yx in enumerate(OUTCOME_TYPES):
                if xz[z] == x and yx[x] == y:
                    row[iv_index(c, o)] = 1.0
        lp.add_eq(row, j.cond[z, x, y])
    lp.add_eq(np.ones(16), 1.0)
    return lp


def iv_objective(q: Query) -> np.ndarray:
    c = np.zeros(16)
    for comp in range(4):
        c[iv_index(comp, RESPONDER)] = 1.0
        if Query(q) is Query.ATE:
            c[iv_index(comp, CONTRARIAN)] = -1.0
    return c


def iv_lp_bounds(j: IvJoint, q: Query) -> Interval:
    return _both_senses(iv_program(j, iv_objective(q)), "data inconsistent with IV model")


# -- continuous outcome ------------------------------------------------------


def _mu(r: int) -> int:
    return r


def _w(r: int, x: int) -> int:
    return 4 + 2 * r + x


def iv_moments(d: Dataset):
    """P(X=x | Z=z) and E[Y 1{X=x} | Z=z], both indexed ``[z, x]``."""
    if d.z is None:
        raise ValueError("dataset has no instrument column")
    px = np.zeros((2, 2))
    ey = np.zeros((2, 2))
    for z in (0, 1):
        arm = d.z == z
        if not arm.any():
            raise BoundFailure("degenerate instrument arm")
        xa, ya = d.x[arm], d.y[arm]
        for x in (0, 1):
            sel = xa == x
            px[z, x] = sel.mean()
            ey[z, x] = (ya * sel).mean()
    return px, ey


def continuous_iv_program(px: np.ndarray, ey: np.ndarray, objective: np.ndarray) -> LinearProgram:
    bounds = [(0.0, 1.0)] * 12
    lp = LinearProgram(12, objective, var_bounds=bounds)
    mu_sum = np.zeros(12)
    mu_sum[:4] = 1.0
    lp.add_eq(mu_sum, 1.0)
    for z, x in itertools.product((0, 1), repeat=2):
        a_mu = np.zeros(12)
        a_w = np.zeros(12)
        for r, xz in enumerate(COMPLIANCE_TYPES):
            if xz[z] == x:
                a_mu[_mu(r)] = 1.0
                a_w[_w(r, x)] = 1.0
        lp.add_eq(a_mu, px[z, x])
        lp.add_eq(a_w, ey[z, x])
    for r in range(4):
        for x in (0, 1):
            row = np.zeros(12)
            row[_w(r, x)] = 1.0
            row[_mu(r)] = -1.0
            lp.add_ineq(row, 0.0)
    return lp


def _arm_objective(x: int) -> np.ndarray:
    c = np.zeros(12)
    for r in range(4):
        c[_w(r, x)] = 1.0
    return c


def zhangbareinboim_ate(d: Dataset, joint: bool = False) -> Interval:
    """Bounds on E[Y_1] - E[Y_0] for an outcome in [0, 1] with a binary instrument.

    The default composes separate bounds on E[Y_1] and E[Y_0]; ``joint=True``
    optimises the contrast directly, which can only be tighter.
    """
    px, ey = iv_moments(d)
    reason = "data inconsistent with IV model"
    if joint:
        obj = _arm_objective(1) - _arm_objective(0)
        return _both_senses(continuous_iv_program(px, ey, obj), reason)
    e1 = _both_senses(continuous_iv_program(px, ey, _arm_objective(1)), reason)
    e0 = _both_senses(continuous_iv_program(px, ey, _arm_objective(0)), reason)
    return Interval(e1.lower - e0.upper, e1.upper - e0.lower)
