"""Brute-force references used only by the test-suite."""

from __future__ import annotations

import itertools

import numpy as np

from partialid.core import BinaryJoint

# (index kept, index moved) per observed cell: q[a] + q[b] = P(x, y)
_PAIRS = {(0, 0): (0, 4), (0, 1): (2, 6), (1, 0): (1, 3), (1, 1): (5, 7)}


def _mi_batch(q: np.ndarray) -> np.ndarray:
    qt = q.reshape(-1, 2, 2, 2)
    r = qt.sum(axis=3)[..., None] * qt.sum(axis=(1, 2))[:, None, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(qt > 0, qt * np.log2(qt / np.where(r > 0, r, 1.0)), 0.0)
    return t.reshape(len(q), -1).sum(axis=1)


def _grid_q(j: BinaryJoint, fracs: np.ndarray) -> np.ndarray:
    q = np.zeros((len(fracs), 8))
    for k, (cell, (a, b)) in enumerate(sorted(_PAIRS.items())):
        mass = j.p[cell]
        q[:, a] = mass * (1 - fracs[:, k])
        q[:, b] = mass * fracs[:, k]
    return q


def grid_pns(j: BinaryJoint, theta: float, points: int = 21, zoom: int = 8):
    """PNS range over a grid of the four split fractions, refined around the extremes.

    Every grid point is feasible, so the result is an inner approximation.
    """
    base = np.linspace(0.0, 1.0, points)
    out = []
    for sign in (1.0, -1.0):
        axes = [base] * 4
        best = None
        step = 1.0 / (points - 1)
        for _ in range(zoom + 1):
            fr = np.array(list(itertools.product(*axes)))
            q = _grid_q(j, fr)
            ok = _mi_batch(q) <= theta + 1e-12
            if not ok.any():
                break
            val = (q[:, 4] + q[:, 5])[ok]
            k = np.argmax(sign * val)
            if best is None or sign * val[k] > sign * best:
                best = val[k]
                centre = fr[ok][k]
            axes = [np.clip(np.linspace(c - step, c + step, 9), 0, 1) for c in centre]
            step /= 3.0
        out.append(best)
    return out[1], out[0]


def grid_do(j: BinaryJoint, arm: int, theta: float, points: int = 20001):
    """P(Y_arm = 1) range by scanning the unobserved arm's column."""
    from partialid.entropy_bounds import do_mutual_information

    px = j.px
    c = j.p[arm, 1] / px[arm]
    other = 1 - arm
    vals = []
    for t in np.append(np.linspace(0.0, 1.0, points), c):
        b = np.zeros((2, 2))
        b[1, arm], b[0, arm] = c, 1 - c
        b[1, other], b[0, other] = t, 1 - t
        if do_mutual_information(b, px) <= theta + 1e-12:
            vals.append(px[arm] * c + px[other] * t)
    return min(vals), max(vals)


def _min_mi_at(j: BinaryJoint, v: float, starts: int = 4) -> float:
    """Smallest I(X; Y0, Y1) over data-compatible q with q4 + q5 = v."""
    from scipy.optimize import minimize

    p00, p11 = j.p[0, 0], j.p[1, 1]
    fun = lambda s: float(_mi_batch(_grid_q(j, s[None, :]))[0])
    con = {"type": "eq", "fun": lambda s: p00 * s[0] + p11 * (1 - s[3]) - v}
    rng = np.random.default_rng(0)
    best = np.inf
    for _ in range(starts):
        r = minimize(fun, rng.random(4), method="SLSQP", bounds=[(0, 1)] * 4,
                     constraints=[con], options={"ftol": 1e-12, "maxiter": 500})
        if r.success and abs(con["fun"](r.x)) < 1e-9:
            best = min(best, r.fun)
    return best


def profile_pns(j: BinaryJoint, theta: float, iters: int = 16):
    """PNS range by bisecting the convex profile v -> min MI at PNS = v.

    The independence coupling has MI 0, so the feasible PNS values form an
    interval around it; each side is located by bisection toward the LP bound.
    """
    from partialid.core import Query
    from partialid.entropy_bounds import _pns_anchor
    from partialid.lp_bounds import conf_lp_bounds

    a = _pns_anchor(j)
    va = a[4] + a[5]
    lp = conf_lp_bounds(j, Query.PNS)
    out = []
    for edge in (lp.lower, lp.upper):
        if _min_mi_at(j, edge) <= theta:
            out.append(edge)
            continue
        inside, outside = va, edge
        for _ in range(iters):
            mid = 0.5 * (inside + outside)
            if _min_mi_at(j, mid) <= theta:
                inside = mid
            else:
                outside = mid
        out.append(inside)
    return out[0], out[1]
