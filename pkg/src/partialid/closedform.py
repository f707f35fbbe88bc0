"""Closed-form bounds and the regression confidence-interval heuristics.

``ols_ate_ci`` and ``tsls_ate_ci`` are heuristics: a confidence interval on a
regression coefficient is not a partial-identification bound, and reports
label them as such.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .core import BinaryJoint, BoundFailure, Dataset, Interval

HEURISTIC_METHODS = frozenset({"OLS", "2SLS"})


@dataclass(frozen=True)
class ConfidenceLevel:
    level: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"confidence level must be in (0, 1), got {self.level}")

    @property
    def z(self) -> float:
        """Two-sided standard-normal critical value."""
        return NormalDist().inv_cdf((1.0 + self.level) / 2.0)


def _level(c) -> ConfidenceLevel:
    return c if isinstance(c, ConfidenceLevel) else ConfidenceLevel(float(c))


def manski_ate(j: BinaryJoint) -> Interval:
    p = j.p
    px1 = p[1].sum()
    px0 = p[0].sum()
    base = p[1, 1] - p[0, 1]
    return Interval(base - px1, base + px0)


def tianpearl_pns(j: BinaryJoint) -> Interval:
    return Interval(0.0, float(j.p[1, 1] + j.p[0, 0]))


def ols_ate_ci(d: Dataset, c=0.95) -> Interval:
    c = _level(c)
    x, y = d.x, d.y
    n = d.n
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx <= 0.0:
        raise BoundFailure("treatment has no variance")
    if n < 3:
        raise BoundFailure("need at least 3 units for a residual variance")
    beta = float(xc @ (y - y.mean())) / sxx
    alpha = y.mean() - beta * x.mean()
    resid = y - alpha - beta * x
    sigma2 = float(resid @ resid) / (n - 2)
    se = np.sqrt(sigma2 / sxx)
    half = c.z * se
    return Interval(beta - half, beta + half)


def tsls_ate_ci(d: Dataset, c=0.95) -> Interval:
    """Wald-form IV estimate with the homoskedastic IV standard error."""
    c = _level(c)
    if d.z is None:
        raise BoundFailure("2SLS requires an instrument")
    x, y, z = d.x, d.y, d.z
    n = d.n
    zc = z - z.mean()
    szx = float(zc @ (x - x.mean()))
    if abs(szx) / n < 1e-12:
        raise BoundFailure("weak/irrelevant instrument")
    if n < 3:
        raise BoundFailure("need at least 3 units for a residual variance")
    beta = float(zc @ (y - y.mean())) / szx
    alpha = y.mean() - beta * x.mean()
    resid = y - alpha - beta * x  # structural residuals use the observed x
    sigma2 = float(resid @ resid) / (n - 2)
    se = np.sqrt(sigma2 * float(zc @ zc)) / abs(szx)
    half = c.z * se
    return Interval(beta - half, beta + half)
