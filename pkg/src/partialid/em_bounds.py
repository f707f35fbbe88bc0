"""EMCC: restarts of EM over canonical SCMs, reporting the spread of the query.

Every latent state fixes the treatment mechanism and the outcome response
type, so each observed cell is produced by a known subset of states. EM moves
mass between states that explain the same cells; where several models explain
the data equally well, the restart decides which one is returned, and the
spread of query values over restarts approximates the sharp bounds from
inside.
"""

from __future__ import annotations

import enum
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .core import BinaryJoint, Interval, IvJoint, Query, clip_to_ceiling
from .lp_bounds import COMPLIANCE_TYPES, OUTCOME_TYPES


class Dag(str, enum.Enum):
    CONF = "Conf"
    IV = "Iv"


# Conf states: (x, y0, y1); Iv states: (compliance index, outcome index)
CONF_LATENT = list(itertools.product((0, 1), OUTCOME_TYPES))
IV_LATENT = list(itertools.product(range(4), range(4)))


def _conf_consistency() -> np.ndarray:
    """Boolean [cell, state]; cells ordered (x, y)."""
    m = np.zeros((4, 8), dtype=bool)
    for s, (x, (y0, y1)) in enumerate(CONF_LATENT):
        y = y1 if x else y0
        m[2 * x + y, s] = True
    return m


def _iv_consistency() -> np.ndarray:
    """Boolean [cell, state]; cells ordered (z, x, y)."""
    m = np.zeros((8, 16), dtype=bool)
    for s, (c, o) in enumerate(IV_LATENT):
        for z in (0, 1):
            x = COMPLIANCE_TYPES[c][z]
            y = OUTCOME_TYPES[o][x]
            m[4 * z + 2 * x + y, s] = True
    return m


_CONSISTENT = {Dag.CONF: _conf_consistency(), Dag.IV: _iv_consistency()}


@dataclass(frozen=True)
class CanonicalScm:
    dag: Dag
    p_u: np.ndarray
    pz: Optional[float] = None

    def __post_init__(self):
        p = np.asarray(self.p_u, dtype=float)
        expected = 8 if Dag(self.dag) is Dag.CONF else 16
        if p.shape != (expected,):
            raise ValueError(f"{self.dag} model needs {expected} latent states")
        if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("p_u must be a probability vector")
        object.__setattr__(self, "dag", Dag(self.dag))
        object.__setattr__(self, "p_u", p)

    def observable(self) -> np.ndarray:
        """Cell probabilities implied by the model: P(x, y), or P(x, y | z) for Iv."""
        return _CONSISTENT[self.dag] @ self.p_u


@dataclass(frozen=True)
class EmConfig:
    runs: int = 30
    maxiter: int = 100
    loglik_tol: float = 1e-6
    seed: int = 0
    # Dirichlet concentration of the restart distribution; None picks the
    # per-DAG default below
    concentration: Optional[float] = None
    max_parallel: int = 1

    def __post_init__(self):
        if self.runs < 1 or self.maxiter < 1:
            raise ValueError("runs and maxiter must be at least 1")
        if self.concentration is not None and not self.concentration > 0:
            raise ValueError("concentration must be positive")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be at least 1")


# Conf EM reaches a data-compatible model in one step from any start, so
# sparse starts only widen the spread towards the sharp bounds. Iv EM from
# sparse starts is often still far from the data after 100 iterations, so
# it keeps flat starts.
DEFAULT_CONCENTRATION = {Dag.CONF: 0.1, Dag.IV: 1.0}


@dataclass
class EmTrace:
    model: CanonicalScm
    loglik: List[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.loglik) - 1


Data = Union[BinaryJoint, IvJoint]


def _cell_weights(data: Data, dag: Dag) -> np.ndarray:
    scale = max(data.n, 1)
    if dag is Dag.CONF:
        if not isinstance(data, BinaryJoint):
            raise TypeError("Conf DAG needs a BinaryJoint")
        return data.p.ravel() * scale
    if not isinstance(data, IvJoint):
        raise TypeError("Iv DAG needs an IvJoint")
    arm = np.array([1 - data.pz, data.pz])
    return (data.cond * arm[:, None, None]).ravel() * scale


def _loglik(w: np.ndarray, cell_p: np.ndarray) -> float:
    used = w > 0
    return float(w[used] @ np.log(np.maximum(cell_p[used], 1e-300)))


def em_run(data: Data, dag, init, cfg: EmConfig = EmConfig()) -> EmTrace:
    dag = Dag(dag)
    cons = _CONSISTENT[dag].astype(float)
    w = _cell_weights(data, dag)
    p = np.asarray(init, dtype=float).copy()
    if p.shape != (cons.shape[1],) or np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
        raise ValueError("init must be a probability vector over the latent states")
    total = w.sum()
    trace = EmTrace(CanonicalScm(dag, p, getattr(data, "pz", None)))
    cell_p = cons @ p
    trace.loglik.append(_loglik(w, cell_p))
    for _ in range(cfg.maxiter):
        # E-step: split each cell's weight over its consistent states
        share = np.divide(w, cell_p, out=np.zeros_like(w), where=cell_p > 0)
        resp = p * (cons.T @ share)
        p = resp / total
        p /= p.sum()
        cell_p = cons @ p
        ll = _loglik(w, cell_p)
        if ll < trace.loglik[-1] - 1e-9 * max(1.0, abs(ll)):
            raise AssertionError("EM log-likelihood decreased")
        trace.loglik.append(ll)
        if ll - trace.loglik[-2] < cfg.loglik_tol:
            break
    trace.model = CanonicalScm(dag, p, getattr(data, "pz", None))
    return trace


def scm_query(m: CanonicalScm, q: Query) -> float:
    q = Query(q)
    latent = CONF_LATENT if m.dag is Dag.CONF else IV_LATENT
    resp = contra = 0.0
    for pu, state in zip(m.p_u, latent):
        o = state[1] if m.dag is Dag.CONF else OUTCOME_TYPES[state[1]]
        if o == (0, 1):
            resp += pu
        elif o == (1, 0):
            contra += pu
    return resp - contra if q is Query.ATE else resp


def restart_inits(dag, cfg: EmConfig) -> np.ndarray:
    dag = Dag(dag)
    k = 8 if dag is Dag.CONF else 16
    alpha = cfg.concentration if cfg.concentration is not None else DEFAULT_CONCENTRATION[dag]
    out = np.empty((cfg.runs, k))
    for r in range(cfg.runs):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, r]))
        out[r] = rng.dirichlet(np.full(k, alpha))
    # very small concentrations can underflow to an all-zero draw
    bad = ~np.isfinite(out).all(axis=1) | (out.sum(axis=1) <= 0)
    out[bad] = 1.0 / k
    return out / out.sum(axis=1, keepdims=True)


def emcc_bounds(data: Data, dag, q: Query, cfg: EmConfig = EmConfig()) -> Interval:
    dag = Dag(dag)
    inits = restart_inits(dag, cfg)

    def one(init):
        return scm_query(em_run(data, dag, init, cfg).model, q)

    if cfg.max_parallel > 1:
        with ThreadPoolExecutor(cfg.max_parallel) as pool:
            values = list(pool.map(one, inits))
    else:
        values = [one(i) for i in inits]
    return clip_to_ceiling(Interval(float(min(values)), float(max(values))), q)
