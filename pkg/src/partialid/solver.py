"""Dense LP engine and a Kelley cutting-plane layer for one convex constraint.

The programs solved here have at most a few dozen variables, so a dense
two-phase tableau simplex with Bland's rule does the work. Once many nearly
parallel cuts accumulate the tableau can drift; every answer is checked
against the original constraints and, if the check fails, the program is
re-solved with HiGHS (through SciPy).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

FEAS_TOL = 1e-9
RESIDUAL_TOL = 1e-7
MAX_PIVOTS = 50_000


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class SolverError(RuntimeError):
    pass


@dataclass
class LinearProgram:
    """min/max ``objective @ v`` subject to equality rows, ``<=`` rows and boxes.

    ``var_bounds`` defaults to ``[0, inf)`` for every variable. Lower bounds
    must be finite.
    """

    nvars: int
    objective: np.ndarray
    eq_constraints: List[Tuple[np.ndarray, float]] = field(default_factory=list)
    ineq_constraints: List[Tuple[np.ndarray, float]] = field(default_factory=list)
    var_bounds: Optional[List[Tuple[float, float]]] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (self.nvars,):
            raise ValueError("objective has wrong length")
        if self.var_bounds is None:
            self.var_bounds = [(0.0, np.inf)] * self.nvars
        if len(self.var_bounds) != self.nvars:
            raise ValueError("var_bounds has wrong length")
        for lo, hi in self.var_bounds:
            if not np.isfinite(lo) or lo > hi:
                raise ValueError(f"bad variable bounds ({lo}, {hi})")
        self.eq_constraints = [_row(a, b, self.nvars) for a, b in self.eq_constraints]
        self.ineq_constraints = [_row(a, b, self.nvars) for a, b in self.ineq_constraints]

    def add_eq(self, coef, rhs: float) -> None:
        self.eq_constraints.append(_row(coef, rhs, self.nvars))

    def add_ineq(self, coef, rhs: float) -> None:
        self.ineq_constraints.append(_row(coef, rhs, self.nvars))

    def copy(self, objective=None) -> "LinearProgram":
        return LinearProgram(
            self.nvars,
            self.objective.copy() if objective is None else objective,
            list(self.eq_constraints),
            list(self.ineq_constraints),
            list(self.var_bounds),
        )

    def residual(self, v: np.ndarray) -> float:
        """Largest constraint violation at ``v`` (0 when feasible)."""
        worst = 0.0
        for a, b in self.eq_constraints:
            worst = max(worst, abs(a @ v - b))
        for a, b in self.ineq_constraints:
            worst = max(worst, a @ v - b)
        for vi, (lo, hi) in zip(v, self.var_bounds):
            worst = max(worst, lo - vi, vi - hi)
        return float(worst)


def _row(a, b, n) -> Tuple[np.ndarray, float]:
    a = np.asarray(a, dtype=float)
    if a.shape != (n,):
        raise ValueError(f"constraint row has length {a.shape}, expected {n}")
    return a, float(b)


@dataclass
class LpSolution:
    status: Status
    value: float = float("nan")
    point: Optional[np.ndarray] = None
    cuts: int = 0
    gap: float = float("nan")

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def solve_lp(lp: LinearProgram, sense: str = "min", method: str = "auto") -> LpSolution:
    """``method``: "simplex", "highs", or "auto" (simplex, HiGHS if its answer fails the residual check)."""
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    if method == "highs":
        return _solve_highs(lp, sense)
    if method == "simplex":
        return _solve_simplex(lp, sense)
    if method != "auto":
        raise ValueError(f"unknown LP method {method!r}")
    try:
        sol = _solve_simplex(lp, sense)
    except SolverError:
        return _solve_highs(lp, sense)
    # a vertex a hair outside a shallow cut stalls the cutting loop, so the
    # automatic mode holds the simplex to the tighter feasibility tolerance
    if sol.optimal and lp.residual(sol.point) > 10 * FEAS_TOL:
        return _solve_highs(lp, sense)
    return sol


def _solve_highs(lp: LinearProgram, sense: str) -> LpSolution:
    from scipy.optimize import linprog

    c = lp.objective if sense == "min" else -lp.objective
    # cuts are only a few 1e-9 deep near convergence; HiGHS defaults (1e-7)
    # would accept the previous vertex again and stall the cutting loop
    opts = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}
    kw = dict(bounds=lp.var_bounds, method="highs", options=opts)
    if lp.eq_constraints:
        kw["A_eq"] = np.array([a for a, _ in lp.eq_constraints])
        kw["b_eq"] = np.array([b for _, b in lp.eq_constraints])
    if lp.ineq_constraints:
        kw["A_ub"] = np.array([a for a, _ in lp.ineq_constraints])
        kw["b_ub"] = np.array([b for _, b in lp.ineq_constraints])
    res = linprog(c, **kw)
    if res.status == 2:
        # presolve may report an unbounded program as infeasible; disambiguate
        feas = linprog(np.zeros(lp.nvars), **kw)
        return LpSolution(Status.UNBOUNDED if feas.status == 0 else Status.INFEASIBLE)
    if res.status == 3:
        return LpSolution(Status.UNBOUNDED)
    if res.status != 0:
        raise SolverError(f"HiGHS: {res.message}")
    v = np.asarray(res.x, dtype=float)
    if lp.residual(v) > RESIDUAL_TOL:
        raise SolverError(f"LP solution violates constraints by {lp.residual(v):.3g}")
    return LpSolution(Status.OPTIMAL, float(lp.objective @ v), v)


def _solve_simplex(lp: LinearProgram, sense: str) -> LpSolution:
    n = lp.nvars
    lo = np.array([b[0] for b in lp.var_bounds])
    hi = np.array([b[1] for b in lp.var_bounds])

    # shift v = lo + u so that u >= 0; finite upper bounds become rows
    rows, rhs, slack_sign = [], [], []
    for a, b in lp.eq_constraints:
        rows.append(a)
        rhs.append(b - a @ lo)
        slack_sign.append(0)
    for a, b in lp.ineq_constraints:
        rows.append(a)
        rhs.append(b - a @ lo)
        slack_sign.append(1)
    for k in np.flatnonzero(np.isfinite(hi)):
        e = np.zeros(n)
        e[k] = 1.0
        rows.append(e)
        rhs.append(hi[k] - lo[k])
        slack_sign.append(1)

    c = lp.objective if sense == "min" else -lp.objective
    if not rows:
        return _solve_unconstrained(c, lo, lp, sense)

    m = len(rows)
    nslack = sum(slack_sign)
    A = np.zeros((m, n + nslack))
    A[:, :n] = np.array(rows)
    s = n
    for r, sg in enumerate(slack_sign):
        if sg:
            A[r, s] = 1.0
            s += 1
    b = np.array(rhs, dtype=float)
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    u, status = _two_phase(A, b, np.concatenate([c, np.zeros(nslack)]))
    if status is not Status.OPTIMAL:
        return LpSolution(status)
    v = lo + u[:n]
    res = lp.residual(v)
    if res > RESIDUAL_TOL:
        raise SolverError(f"simplex solution violates constraints by {res:.3g}")
    return LpSolution(Status.OPTIMAL, float(lp.objective @ v), v)


def _solve_unconstrained(c, lo, lp, sense) -> LpSolution:
    if np.any(c < 0):
        return LpSolution(Status.UNBOUNDED)
    return LpSolution(Status.OPTIMAL, float(lp.objective @ lo), lo.copy())


def _two_phase(A: np.ndarray, b: np.ndarray, c: np.ndarray):
    """Minimise ``c @ u`` s.t. ``A u = b``, ``u >= 0`` with ``b >= 0``."""
    m, N = A.shape
    # phase 1: one artificial per row, tableau columns [u | art | rhs]
    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = A
    T[:m, N : N + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(N, N + m))
    T[m, :N] = -A.sum(axis=0)
    T[m, -1] = -b.sum()

    _pivot_loop(T, basis, ncols=N + m)
    if -T[m, -1] > FEAS_TOL * max(1.0, b.sum()):
        return None, Status.INFEASIBLE

    # drive artificials out of the basis; drop rows that are redundant
    keep = []
    for r in range(m):
        if basis[r] >= N:
            mag = np.abs(T[r, :N])
            if mag.max(initial=0.0) <= FEAS_TOL:
                continue
            _pivot(T, basis, r, int(np.argmax(mag)))
        keep.append(r)
    T = np.vstack([T[keep][:, list(range(N)) + [N + m]], np.zeros((1, N + 1))])
    basis = [basis[r] for r in keep]
    m2 = len(keep)

    # phase 2 objective row: reduced costs c_j - c_B B^-1 a_j
    T[m2, :N] = c
    T[m2, -1] = 0.0
    for r, j in enumerate(basis):
        if T[m2, j] != 0.0:
            T[m2] -= T[m2, j] * T[r]
    if not _pivot_loop(T, basis, ncols=N):
        return None, Status.UNBOUNDED
    u = np.zeros(N)
    for r, j in enumerate(basis):
        u[j] = T[r, -1]
    # refactor: the tableau drifts after many pivots, so recompute x_B = B^-1 b
    B = A[np.ix_(keep, basis)]
    try:
        xb = np.linalg.solve(B, b[keep])
    except np.linalg.LinAlgError:
        xb = None
    if xb is not None and np.all(np.isfinite(xb)) and xb.min() > -1e-7:
        u = np.zeros(N)
        u[basis] = xb
    return np.maximum(u, 0.0), Status.OPTIMAL


def _pivot_loop(T: np.ndarray, basis: list, ncols: int) -> bool:
    """Bland's rule. Returns False if the objective is unbounded below."""
    m = len(basis)
    for _ in range(MAX_PIVOTS):
        red = T[m, :ncols]
        entering = np.flatnonzero(red < -FEAS_TOL)
        if entering.size == 0:
            return True
        j = int(entering[0])
        col = T[:m, j]
        pos = np.flatnonzero(col > FEAS_TOL)
        if pos.size == 0:
            return False
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + FEAS_TOL * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, basis, r, j)
    raise SolverError("simplex exceeded pivot limit (cycling?)")


def _pivot(T: np.ndarray, basis: list, r: int, j: int) -> None:
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    basis[r] = j


# -- cutting planes ---------------------------------------------------------


@dataclass
class ConvexConstraint:
    """``evaluate(v) <= bound`` with ``evaluate`` convex on the LP-feasible set.

    ``anchor`` is an optional LP-feasible point satisfying the constraint; when
    given, the solver reports the duality-style gap between the relaxation
    value and a feasible point on the segment towards the LP optimum.
    """

    evaluate: Callable[[np.ndarray], float]
    bound: float
    anchor: Optional[np.ndarray] = None
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def subgradient(self, v: np.ndarray) -> np.ndarray:
        if self.gradient is not None:
            return np.asarray(self.gradient(v), dtype=float)
        return numerical_gradient(self.evaluate, v)


def numerical_gradient(f: Callable[[np.ndarray], float], v: np.ndarray, h: float = 1e-7) -> np.ndarray:
    g = np.empty_like(v, dtype=float)
    for k in range(len(v)):
        e = np.zeros_like(v, dtype=float)
        e[k] = h
        g[k] = (f(v + e) - f(v - e)) / (2 * h)
    return g


def solve_convex_cut(
    lp: LinearProgram,
    cc: ConvexConstraint,
    sense: str = "min",
    tol: float = 1e-6,
    max_cuts: int = 200,
    value_tol: float = 0.0,
    method: str = "auto",
) -> LpSolution:
    """Kelley cutting planes for ``min/max c.v`` under ``lp`` and ``cc``.

    Stops once the relaxation optimum satisfies the convex constraint within
    ``tol``, or, when an anchor is known, once the relaxation value is within
    ``value_tol`` of a feasible point, or once a cut stops moving the
    relaxation optimum even under HiGHS. The returned value is the relaxation
    optimum, so it never lies inside the true optimum.
    """
    work = lp.copy()
    # Equalities hold on the whole feasible set, so only the gradient's
    # component in their null space matters; dropping the rest keeps cut rows
    # from becoming near-combinations of equality rows.
    if lp.eq_constraints:
        E = np.array([a for a, _ in lp.eq_constraints])
        proj = np.eye(lp.nvars) - np.linalg.pinv(E) @ E
    else:
        proj = np.eye(lp.nvars)
    prev = None
    for k in range(max_cuts + 1):
        sol = solve_lp(work, sense, method)
        if not sol.optimal:
            sol.cuts = k
            return sol
        v = sol.point
        if prev is not None and np.max(np.abs(v - prev)) < 1e-12:
            # the last cut was shallower than the solver's feasibility slack
            if method != "highs":
                method = "highs"
                sol = solve_lp(work, sense, method)
                v = sol.point
            if not sol.optimal or np.max(np.abs(v - prev)) < 1e-12:
                # relaxation optimum is still an outer bound
                sol.cuts = k
                sol.gap = _cut_gap(lp, cc, v, sol.value) if sol.optimal else float("nan")
                return sol
        prev = v
        gv = cc.evaluate(v)
        if gv <= cc.bound + tol:
            sol.cuts = k
            sol.gap = _cut_gap(lp, cc, v, sol.value)
            return sol
        if value_tol > 0.0 and cc.anchor is not None:
            gap = _cut_gap(lp, cc, v, sol.value)
            if gap <= value_tol:
                sol.cuts = k
                sol.gap = gap
                return sol
        if k == max_cuts:
            break
        grad = proj @ cc.subgradient(v)
        # g(v_k) + grad.(v - v_k) <= bound, scaled to a unit-norm row
        scale = np.linalg.norm(grad)
        if not np.isfinite(scale) or scale == 0.0:
            raise SolverError("cutting plane hit a flat or non-finite gradient")
        work.add_ineq(grad / scale, (cc.bound - gv + grad @ v) / scale)
    raise SolverError("cutting plane did not converge")


def _cut_gap(lp: LinearProgram, cc: ConvexConstraint, v: np.ndarray, value: float) -> float:
    if cc.anchor is None:
        return float("nan")
    a = np.asarray(cc.anchor, dtype=float)
    if cc.evaluate(a) > cc.bound:
        return float("nan")
    lo, hi = 0.0, 1.0
    if cc.evaluate(v) <= cc.bound:
        lo = 1.0
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if cc.evaluate(a + mid * (v - a)) <= cc.bound:
                lo = mid
            else:
                hi = mid
    inner = float(lp.objective @ (a + lo * (v - a)))
    return abs(value - inner)


def vertex_enumeration(lp: LinearProgram, sense: str = "min") -> LpSolution:
    """Brute-force reference: try every basis of the inequality form.

    Only meant for tiny programs (test oracle). Every vertex of the feasible
    polytope is the unique solution of ``nvars`` active constraints.
    """
    from itertools import combinations

    n = lp.nvars
    eqs = [(a, b) for a, b in lp.eq_constraints]
    ineqs = [(a, b) for a, b in lp.ineq_constraints]
    for k, (lo, hi) in enumerate(lp.var_bounds):
        e = np.zeros(n)
        e[k] = 1.0
        ineqs.append((-e, -lo))
        if np.isfinite(hi):
            ineqs.append((e, hi))
    rank_eq = np.linalg.matrix_rank(np.array([a for a, _ in eqs])) if eqs else 0
    need = n - rank_eq
    best = None
    for combo in combinations(range(len(ineqs)), need):
        rows = [a for a, _ in eqs] + [ineqs[i][0] for i in combo]
        rhs = [b for _, b in eqs] + [ineqs[i][1] for i in combo]
        M = np.array(rows).reshape(-1, n)
        if np.linalg.matrix_rank(M) < n:
            continue
        v, *_ = np.linalg.lstsq(M, np.array(rhs), rcond=None)
        if lp.residual(v) > 1e-9:
            continue
        val = float(lp.objective @ v)
        if best is None or (val < best[0] if sense == "min" else val > best[0]):
            best = (val, v)
    if best is None:
        return LpSolution(Status.INFEASIBLE)
    return LpSolution(Status.OPTIMAL, best[0], best[1])
