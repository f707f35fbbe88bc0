"""Algorithm registry: parses names like ``ATE_entropybounds-0.80--binned``.

A name is ``<query>_<method>[-<parameter>][--binned]``. The registry checks
applicability against a scenario up front and runs one algorithm on one
simulation, turning any ``BoundFailure`` into a failed outcome.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .closedform import manski_ate, ols_ate_ci, tianpearl_pns, tsls_ate_ci
from .core import (
    BoundFailure,
    BoundOutcome,
    Dataset,
    Failure,
    Query,
    clip_to_ceiling,
    empirical_binary_joint,
    empirical_iv_joint,
)
from .em_bounds import Dag, EmConfig, emcc_bounds
from .entropy_bounds import Theta, ThetaSource, entropy_ate, entropy_pns
from .lp_bounds import conf_lp_bounds, iv_lp_bounds, zhangbareinboim_ate
from .scenarios import Scenario, binarize

BINNED = "--binned"
CI_LEVELS = ("0.95", "0.98", "0.99")
THETA_SOURCES = {s.value: s for s in ThetaSource if s is not ThetaSource.FIXED}

# method -> (queries, parameter kind); kind None means no parameter
METHODS = {
    "manski": ({Query.ATE}, None),
    "tianpearl": ({Query.PNS}, None),
    "OLS": ({Query.ATE}, "level"),
    "2SLS": ({Query.ATE}, "level"),
    "autobound": ({Query.ATE, Query.PNS}, None),
    "causaloptim": ({Query.ATE, Query.PNS}, None),
    "entropybounds": ({Query.ATE, Query.PNS}, "theta"),
    "zaffalonbounds": ({Query.ATE, Query.PNS}, None),
    "zhangbareinboim": ({Query.ATE}, None),
}
# methods that read the outcome as binary and so need --binned on continuous data
DISCRETE = {"manski", "tianpearl", "autobound", "causaloptim", "entropybounds", "zaffalonbounds"}


class SpecError(ValueError):
    """A requested algorithm is malformed or not applicable."""


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    query: Query
    method: str
    param: Optional[str]
    binned: bool

    @classmethod
    def parse(cls, name: str) -> "AlgorithmSpec":
        base, binned = (name[: -len(BINNED)], True) if name.endswith(BINNED) else (name, False)
        q, sep, rest = base.partition("_")
        if not sep or q not in ("ATE", "PNS"):
            raise SpecError(f"{name}: expected '<ATE|PNS>_<method>'")
        method, _, param = rest.partition("-")
        if method not in METHODS:
            raise SpecError(f"{name}: unknown method {method!r}")
        queries, kind = METHODS[method]
        if Query(q) not in queries:
            raise SpecError(f"{name}: {method} does not bound the {q}")
        param = param or None
        if kind is None and param is not None:
            raise SpecError(f"{name}: {method} takes no parameter")
        if kind is not None and param is None:
            raise SpecError(f"{name}: {method} needs a parameter")
        if kind == "level":
            try:
                lvl = float(param)
            except ValueError:
                raise SpecError(f"{name}: bad confidence level {param!r}") from None
            if not 0 < lvl < 1:
                raise SpecError(f"{name}: confidence level must be in (0, 1)")
        if kind == "theta" and param not in THETA_SOURCES:
            try:
                if float(param) < 0:
                    raise ValueError
            except ValueError:
                raise SpecError(f"{name}: bad theta {param!r}") from None
        return cls(name, Query(q), method, param, binned)

    def problems(self, scenario: Scenario) -> List[str]:
        out = []
        m = self.method
        if m == "2SLS" and not scenario.has_instrument:
            out.append(f"{self.name}: 2SLS requires an instrument")
        if m == "OLS" and scenario.has_instrument:
            out.append(f"{self.name}: OLS is only run in scenarios without an instrument")
        if m == "zhangbareinboim":
            if scenario is not Scenario.CONT_IV:
                out.append(f"{self.name}: needs an instrument and a continuous outcome")
            if self.binned:
                out.append(f"{self.name}: works on the continuous outcome, drop --binned")
        if self.query is Query.PNS and scenario.continuous:
            out.append(f"{self.name}: no PNS ground truth for a continuous outcome")
        if m in DISCRETE and scenario.continuous and not self.binned:
            out.append(f"{self.name}: continuous outcome, use {self.name}{BINNED}")
        if self.binned and not scenario.continuous:
            out.append(f"{self.name}: --binned only applies to continuous outcomes")
        if self.param in (ThetaSource.TRUE.value, ThetaSource.UNDERSPECIFY.value) and scenario.continuous:
            out.append(f"{self.name}: H(U) is only known for a binary confounder")
        return out


def check_algorithms(names, scenario: Scenario) -> List[AlgorithmSpec]:
    specs, problems = [], []
    for n in names:
        try:
            s = AlgorithmSpec.parse(n)
        except SpecError as exc:
            problems.append(str(exc))
            continue
        problems.extend(s.problems(Scenario(scenario)))
        specs.append(s)
    if problems:
        raise SpecError("incompatible algorithms:\n  " + "\n  ".join(problems))
    return specs


def default_algorithms(scenario: Scenario) -> List[str]:
    scenario = Scenario(scenario)
    names = [
        "ATE_manski",
        "ATE_OLS-0.95",
        "ATE_2SLS-0.95",
        "ATE_autobound",
        "ATE_entropybounds-0.80",
        "ATE_entropybounds-trueTheta",
        "ATE_entropybounds-randomTheta",
        "ATE_zaffalonbounds",
        "ATE_zhangbareinboim",
        "PNS_tianpearl",
        "PNS_autobound",
        "PNS_entropybounds-0.80",
        "PNS_entropybounds-trueTheta",
        "PNS_entropybounds-randomTheta",
        "PNS_zaffalonbounds",
    ]
    out = []
    for n in names:
        s = AlgorithmSpec.parse(n)
        if s.problems(scenario) and s.method in DISCRETE and scenario.continuous:
            s = AlgorithmSpec.parse(n + BINNED)
        if not s.problems(scenario):
            out.append(s.name)
    return out


def derived_seed(master_seed: int, scenario: Scenario, j: int, algorithm: str) -> int:
    tag = int.from_bytes(hashlib.blake2b(algorithm.encode(), digest_size=8).digest(), "little")
    ss = np.random.SeedSequence([master_seed, Scenario(scenario).index, j, tag])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SimContext:
    """What an algorithm may know about a simulation besides its data."""

    scenario: Scenario
    j: int
    master_seed: int
    confounder_entropy: Optional[float] = None


@dataclass(frozen=True)
class AlgorithmResult:
    outcome: BoundOutcome
    theta: Optional[float] = None
    thetaerror: Optional[float] = None


def resolve_theta(spec: AlgorithmSpec, ctx: SimContext) -> Theta:
    p = spec.param
    if p not in THETA_SOURCES:
        return Theta(float(p))
    src = THETA_SOURCES[p]
    if src is ThetaSource.RANDOM:
        rng = np.random.default_rng(derived_seed(ctx.master_seed, ctx.scenario, ctx.j, spec.name))
        return Theta(float(rng.random()), src)
    if ctx.confounder_entropy is None:
        raise BoundFailure("confounder entropy unknown")
    h = ctx.confounder_entropy
    if src is ThetaSource.TRUE:
        return Theta(h, src)
    rng = np.random.default_rng(derived_seed(ctx.master_seed, ctx.scenario, ctx.j, spec.name))
    return Theta(float(rng.uniform(0.0, h)), src)


def _compute(spec: AlgorithmSpec, d: Dataset, ctx: SimContext, em_cfg: EmConfig):
    """Returns (interval, theta or None)."""
    if spec.binned:
        d = binarize(d)
    m, q = spec.method, spec.query
    if m == "OLS":
        return ols_ate_ci(d, float(spec.param)), None
    if m == "2SLS":
        return tsls_ate_ci(d, float(spec.param)), None
    if m == "zhangbareinboim":
        return zhangbareinboim_ate(d), None
    if m in ("manski", "tianpearl"):
        j = empirical_binary_joint(d)
        return (manski_ate(j) if m == "manski" else tianpearl_pns(j)), None
    if m in ("autobound", "causaloptim"):
        if d.has_instrument:
            return iv_lp_bounds(empirical_iv_joint(d), q), None
        return conf_lp_bounds(empirical_binary_joint(d), q), None
    if m == "entropybounds":
        theta = resolve_theta(spec, ctx)
        j = empirical_binary_joint(d)
        b = entropy_ate(j, theta) if q is Query.ATE else entropy_pns(j, theta)
        return b, theta.value
    if m == "zaffalonbounds":
        seed = derived_seed(ctx.master_seed, ctx.scenario, ctx.j, spec.name)
        cfg = EmConfig(
            runs=em_cfg.runs,
            maxiter=em_cfg.maxiter,
            loglik_tol=em_cfg.loglik_tol,
            seed=seed,
            concentration=em_cfg.concentration,
            max_parallel=em_cfg.max_parallel,
        )
        if d.has_instrument:
            return emcc_bounds(empirical_iv_joint(d), Dag.IV, q, cfg), None
        return emcc_bounds(empirical_binary_joint(d), Dag.CONF, q, cfg), None
    raise AssertionError(m)


def run_algorithm(
    spec: AlgorithmSpec, d: Dataset, ctx: SimContext, em_cfg: EmConfig = EmConfig()
) -> AlgorithmResult:
    t0 = time.perf_counter()
    theta = None
    try:
        bound, theta = _compute(spec, d, ctx, em_cfg)
        result = clip_to_ceiling(bound, spec.query)
    except BoundFailure as exc:
        result = Failure(exc.reason)
    runtime = time.perf_counter() - t0
    err = None
    if theta is not None and ctx.confounder_entropy is not None:
        err = ctx.confounder_entropy - theta
    return AlgorithmResult(BoundOutcome(spec.name, spec.query, result, runtime), theta, err)
