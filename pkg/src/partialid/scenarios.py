"""Randomised structural causal models for the five benchmark scenarios.

Each simulation j draws its own coefficients, link functions and noise from a
generator seeded by (master seed, scenario, j), so any single simulation can
be regenerated in isolation. Gaussian draws use NumPy's ``default_rng``
(PCG64 with the ziggurat normal sampler).

Ground truths are finite-population averages over the n simulated units. For
the PNS, the two counterfactual Bernoulli draws share one exogenous uniform
per unit (comonotone coupling), so a unit contributes max(0, p1 - p0).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

import numpy as np
from scipy.special import expit, ndtr

from .core import Dataset, binary_entropy, invert_binary_entropy


class Scenario(str, enum.Enum):
    BINARY_CONF = "BinaryConf"
    BINARY_IV = "BinaryIV"
    CONT_CONF = "ContConf"
    CONT_IV = "ContIV"
    BINARY_ENTROPY_CONF = "BinaryEntropyConf"

    @property
    def has_instrument(self) -> bool:
        return self in (Scenario.BINARY_IV, Scenario.CONT_IV)

    @property
    def continuous(self) -> bool:
        return self in (Scenario.CONT_CONF, Scenario.CONT_IV)

    @property
    def index(self) -> int:
        return list(Scenario).index(self)


SQUASHERS = ("sigmoid", "half-tanh", "softplus-ratio", "probit")

# the printed list has tanh twice; both entries stay, doubling its weight
TRANSFORMS = (
    "identity",
    "sin",
    "cos",
    "tanh",
    "log1p-abs",
    "gaussian",
    "sigmoid",
    "exp-clip",
    "tanh",
    "shifted-sigmoid",
    "sin-pi",
    "clip-fifth",
    "softsign",
)

ENTROPY_LEVELS = tuple(round(0.05 + 0.1 * k, 2) for k in range(10))


def squash(fid: Union[int, str], x):
    name = SQUASHERS[fid] if isinstance(fid, int) else fid
    x = np.asarray(x, dtype=float)
    if name == "sigmoid":
        return expit(x)
    if name == "half-tanh":
        return 0.5 * (1.0 + np.tanh(x))
    if name == "softplus-ratio":
        sp = np.logaddexp(0.0, x)
        return sp / (1.0 + sp)
    if name == "probit":
        return ndtr(x)
    raise ValueError(f"unknown squashing function {fid!r}")


def transform(gid: int, x, mu: float = 0.0):
    """Entry ``gid`` of the transform list; ``mu`` only matters for the shifted sigmoid."""
    name = TRANSFORMS[gid]
    x = np.asarray(x, dtype=float)
    if name == "identity":
        return x
    if name == "sin":
        return np.sin(x)
    if name == "cos":
        return np.cos(x)
    if name == "tanh":
        return np.tanh(x)
    if name == "log1p-abs":
        return np.log1p(np.abs(x))
    if name == "gaussian":
        return np.exp(-(x**2))
    if name == "sigmoid":
        return expit(x)
    if name == "exp-clip":
        return np.exp(np.clip(x, -5.0, 5.0))
    if name == "shifted-sigmoid":
        return expit(x - mu)
    if name == "sin-pi":
        return np.sin(np.pi * x)
    if name == "clip-fifth":
        return np.clip(x / 5.0, -1.0, 1.0)
    if name == "softsign":
        return x / (1.0 + np.abs(x))
    raise AssertionError(name)


@dataclass(frozen=True)
class SimulationConfig:
    scenario: Scenario
    N: int = 2000
    n: int = 500
    master_seed: int = 0
    coupling: str = "comonotone"

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if self.N < 1 or self.n < 2:
            raise ValueError("need N >= 1 and n >= 2")
        if self.coupling not in ("comonotone", "independent"):
            raise ValueError(f"unknown coupling {self.coupling!r}")


@dataclass(frozen=True)
class StructuralParams:
    alpha_x: float
    alpha_y: float
    beta_ux: float
    beta_uy: float
    beta_xy: float
    f_x: str
    f_y: str
    beta_zx: Optional[float] = None
    p_u: Optional[float] = None
    sigma_u: Optional[float] = None
    p_z: Optional[float] = None
    g_ux: Optional[int] = None
    g_uy: Optional[int] = None
    sigma_x: Optional[float] = None
    sigma_y: Optional[float] = None
    h_target: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def confounder_entropy(self) -> Optional[float]:
        """H(U) in bits for a binary confounder."""
        return None if self.p_u is None else binary_entropy(self.p_u)


@dataclass(frozen=True)
class SimulationRecord:
    scenario: Scenario
    j: int
    seed: int
    dataset: Dataset
    true_ate: float
    params: StructuralParams
    true_pns: Optional[float] = None

    def truth_dict(self) -> dict:
        return {
            "scenario": self.scenario.value,
            "j": self.j,
            "seed": self.seed,
            "true_ate": self.true_ate,
            "true_pns": self.true_pns,
            "params": self.params.to_dict(),
        }


def beta_xy_grid(j: int, N: int) -> float:
    if N == 1:
        return -5.0
    return -5.0 + 10.0 * (j - 1) / (N - 1)


def entropy_level(j: int, N: int) -> float:
    """H_target for simulation j: ten equal blocks of consecutive indices."""
    return ENTROPY_LEVELS[min(9, (10 * (j - 1)) // N)]


def simulation_seed(cfg: SimulationConfig, j: int) -> int:
    ss = np.random.SeedSequence([cfg.master_seed, cfg.scenario.index, j])
    return int(ss.generate_state(1, np.uint64)[0])


def _bimodal(rng: np.random.Generator) -> float:
    centre = 1.0 if rng.random() < 0.5 else -1.0
    return float(rng.normal(centre, 0.5))


def _pick(over, key, value):
    return over[key] if over and key in over else value


def _common(rng, j, cfg, over=None):
    kw = dict(
        alpha_x=float(rng.normal()),
        alpha_y=float(rng.normal()),
        beta_ux=_bimodal(rng),
        beta_uy=_bimodal(rng),
        beta_xy=beta_xy_grid(j, cfg.N),
        f_x=SQUASHERS[int(rng.integers(len(SQUASHERS)))],
        f_y=SQUASHERS[int(rng.integers(len(SQUASHERS)))],
    )
    return {k: _pick(over, k, v) for k, v in kw.items()}


def _instrument(rng, n, over=None):
    p_z = _pick(over, "p_z", float(rng.random()))
    beta_zx = _pick(over, "beta_zx", _bimodal(rng))
    z = (rng.random(n) < p_z).astype(float)
    return p_z, beta_zx, z


def _check(j: int, cfg: SimulationConfig):
    if not 1 <= j <= cfg.N:
        raise ValueError(f"simulation index {j} outside 1..{cfg.N}")


def _binary(cfg: SimulationConfig, j: int, rng, p_u: float, noisy: bool, h_target=None, over=None):
    n = cfg.n
    kw = _common(rng, j, cfg, over)
    iv = cfg.scenario.has_instrument
    if iv:
        p_z, beta_zx, z = _instrument(rng, n, over)
    u = (rng.random(n) < p_u).astype(float)
    if noisy:
        sigma = np.abs(rng.normal(size=n))
        eps_x = sigma * rng.normal(size=n)
        eps_y = sigma * rng.normal(size=n)
    else:
        eps_x = eps_y = np.zeros(n)
    xstar = kw["alpha_x"] + kw["beta_ux"] * u + eps_x
    if iv:
        xstar = xstar + beta_zx * z
    x = (rng.random(n) < squash(kw["f_x"], xstar)).astype(float)
    base = kw["alpha_y"] + kw["beta_uy"] * u + eps_y
    p0 = squash(kw["f_y"], base)
    p1 = squash(kw["f_y"], base + kw["beta_xy"])
    v = rng.random(n)  # shared exogenous uniform for both counterfactual worlds
    y = (v < np.where(x == 1, p1, p0)).astype(float)
    if cfg.coupling == "comonotone":
        pns = np.maximum(0.0, p1 - p0)
    else:
        pns = p1 * (1.0 - p0)
    params = StructuralParams(
        **kw,
        p_u=float(p_u),
        beta_zx=beta_zx if iv else None,
        p_z=p_z if iv else None,
        h_target=h_target,
    )
    d = Dataset(x=x, y=y, z=z if iv else None)
    return d, float(np.mean(p1 - p0)), float(np.mean(pns)), params


def _continuous(cfg: SimulationConfig, j: int, rng, over=None):
    n = cfg.n
    kw = _common(rng, j, cfg, over)
    iv = cfg.scenario.has_instrument
    if iv:
        p_z, beta_zx, z = _instrument(rng, n, over)
    g_ux = _pick(over, "g_ux", int(rng.integers(len(TRANSFORMS))))
    g_uy = _pick(over, "g_uy", int(rng.integers(len(TRANSFORMS))))
    sigma_u = _pick(over, "sigma_u", abs(float(rng.normal())))
    u = sigma_u * rng.normal(size=n)
    sigma_x = _pick(over, "sigma_x", abs(float(rng.normal())))
    sigma_y = _pick(over, "sigma_y", abs(float(rng.normal())))
    # per-unit scales: half-normal with scale sigma_x (resp. sigma_y)
    eps_x = np.abs(sigma_x * rng.normal(size=n)) * rng.normal(size=n)
    eps_y = np.abs(sigma_y * rng.normal(size=n)) * rng.normal(size=n)
    mu = float(u.mean())
    xstar = kw["alpha_x"] + kw["beta_ux"] * transform(g_ux, u, mu) + eps_x
    if iv:
        xstar = xstar + beta_zx * z
    x = (rng.random(n) < squash(kw["f_x"], xstar)).astype(float)
    base = kw["alpha_y"] + kw["beta_uy"] * transform(g_uy, u, mu) + eps_y
    y0 = squash(kw["f_y"], base)
    y1 = squash(kw["f_y"], base + kw["beta_xy"])
    y = np.where(x == 1, y1, y0)
    params = StructuralParams(
        **kw,
        sigma_u=sigma_u,
        g_ux=g_ux,
        g_uy=g_uy,
        sigma_x=sigma_x,
        sigma_y=sigma_y,
        beta_zx=beta_zx if iv else None,
        p_z=p_z if iv else None,
    )
    return Dataset(x=x, y=y, z=z if iv else None), float(np.mean(y1 - y0)), None, params


def _record(cfg, j, seed, out) -> SimulationRecord:
    d, ate, pns, params = out
    return SimulationRecord(cfg.scenario, j, seed, d, ate, params, pns)


def gen_binary_conf(j: int, cfg: SimulationConfig, overrides: Optional[dict] = None) -> SimulationRecord:
    """``overrides`` pins named StructuralParams fields; the draws they replace
    are still made, so the rest of the simulation is unchanged."""
    _check(j, cfg)
    seed = simulation_seed(cfg, j)
    rng = np.random.default_rng(seed)
    p_u = _pick(overrides, "p_u", float(rng.random()))
    return _record(cfg, j, seed, _binary(cfg, j, rng, p_u, noisy=True, over=overrides))


gen_binary_iv = gen_binary_conf  # the instrument is switched on by cfg.scenario


def gen_cont_conf(j: int, cfg: SimulationConfig, overrides: Optional[dict] = None) -> SimulationRecord:
    _check(j, cfg)
    seed = simulation_seed(cfg, j)
    return _record(cfg, j, seed, _continuous(cfg, j, np.random.default_rng(seed), overrides))


gen_cont_iv = gen_cont_conf


def gen_binary_entropy_conf(j: int, cfg: SimulationConfig, overrides: Optional[dict] = None) -> SimulationRecord:
    _check(j, cfg)
    seed = simulation_seed(cfg, j)
    rng = np.random.default_rng(seed)
    h = entropy_level(j, cfg.N)
    p_u = invert_binary_entropy(h, reflect=bool(rng.random() < 0.5))
    return _record(cfg, j, seed, _binary(cfg, j, rng, p_u, noisy=False, h_target=h, over=overrides))


_GENERATORS = {
    Scenario.BINARY_CONF: gen_binary_conf,
    Scenario.BINARY_IV: gen_binary_iv,
    Scenario.CONT_CONF: gen_cont_conf,
    Scenario.CONT_IV: gen_cont_iv,
    Scenario.BINARY_ENTROPY_CONF: gen_binary_entropy_conf,
}


def generate(cfg: SimulationConfig, j: int, overrides: Optional[dict] = None) -> SimulationRecord:
    return _GENERATORS[cfg.scenario](j, cfg, overrides)


def sweep(cfg: SimulationConfig, indices: Optional[Iterable[int]] = None) -> Iterator[SimulationRecord]:
    for j in indices if indices is not None else range(1, cfg.N + 1):
        yield generate(cfg, j)


def level_indices(N: int, level: float) -> list:
    """Simulation indices of one BinaryEntropyConf entropy level."""
    if not any(math.isclose(level, h) for h in ENTROPY_LEVELS):
        raise ValueError(f"entropy level must be one of {ENTROPY_LEVELS}")
    return [j for j in range(1, N + 1) if math.isclose(entropy_level(j, N), level)]


def binarize(d: Dataset, threshold: float = 0.5) -> Dataset:
    return Dataset(x=d.x, y=(d.y > threshold).astype(float), z=d.z)


def write_truth_json(rec: SimulationRecord, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(rec.truth_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_truth_json(path: Union[str, Path]) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
