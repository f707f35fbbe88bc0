import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from partialid.core import BinaryJoint, IvJoint

import acceptance_log

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

WORKED = (0.3, 0.2, 0.1, 0.4)


@pytest.fixture
def worked():
    return BinaryJoint.from_cells(*WORKED)


def random_joints(k: int, seed: int, alpha: float = 1.0):
    rng = np.random.default_rng(seed)
    return [BinaryJoint(rng.dirichlet(np.full(4, alpha)).reshape(2, 2)) for _ in range(k)]


def random_iv_joint(rng) -> IvJoint:
    return IvJoint(float(rng.uniform(0.1, 0.9)), rng.dirichlet(np.ones(4), size=2).reshape(2, 2, 2))


def iv_joint_from_types(rng, concentration: float = 1.0) -> IvJoint:
    """Observable tables implied by a random compliance x outcome type distribution."""
    from partialid.em_bounds import _CONSISTENT, Dag

    mass = rng.dirichlet(np.full(16, concentration))
    return IvJoint(float(rng.uniform(0.2, 0.8)), (_CONSISTENT[Dag.IV] @ mass).reshape(2, 2, 2))


@st.composite
def joints(draw, allow_zero: bool = True):
    lo = 0.0 if allow_zero else 0.01
    w = [draw(st.floats(lo, 1.0)) for _ in range(4)]
    if sum(w) == 0:
        w[0] = 1.0
    p = np.array(w) / sum(w)
    return BinaryJoint(p.reshape(2, 2) / p.sum())


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
