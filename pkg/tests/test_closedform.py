import numpy as np
import pytest
from hypothesis import given

from partialid.closedform import ConfidenceLevel, manski_ate, ols_ate_ci, tianpearl_pns, tsls_ate_ci
from partialid.core import BinaryJoint, BoundFailure, Dataset

from conftest import WORKED, joints


@pytest.mark.parametrize(
    "cells, want",
    [(WORKED, (-0.3, 0.7)), ((0, 0, 0, 1), (0.0, 1.0)), ((0.5, 0, 0, 0.5), (0.0, 1.0))],
)
def test_manski_examples(cells, want):
    np.testing.assert_allclose(tuple(manski_ate(BinaryJoint.from_cells(*cells))), want, atol=1e-12)


@pytest.mark.parametrize(
    "cells, want",
    [(WORKED, (0.0, 0.7)), ((0, 0.5, 0.5, 0), (0.0, 0.0)), ((0.5, 0, 0, 0.5), (0.0, 1.0))],
)
def test_tianpearl_examples(cells, want):
    np.testing.assert_allclose(tuple(tianpearl_pns(BinaryJoint.from_cells(*cells))), want, atol=1e-12)


@given(joints())
def test_closed_form_identities(j):
    assert manski_ate(j).width == pytest.approx(1.0, abs=1e-12)
    tp = tianpearl_pns(j)
    assert tp.lower == 0.0 and 0.0 <= tp.upper <= 1.0 + 1e-12


def _fixture(seed=11, n=400, iv=False):
    rng = np.random.default_rng(seed)
    z = (rng.random(n) < 0.5).astype(float)
    u = rng.random(n)
    x = ((0.6 * z + 0.5 * u + 0.2 * rng.random(n)) > 0.6).astype(float) if iv else (rng.random(n) < 0.4).astype(float)
    y = np.clip(0.2 + 0.3 * x + 0.3 * u + 0.1 * rng.normal(size=n), 0, 1)
    return Dataset(x=x, y=y, z=z if iv else None)


def test_ols_matches_normal_equations():
    d = _fixture()
    X = np.column_stack([np.ones(d.n), d.x])
    coef = np.linalg.solve(X.T @ X, X.T @ d.y)
    resid = d.y - X @ coef
    cov = (resid @ resid / (d.n - 2)) * np.linalg.inv(X.T @ X)
    half = 1.959963984540054 * np.sqrt(cov[1, 1])
    got = ols_ate_ci(d, 0.95)
    assert got.lower == pytest.approx(coef[1] - half, abs=1e-8)
    assert got.upper == pytest.approx(coef[1] + half, abs=1e-8)


def test_tsls_matches_two_stage_oracle():
    d = _fixture(iv=True)
    Z = np.column_stack([np.ones(d.n), d.z])
    X = np.column_stack([np.ones(d.n), d.x])
    xhat = Z @ np.linalg.lstsq(Z, X, rcond=None)[0]
    coef = np.linalg.lstsq(xhat, d.y, rcond=None)[0]
    resid = d.y - X @ coef
    cov = (resid @ resid / (d.n - 2)) * np.linalg.inv(xhat.T @ xhat)
    half = 1.959963984540054 * np.sqrt(cov[1, 1])
    got = tsls_ate_ci(d, 0.95)
    assert got.lower == pytest.approx(coef[1] - half, abs=1e-8)
    assert got.upper == pytest.approx(coef[1] + half, abs=1e-8)


def test_perfect_fit_and_compliance():
    x = np.tile([0.0, 1.0], 50)
    np.testing.assert_allclose(tuple(ols_ate_ci(Dataset(x=x, y=x))), (1, 1), atol=1e-12)
    np.testing.assert_allclose(tuple(tsls_ate_ci(Dataset(x=x, y=x, z=x))), (1, 1), atol=1e-12)


def test_null_effect_straddles_zero():
    rng = np.random.default_rng(0)
    d = Dataset(x=(rng.random(5000) < 0.5).astype(float), y=(rng.random(5000) < 0.3).astype(float))
    ci = ols_ate_ci(d)
    assert ci.lower < 0 < ci.upper


def test_failures():
    with pytest.raises(BoundFailure, match="no variance"):
        ols_ate_ci(Dataset(x=np.ones(10), y=np.zeros(10)))
    # z balanced within each treatment arm: zero first stage
    with pytest.raises(BoundFailure, match="instrument"):
        tsls_ate_ci(Dataset(x=np.tile([0.0, 0.0, 1.0, 1.0], 3), y=np.zeros(12), z=np.tile([0.0, 1.0], 6)))
    x = np.repeat([0.0, 1.0], 5)
    with pytest.raises(BoundFailure, match="requires an instrument"):
        tsls_ate_ci(Dataset(x=x, y=x))


def test_width_scales_with_level_and_n():
    small, big = _fixture(n=200), _fixture(n=3200)
    w = [ols_ate_ci(small, c).width for c in (0.95, 0.98, 0.99)]
    assert w[0] < w[1] < w[2]
    assert ols_ate_ci(big).width < ols_ate_ci(small).width / 2


def test_confidence_level_validation():
    assert ConfidenceLevel(0.95).z == pytest.approx(1.959963984540054, abs=1e-12)
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            ConfidenceLevel(bad)
