import numpy as np
import pytest
from hypothesis import given, strategies as st

from smallimpact import matcore
from smallimpact.errors import DomainError, NotPositiveDefinite, NotSymmetric
from conftest import random_spd


def test_sqrt_identity_and_diagonal():
    assert np.allclose(matcore.spd_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(matcore.spd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_sqrt_squares_back(d, seed):
    a = random_spd(np.random.default_rng(seed), d)
    r = matcore.spd_sqrt(a)
    assert np.allclose(r @ r, a, rtol=1e-10, atol=1e-10 * np.abs(a).max())
    assert np.allclose(r, r.T)
    assert np.linalg.eigvalsh(r).min() > 0
    assert np.allclose(matcore.spd_sqrt(a @ a), a, rtol=1e-8, atol=1e-10 * np.abs(a).max())


def test_sqrt_errors():
    with pytest.raises(NotSymmetric):
        matcore.spd_sqrt(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(NotPositiveDefinite):
        matcore.spd_sqrt(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefinite):
        matcore.spd_sqrt(np.diag([1.0, 1e-12]))


def test_sqrt_stack():
    m = np.stack([np.eye(2) * 4, np.diag([1.0, 9.0])])
    assert np.allclose(matcore.spd_sqrt(m), np.stack([np.eye(2) * 2, np.diag([1.0, 3.0])]))


def test_bundle_scalar():
    b = matcore.impact_root_bundle(1.0, 0.2)
    assert b.G[0, 0] == pytest.approx(0.2)
    assert b.Mrate[0, 0] == pytest.approx(0.2)
    b = matcore.impact_root_bundle(4.0, 0.3)
    assert b.G[0, 0] == pytest.approx(0.3 * 2.0)
    assert b.Mrate[0, 0] == pytest.approx(0.3 / 2.0)


def test_bundle_commuting_and_identity(rng):
    sig = rng.normal(size=(3, 3))
    S = sig @ sig.T
    c = 2.5
    b = matcore.impact_root_bundle(c * np.eye(3), sig)
    assert np.allclose(b.G, np.sqrt(c) * matcore.spd_sqrt(S))
    b = matcore.impact_root_bundle(np.eye(3), sig)
    assert np.allclose(b.G, matcore.spd_sqrt(S))
    assert np.allclose(b.Mrate, matcore.spd_sqrt(S))


@given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_bundle_identities(d, seed):
    rng = np.random.default_rng(seed)
    lam = random_spd(rng, d)
    sig = random_spd(rng, d)
    b = matcore.impact_root_bundle(lam, sig)
    assert np.allclose(np.linalg.solve(lam, b.G), b.Mrate, rtol=1e-10, atol=1e-10 * np.abs(b.Mrate).max())
    assert np.linalg.eigvalsh(b.G).min() > 0
    # G L^{-1} G reproduces the covariance
    assert np.allclose(b.G @ np.linalg.solve(lam, b.G), sig @ sig.T, rtol=1e-8, atol=1e-9)


def test_k2_examples():
    G1 = matcore.impact_root_bundle(1.0, 1.0)
    assert matcore.k2_matrix(1.0, -1.0, G1)[0, 0] == pytest.approx(2 ** -0.5, rel=1e-12)
    assert matcore.k2_matrix(1.0, -2.0, G1)[0, 0] == pytest.approx(1.0, rel=1e-12)
    G4 = matcore.impact_root_bundle(16.0, 1.0)
    assert matcore.k2_matrix(1.0, -1.0, G4)[0, 0] == pytest.approx(4 * 2 ** -0.5)
    with pytest.raises(DomainError):
        matcore.k2_matrix(-1.0, -1.0, G1)
    with pytest.raises(DomainError):
        matcore.k2_matrix(1.0, 1.0, G1)


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 5), st.floats(0.01, 5))
def test_k2_is_dxv0_times_penalty_matrix(vx, R, lam, sig):
    b = matcore.impact_root_bundle(lam, sig)
    k2 = matcore.k2_matrix(vx, -vx / R, b)
    assert np.allclose(k2 / vx, b.G / np.sqrt(2 * R), rtol=1e-12)
    # scalar form: k2 = Lambda dxv0 sqrt(sigma^2 / (2 Lambda R))
    assert k2[0, 0] == pytest.approx(lam * vx * np.sqrt(sig ** 2 / (2 * lam * R)), rel=1e-12)


def test_varpi():
    assert matcore.varpi(np.eye(2), np.zeros(2)) == 0.0
    assert matcore.varpi(0.70711, 2.0) == pytest.approx(2.82844)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_varpi_symmetric(xi):
    k2 = np.array([[2.0, 0.3], [0.3, 1.0]])
    xi = np.array(xi)
    assert matcore.varpi(k2, xi) == pytest.approx(matcore.varpi(k2, -xi))
    assert matcore.varpi(k2, xi) >= 0


@given(st.floats(-3, 3), st.floats(0.1, 4))
def test_penalty(dev, c):
    b = matcore.impact_root_bundle(1.0, 1.0)
    assert matcore.liquidation_penalty(0.3, 0.5, b, 0.3) == 0.0
    assert matcore.liquidation_penalty(0.0, 0.5, b, 1.0) == pytest.approx(1.0)
    p1 = matcore.liquidation_penalty(0.0, 0.5, b, dev)
    assert matcore.liquidation_penalty(0.0, 0.5, b, c * dev) == pytest.approx(c * c * p1, rel=1e-12, abs=1e-300)


def test_penalty_bad_risk_tolerance():
    b = matcore.impact_root_bundle(1.0, 1.0)
    with pytest.raises(DomainError):
        matcore.liquidation_penalty(0.0, 0.0, b, 1.0)
