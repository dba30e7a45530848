import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from smallimpact import frictionless as fr
from smallimpact import matcore, simkit as sk
from smallimpact.errors import CeUndefined, DomainError, InsufficientHorizon, SimulationError, StiffnessError
from conftest import random_spd


def bach(mu=0.05, sigma=0.2, eta=1.0, T=1.0, impact=1.0):
    return fr.solve_bachelier_exp(mu, sigma, eta, T, impact=impact)


def start(sol, theta=None, s=1.0):
    th = sol.theta0(0.0, [s], None, 0.0) if theta is None else np.atleast_1d(theta)
    return fr.StatePoint(0.0, [s], [], 0.0, th)


def test_mc_config_validation():
    with pytest.raises(DomainError):
        sk.McConfig(1, 0.1)
    with pytest.raises(DomainError):
        sk.McConfig(10, 0.3).n_steps(1.0)
    assert sk.McConfig(10, 0.25).n_steps(1.0) == 4


def test_trade_rate_examples():
    sol = bach(0.0, 1.0, 1.0)
    th0 = sol.theta0(0.0, [1.0], None, 0.0)
    assert np.all(sk.trade_rate(sol, fr.StatePoint(0.0, [1.0], [], 0.0, th0), 1e-4) == 0)
    rate = sk.trade_rate(sol, fr.StatePoint(0.0, [1.0], [], 0.0, th0 - 1.0), 1e-4)
    assert rate[0] == pytest.approx(70.7107, abs=1e-4)
    with pytest.raises(DomainError):
        sk.trade_rate(sol, fr.StatePoint(0.0, [1.0], [], 0.0, th0), 0.0)


@given(st.floats(0.05, 1.0), st.floats(0.1, 5.0), st.floats(0.2, 4.0), st.floats(1e-6, 1e-2), st.floats(-3, 3))
def test_trade_rate_scalar_form(sigma, impact, eta, lam, dev):
    sol = bach(0.0, sigma, eta, impact=impact)
    rate = sk.trade_rate(sol, fr.StatePoint(0.0, [1.0], [], 0.0, [-dev]), lam)[0]
    assert rate == pytest.approx(np.sqrt(sigma ** 2 / (2 * lam * impact / eta)) * dev, rel=1e-12, abs=1e-300)


def test_trade_rate_lyapunov(rng):
    for _ in range(1000):
        d = int(rng.integers(1, 5))
        sig = np.linalg.cholesky(random_spd(rng, d)) * 0.3
        sol = fr.BachelierSolution(fr.MarketModel.bachelier(np.zeros(d), sig, 1.0, 1.0, impact=random_spd(rng, d)))
        theta = rng.normal(size=d)
        lam = 10 ** rng.uniform(-6, -2)
        rate = sk.trade_rate(sol, fr.StatePoint(0.0, np.ones(d), [], 0.0, theta), lam)
        K = sk.rate_matrix(sol, 0.0, np.ones(d), None, 0.0, lam)
        dt = 0.01 / np.abs(np.linalg.eigvals(K)).max()
        G = sol.impact_bundle(0.0, np.ones(d), None, 0.0).G
        assert matcore.varpi(G, theta + rate * dt) < matcore.varpi(G, theta)


def test_frictionless_policy_rejected_with_impact():
    sol = bach()
    with pytest.raises(DomainError):
        sk.simulate_paths(sol.model, start(sol), sk.PolicySpec.frictionless(), 1e-4, sk.McConfig(4, 0.1), sol=sol)


def test_zero_volatility_bookkeeping():
    sol = bach(0.0, 1e-9)
    ens = sk.simulate_paths(sol.model, start(sol, 0.5), sk.PolicySpec.constant_rate(3.0), 1e-2,
                            sk.McConfig(4, 0.01), sol=sol)
    assert np.allclose(ens.X_T, -ens.cost, atol=1e-8)
    assert np.all(ens.cost > 0)


def test_determinism_and_workers():
    sol = bach()
    mc = sk.McConfig(600, 0.02, seed=17)
    runs = [sk.simulate_paths(sol.model, start(sol, 0.0), sk.PolicySpec.asymptotic(), 1e-3, mc, sol=sol, workers=w)
            for w in (1, 1, 3)]
    for r in runs[1:]:
        assert np.array_equal(r.X_T, runs[0].X_T)
        assert np.array_equal(r.objective, runs[0].objective)
    other = sk.simulate_paths(sol.model, start(sol, 0.0), sk.PolicySpec.asymptotic(), 1e-3,
                              sk.McConfig(600, 0.02, seed=18), sol=sol)
    assert not np.array_equal(other.X_T, runs[0].X_T)


def test_path_streams_independent_of_count():
    sol = bach()
    a = sk.simulate_paths(sol.model, start(sol), sk.PolicySpec.asymptotic(), 1e-3, sk.McConfig(300, 0.02, seed=4),
                          sol=sol)
    b = sk.simulate_paths(sol.model, start(sol), sk.PolicySpec.asymptotic(), 1e-3, sk.McConfig(700, 0.02, seed=4),
                          sol=sol)
    assert np.array_equal(a.X_T, b.X_T[:300])


def test_antithetic_pairs():
    sol = bach(0.0)
    ens = sk.simulate_paths(sol.model, start(sol), sk.PolicySpec.frictionless(), 0.0,
                            sk.McConfig(10, 0.1, seed=2, antithetic=True), sol=sol)
    s = ens.S_T[:, 0] - 1.0
    assert np.allclose(s[0::2], -s[1::2], atol=1e-15)


@pytest.mark.parametrize("policy", [sk.PolicySpec.asymptotic(), sk.PolicySpec.constant_rate(5.0)])
def test_wealth_recursion(ou, policy):
    p, model, sol = ou
    zeta = fr.StatePoint(0.0, [1.0], [0.3], 0.0, [0.0])
    ens = sk.simulate_paths(model, zeta, policy, 1e-3, sk.McConfig(50, 0.005, seed=1), sol=sol, keep_paths=True)
    assert sk.wealth_recursion_error(ens) <= 1e-12


def test_simulation_error_reports_step():
    sol = bach()
    bad = sk.PolicySpec.custom(lambda t, S, Y, X, th: np.where(t > 0.25, np.inf, 0.0) + 0 * th)
    with pytest.raises(SimulationError) as info:
        sk.simulate_paths(sol.model, start(sol), bad, 1e-3, sk.McConfig(4, 0.1), sol=sol)
    assert info.value.step == 4 and info.value.path == 0


def test_stiffness_guard():
    sol = bach()
    with pytest.raises(StiffnessError):
        sk.simulate_paths(sol.model, start(sol, 0.0), sk.PolicySpec.asymptotic(), 1e-6, sk.McConfig(4, 0.1), sol=sol)


def test_terminal_objective_cases():
    sol = bach(0.0, 1.0, 2.0)
    ens = sk.simulate_paths(sol.model, start(sol, 0.3), sk.PolicySpec.constant_rate(1.0), 1e-4,
                            sk.McConfig(20, 0.05, seed=3), sol=sol)
    eta, lam = 2.0, 1e-4
    dev = ens.theta_T[:, 0] - ens.theta0_T[:, 0]
    expected = -np.exp(-eta * ens.X_T) * (1 + eta * np.sqrt(lam) * dev ** 2 * np.sqrt(eta / 2))
    assert np.allclose(ens.objective, expected, rtol=1e-12)
    obj0, _ = sk.terminal_objective(ens, sol, 0.0)
    assert np.allclose(obj0, -np.exp(-eta * ens.X_T))
    zero = sk.simulate_paths(sol.model, start(sol), sk.PolicySpec.frictionless(), 0.0, sk.McConfig(5, 0.1), sol=sol)
    assert np.all(zero.penalty == 0)


def test_estimate_value_examples():
    eta = 1.7
    m, se, ce = sk.estimate_value(np.full(5, -np.exp(-eta)), eta)
    assert ce == pytest.approx(1.0) and se == 0.0
    m, se, ce = sk.estimate_value(np.array([-1.0, -np.exp(-2 * eta)]), eta)
    assert m == pytest.approx(-(1 + np.exp(-2 * eta)) / 2)
    assert ce == pytest.approx(-np.log((1 + np.exp(-2 * eta)) / 2) / eta)
    with pytest.raises(CeUndefined):
        sk.estimate_value(np.array([-1.0, 2.0]), eta)


def synthetic(lam, sigma_theta, relax=50.0, n_paths=200, seed=11):
    sigma = 0.2
    kappa = np.sqrt(sigma ** 2 / (2 * lam))
    horizon = relax / kappa
    n = int(np.ceil(kappa * horizon / 0.02))
    sol = bach(0.0, sigma, 1.0, horizon)
    ens = sk.simulate_paths(sol.model, start(sol), sk.PolicySpec.asymptotic(), lam,
                            sk.McConfig(n_paths, horizon / n, seed=seed), sol=sol,
                            target=sk.SyntheticTarget(sigma_theta), keep_paths=True)
    return sk.deviation_statistics(ens, sol, 0.2), sol, ens


def test_stationary_variance_ratio():
    st_, _, _ = synthetic(1e-4, 1.0)
    assert 0.9 <= st_.ratio <= 1.1
    assert st_.threshold_quadratic / st_.theory_var == pytest.approx(2.0, rel=1e-12)


def test_stationary_variance_zero_target_vol():
    st_, _, _ = synthetic(1e-4, 0.0, n_paths=4)
    assert st_.sample_var < 1e-3
    assert st_.theory_var == 0.0


def test_theory_variance_scales_with_lambda():
    a, _, _ = synthetic(1e-4, 1.0, n_paths=4)
    b, _, _ = synthetic(2e-4, 1.0, n_paths=4)
    assert b.theory_var / a.theory_var == pytest.approx(np.sqrt(2), rel=1e-12)


def test_insufficient_horizon():
    with pytest.raises(InsufficientHorizon):
        synthetic(1e-4, 1.0, relax=3.0, n_paths=4)


def test_almgren_chriss_reference():
    ref = sk.almgren_chriss_reference(1.0, 1.0, 1.0, 2.0, 1e-4, 1.0, n_points=11)
    assert ref.deviation[0] == 2.0
    assert ref.kappa == pytest.approx(70.7107, abs=1e-4)
    half = sk.almgren_chriss_reference(1.0, 1.0, 1.0, 2.0, 1e-4, np.log(2) / ref.kappa, n_points=3)
    assert half.deviation[-1] == pytest.approx(1.0, rel=1e-12)


def test_execution_matches_reference_first_order():
    sigma, lam, delta0 = 0.2, 1e-4, 1.0
    kappa = np.sqrt(sigma ** 2 / (2 * lam))
    horizon = 5 / kappa
    errs = []
    for frac in (1e-4, 2e-4):
        sol = bach(0.0, sigma, 1.0, horizon)
        ens = sk.simulate_paths(sol.model, start(sol, delta0), sk.PolicySpec.asymptotic(), lam,
                                sk.McConfig(2, frac * horizon), sol=sol, keep_paths=True)
        ref = sk.almgren_chriss_reference(sigma, 1.0, 1.0, delta0, lam, horizon, n_points=ens.n_steps + 1)
        errs.append(np.max(np.abs(ens.paths["theta"][0, :, 0] - ref.deviation)))
    assert errs[0] < 1e-3 * delta0
    assert errs[1] / errs[0] == pytest.approx(2.0, rel=0.1)


def test_ce_loss_monotone_in_lambda(ou):
    p, model, sol = ou
    zeta = fr.StatePoint(0.0, [1.0], [p.y0], 0.0, sol.theta0(0.0, [1.0], [p.y0], 0.0))
    losses = [sk.policy_ce_loss(sol, zeta, lam, sk.McConfig(1000, 1 / 250, seed=8)) for lam in (1e-3, 4e-3)]
    assert losses[0].ce_loss <= losses[1].ce_loss + 3 * losses[1].stderr


def test_exports(tmp_path):
    sol = bach()
    mc = sk.McConfig(6, 0.1, seed=3)
    ens = sk.simulate_paths(sol.model, start(sol, 0.0), sk.PolicySpec.asymptotic(), 1.0, mc, sol=sol)
    header, rows = sk.ensemble_rows(ens)
    sk.write_csv(tmp_path / "e.csv", header, rows)
    raw = (tmp_path / "e.csv").read_bytes()
    assert b"\r" not in raw
    assert raw.decode().splitlines()[0] == "path,terminal_wealth,objective,trading_cost,terminal_deviation"
    assert len(raw.decode().splitlines()) == 7
    sk.write_summary(tmp_path / "e.json", sk.ensemble_summary(ens, mc))
    summ = json.loads((tmp_path / "e.json").read_text())
    assert summ["config"]["seed"] == 3 and summ["n_paths"] == 6
