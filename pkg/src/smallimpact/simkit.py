"""Seeded Euler-Maruyama simulation of frictional and frictionless trading.

Paths are simulated in fixed-size blocks. Path ``i`` draws its normals
from a Philox stream keyed by the seed with counter word ``i``, so every
path, and every statistic built from them, is independent of the block
schedule and of the number of worker threads.
"""
import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import matcore
from .errors import CeUndefined, DomainError, InsufficientHorizon, SimulationError, StiffnessError
from .frictionless import StatePoint, q_measure_dynamics

BLOCK = 256
MAX_KAPPA_DT = 0.1


@dataclass(frozen=True)
class McConfig:
    n_paths: int
    dt: float
    seed: int = 0
    antithetic: bool = False

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 2:
            raise DomainError("n_paths must be an integer >= 2")
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must fit in 64 bits")

    def n_steps(self, horizon):
        n = round(horizon / self.dt)
        if n < 1 or abs(n * self.dt - horizon) > 1e-12 * max(1.0, horizon):
            raise DomainError(f"dt={self.dt} does not divide the horizon {horizon}")
        return int(n)


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    kappa: Optional[float] = None
    fn: Optional[Callable] = None

    FRICTIONLESS = "frictionless"
    ASYMPTOTIC = "asymptotic"
    CONSTANT = "constant-rate"
    CUSTOM = "custom"

    @classmethod
    def frictionless(cls):
        return cls(cls.FRICTIONLESS)

    @classmethod
    def asymptotic(cls):
        return cls(cls.ASYMPTOTIC)

    @classmethod
    def constant_rate(cls, kappa):
        return cls(cls.CONSTANT, kappa=float(kappa))

    @classmethod
    def custom(cls, fn):
        """``fn(t, s, y, x, theta) -> rate`` with batch-first arrays."""
        return cls(cls.CUSTOM, fn=fn)


@dataclass(frozen=True)
class SyntheticTarget:
    """Replace theta0 by a Brownian motion with volatility ``sigma_theta``
    per asset, started at ``theta0(zeta0)``."""

    sigma_theta: float


@dataclass
class PathEnsemble:
    t0: float
    dt: float
    n_steps: int
    seed: int
    model_digest: str
    measure: str
    policy: str
    lam: float
    eta: float
    S_T: np.ndarray
    Y_T: np.ndarray
    X_T: np.ndarray
    X0_T: np.ndarray
    theta_T: np.ndarray
    theta0_T: np.ndarray
    cost: np.ndarray
    martingale: np.ndarray
    quad_var: np.ndarray
    integrals: dict
    penalty: Optional[np.ndarray] = None
    objective: Optional[np.ndarray] = None
    paths: Optional[dict] = None
    synthetic_sigma: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def n_paths(self):
        return len(self.X_T)

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


def path_normals(seed, index, n_steps, width):
    key = np.random.SeedSequence(int(seed)).generate_state(2, dtype=np.uint64)
    counter = np.array([0, 0, 0, index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key, counter=counter))
    return gen.standard_normal((n_steps, width))


def _block_normals(mc, start, stop, n_steps, width):
    out = np.empty((stop - start, n_steps, width))
    for row, i in enumerate(range(start, stop)):
        if mc.antithetic:
            z = path_normals(mc.seed, i // 2, n_steps, width)
            out[row] = -z if i % 2 else z
        else:
            out[row] = path_normals(mc.seed, i, n_steps, width)
    return out


def rate_matrix(sol, t, s, y, x, lam):
    """Feedback matrix ``K`` with ``rate = K (theta0 - theta)``; shape ``(..., d, d)``."""
    if not lam > 0:
        raise DomainError("the asymptotic trading rate needs lambda > 0")
    bundle = sol.impact_bundle(t, s, y, x)
    R = np.asarray(sol.risk_tolerance(t, s, y, x))
    return bundle.Mrate / np.sqrt(2.0 * R * lam)[..., None, None]


def trade_rate(sol, zeta, lam):
    """Asymptotically optimal trading rate at state ``zeta`` with holdings ``zeta.theta``."""
    t, s, y, x = zeta.zeta
    y = y[:sol.model.m]
    K = rate_matrix(sol, t, s, y, x, lam)
    dev = sol.theta0(t, s, y, x) - zeta.theta
    return np.einsum("...ij,...j->...i", K, dev)


def _max_rate(K):
    if K.shape[-1] == 1:
        return float(np.max(np.abs(K[..., 0, 0])))
    return float(np.max(np.abs(np.linalg.eigvals(K))))


def _simulate_block(ctx, start, stop):
    model, sol, policy, lam, mc = ctx["model"], ctx["sol"], ctx["policy"], ctx["lam"], ctx["mc"]
    K_steps, q, d, m = ctx["n_steps"], model.q, model.d, model.m
    target = ctx["target"]
    integrands = ctx["integrands"]
    keep = ctx["keep_paths"]
    dt, t0 = mc.dt, ctx["t0"]
    n = stop - start
    width = q + (d if target is not None else 0)
    Z = _block_normals(mc, start, stop, K_steps, width)
    sqdt = np.sqrt(dt)

    S = np.tile(ctx["s0"], (n, 1))
    Y = np.tile(ctx["y0"], (n, 1))
    X = np.full(n, ctx["x0"])
    X0 = X.copy()
    theta = np.tile(ctx["theta_init"], (n, 1))
    th0 = np.tile(ctx["theta0_init"], (n, 1)) if target is not None else None
    cost = np.zeros(n)
    mart = np.zeros(n)
    qv = np.zeros(n)
    acc = {k: np.zeros(n) for k in integrands}
    if keep:
        P = {"S": np.empty((n, K_steps + 1, d)), "Y": np.empty((n, K_steps + 1, m)),
             "X": np.empty((n, K_steps + 1)), "X0": np.empty((n, K_steps + 1)),
             "theta": np.empty((n, K_steps + 1, d)), "theta0": np.empty((n, K_steps + 1, d)),
             "rate": np.zeros((n, K_steps, d)), "cost": np.zeros((n, K_steps)),
             "dS": np.empty((n, K_steps, d))}

    for k in range(K_steps):
        t = t0 + k * dt
        if target is None:
            th0 = sol.theta0(t, S, Y, X)
        if policy.kind == PolicySpec.FRICTIONLESS:
            theta = th0.copy()
            rate = np.zeros((n, d))
        elif policy.kind == PolicySpec.ASYMPTOTIC:
            Kmat = rate_matrix(sol, t, S, Y, X, lam)
            if _max_rate(Kmat) * dt > MAX_KAPPA_DT:
                raise StiffnessError(f"kappa*dt = {_max_rate(Kmat) * dt:.3g} exceeds {MAX_KAPPA_DT}; "
                                     "reduce dt", step=k)
            rate = np.einsum("nij,nj->ni", np.broadcast_to(Kmat, (n, d, d)), th0 - theta)
        elif policy.kind == PolicySpec.CONSTANT:
            rate = policy.kappa * (th0 - theta)
        else:
            rate = np.asarray(policy.fn(t, S, Y, X, theta), dtype=float).reshape(n, d)

        if lam > 0:
            Lm = np.broadcast_to(model.lambda_mat(t, S, Y, X), (n, d, d))
            step_cost = lam * np.einsum("ni,nij,nj->n", rate, Lm, rate) * dt
        else:
            step_cost = np.zeros(n)
        for name, fn in integrands.items():
            acc[name] += np.asarray(fn(t, S, Y, X0), dtype=float) * dt

        dW = sqdt * Z[:, k, :q]
        sig_s = np.broadcast_to(model.sigma_s(t, S, Y), (n, d, q))
        noise_s = np.einsum("niq,nq->ni", sig_s, dW)
        dS = model.mu_s(t, S, Y) * dt + noise_s
        if m:
            Y_next = Y + model.mu_y(t, Y) * dt + np.einsum("niq,nq->ni",
                                                         np.broadcast_to(model.sigma_y(t, Y), (n, m, q)), dW)
        else:
            Y_next = Y
        dev = theta - th0
        mart += np.einsum("ni,ni->n", dev, noise_s)
        cov = sig_s @ np.swapaxes(sig_s, -1, -2)
        qv += np.einsum("ni,nij,nj->n", dev, cov, dev) * dt

        if keep:
            P["S"][:, k], P["Y"][:, k], P["X"][:, k], P["X0"][:, k] = S, Y, X, X0
            P["theta"][:, k], P["theta0"][:, k] = theta, th0
            P["rate"][:, k], P["cost"][:, k], P["dS"][:, k] = rate, step_cost, dS

        X = X + np.einsum("ni,ni->n", theta, dS) - step_cost
        X0 = X0 + np.einsum("ni,ni->n", th0, dS)
        cost = cost + step_cost
        theta = theta + rate * dt
        S = S + dS
        Y = Y_next
        if target is not None:
            th0 = th0 + target.sigma_theta * sqdt * Z[:, k, q:]

        bad = ~(np.isfinite(X) & np.all(np.isfinite(theta), axis=1) & np.all(np.isfinite(S), axis=1))
        if np.any(bad):
            idx = start + int(np.argmax(bad))
            raise SimulationError(f"non-finite state at step {k + 1}, path {idx}", step=k + 1, path=idx)

    T = t0 + K_steps * dt
    if target is None:
        th0 = sol.theta0(T, S, Y, X)
    if policy.kind == PolicySpec.FRICTIONLESS:
        theta = th0.copy()
    out = {"S_T": S, "Y_T": Y, "X_T": X, "X0_T": X0, "theta_T": theta, "theta0_T": th0,
           "cost": cost, "martingale": mart, "quad_var": qv, **{"int:" + k: v for k, v in acc.items()}}
    if keep:
        P["S"][:, -1], P["Y"][:, -1], P["X"][:, -1], P["X0"][:, -1] = S, Y, X, X0
        P["theta"][:, -1], P["theta0"][:, -1] = theta, th0
        out.update({"path:" + k: v for k, v in P.items()})
    return out


def simulate_paths(model, zeta0, policy, lam, mc, *, sol, measure="P", target=None,
                   integrands=None, keep_paths=False, workers=1):
    """Simulate ``mc.n_paths`` paths of ``(S, Y, X, theta)`` from ``zeta0`` to ``model.T``.

    ``measure="Q"`` simulates under the marginal pricing measure of ``sol``.
    A frictionless wealth process ``X0`` driven by the same noise is carried
    along for common-random-number comparisons. The frictionless target is
    evaluated at the frictional wealth, which is exact for exponential
    utility where theta0 does not depend on wealth.
    """
    if lam < 0:
        raise DomainError("lambda must be nonnegative")
    if policy.kind == PolicySpec.FRICTIONLESS and lam > 0:
        raise DomainError("frictionless (non absolutely continuous) policy is only admissible with lambda = 0")
    if measure not in ("P", "Q"):
        raise DomainError("measure must be 'P' or 'Q'")
    sim_model = q_measure_dynamics(sol, model) if measure == "Q" else model
    t0 = float(zeta0.t)
    n_steps = mc.n_steps(model.T - t0)
    s0 = np.asarray(zeta0.s, dtype=float)
    y0 = np.asarray(zeta0.y, dtype=float)[:model.m]
    theta0_init = sol.theta0(t0, s0, y0, zeta0.x).reshape(model.d)
    ctx = dict(model=sim_model, sol=sol, policy=policy, lam=float(lam), mc=mc, n_steps=n_steps,
               target=target, integrands=dict(integrands or {}), keep_paths=keep_paths,
               t0=t0, s0=s0, y0=y0, x0=float(zeta0.x), theta_init=np.asarray(zeta0.theta, dtype=float),
               theta0_init=theta0_init)
    bounds = [(a, min(a + BLOCK, mc.n_paths)) for a in range(0, mc.n_paths, BLOCK)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda b: _simulate_block(ctx, *b), bounds))
    else:
        parts = [_simulate_block(ctx, *b) for b in bounds]
    cat = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    ens = PathEnsemble(
        t0=t0, dt=mc.dt, n_steps=n_steps, seed=int(mc.seed), model_digest=model.digest,
        measure=measure, policy=policy.kind, lam=float(lam), eta=model.eta,
        S_T=cat["S_T"], Y_T=cat["Y_T"], X_T=cat["X_T"], X0_T=cat["X0_T"],
        theta_T=cat["theta_T"], theta0_T=cat["theta0_T"], cost=cat["cost"],
        martingale=cat["martingale"], quad_var=cat["quad_var"],
        integrals={k[4:]: v for k, v in cat.items() if k.startswith("int:")},
        paths={k[5:]: v for k, v in cat.items() if k.startswith("path:")} or None,
        synthetic_sigma=None if target is None else target.sigma_theta,
        meta={"model": model.name, "n_paths": mc.n_paths, "antithetic": mc.antithetic},
    )
    ens.objective, ens.penalty = terminal_objective(ens, sol, lam)
    return ens


def terminal_penalty(sol, T, S_T, Y_T, X_T, theta_T, theta0_T):
    """Liquidation penalty at the terminal state, per path."""
    bundle = sol.impact_bundle(T, S_T, Y_T, X_T)
    R = sol.risk_tolerance(T, S_T, Y_T, X_T)
    return matcore.liquidation_penalty(theta0_T, R, bundle, theta_T)


def terminal_objective(ens, sol, lam, eta=None):
    """``U(X_T) - U'(X_T) lam^{1/2} P`` for ``U(x) = -exp(-eta x)``.

    Returns ``(objective, penalty)`` arrays over paths.
    """
    eta = sol.model.eta if eta is None else eta
    T = ens.t0 + ens.n_steps * ens.dt
    pen = terminal_penalty(sol, T, ens.S_T, ens.Y_T, ens.X_T, ens.theta_T, ens.theta0_T)
    util = -np.exp(-eta * ens.X_T)
    return util * (1.0 + eta * np.sqrt(lam) * pen), pen


def estimate_value(ens_or_objectives, eta=None):
    """Sample mean, standard error and certainty equivalent ``-log(-mean)/eta``."""
    if isinstance(ens_or_objectives, PathEnsemble):
        obj = ens_or_objectives.objective
        eta = ens_or_objectives.eta if eta is None else eta
    else:
        obj = np.asarray(ens_or_objectives, dtype=float)
    if obj is None or len(obj) == 0:
        raise DomainError("empty ensemble")
    mean = float(np.mean(obj))
    stderr = float(np.std(obj, ddof=1) / np.sqrt(len(obj))) if len(obj) > 1 else 0.0
    if not mean < 0:
        raise CeUndefined(f"mean objective {mean} is not negative")
    return mean, stderr, float(-np.log(-mean) / eta)


@dataclass(frozen=True)
class LossEstimate:
    ce_loss: float
    stderr: float
    ratio_mean: float
    n_paths: int
    beta: float


def policy_ce_loss(sol, zeta0, lam, mc, policy=None, workers=1, control_variate=True):
    """Certainty-equivalent loss of a frictional policy relative to the frictionless optimum.

    For exponential utility the frictional value divided by the
    frictionless one equals ``E_Q[exp(-eta D)(1 + eta lam^{1/2} P)]`` with
    ``D = X_T - X0_T`` the wealth gap on common noise. Paths are simulated
    under Q; ``exp(-eta M - eta^2 <M>/2)``, with ``M`` the martingale part
    of ``D``, has mean exactly one and serves as control variate.
    """
    policy = PolicySpec.asymptotic() if policy is None else policy
    eta = sol.model.eta
    ens = simulate_paths(sol.model, zeta0, policy, lam, mc, sol=sol, measure="Q", workers=workers)
    ratio = np.exp(-eta * (ens.X_T - ens.X0_T)) * (1.0 + eta * np.sqrt(lam) * ens.penalty)
    n = len(ratio)
    beta = 0.0
    resid = ratio
    if control_variate:
        cv = np.exp(-eta * ens.martingale - 0.5 * eta ** 2 * ens.quad_var)
        var = np.var(cv, ddof=1)
        if var > 0:
            beta = float(np.cov(ratio, cv, ddof=1)[0, 1] / var)
        resid = ratio - beta * (cv - 1.0)
    mean = float(np.mean(resid))
    se = float(np.std(resid, ddof=1) / np.sqrt(n))
    if not mean > 0:
        raise CeUndefined("nonpositive value ratio")
    return LossEstimate(ce_loss=float(np.log(mean) / eta), stderr=se / (eta * mean),
                        ratio_mean=mean, n_paths=n, beta=beta)


@dataclass(frozen=True)
class DeviationStats:
    sample_var: float
    theory_var: float
    ratio: float
    relaxation_time: float
    threshold_quadratic: float


def deviation_statistics(ens, sol, burn_in_fraction=0.2):
    """Time-and-path variance of ``theta - theta0`` after burn-in against the
    stationary Ornstein-Uhlenbeck variance ``c / (2 kappa)`` along the paths."""
    from .corrector import FrictionKind, friction_threshold

    if sol.model.d != 1:
        raise DomainError("deviation statistics are defined for a single asset")
    if ens.policy != PolicySpec.ASYMPTOTIC:
        raise DomainError("deviation statistics need the asymptotic-rate policy")
    if ens.paths is None:
        raise DomainError("ensemble was simulated without keep_paths")
    if not 0 <= burn_in_fraction < 1:
        raise DomainError("burn_in_fraction must lie in [0, 1)")
    P = ens.paths
    k0 = int(np.ceil(burn_in_fraction * ens.n_steps))
    times = ens.times[k0:]
    S, Y, X = P["S"][:, k0:], P["Y"][:, k0:], P["X"][:, k0:]
    dev = (P["theta"] - P["theta0"])[:, k0:, 0]
    t_b = np.broadcast_to(times, X.shape)
    kappa = rate_matrix(sol, t_b, S, Y, X, ens.lam)[..., 0, 0]
    if ens.synthetic_sigma is not None:
        c = np.full(X.shape, ens.synthetic_sigma ** 2)
    else:
        c = sol.c_theta0(t_b, S, Y, X)[..., 0, 0]
    relax = float(1.0 / np.mean(kappa))
    horizon = ens.n_steps * ens.dt
    if relax > (1 - burn_in_fraction) * horizon / 5:
        raise InsufficientHorizon(f"relaxation time {relax:.3g} too long for horizon {horizon:.3g}")
    sample = float(np.var(dev))
    theory = float(np.mean(c / (2 * kappa)))
    R = sol.risk_tolerance(t_b, S, Y, X)
    bundle = sol.impact_bundle(t_b, S, Y, X)
    sig = np.abs(sol.model.sigma_s(t_b, S, Y)[..., 0, :])
    sig = np.sqrt(np.sum(sig ** 2, axis=-1))
    Lam = bundle.G[..., 0, 0] ** 2 / sig ** 2
    if np.all(c > 0):
        thr = float(np.mean(friction_threshold(FrictionKind.QUADRATIC, R, ens.lam * Lam, sig, np.sqrt(c))))
    else:
        thr = 0.0
    return DeviationStats(sample_var=sample, theory_var=theory, ratio=sample / theory if theory > 0 else float("nan"),
                          relaxation_time=relax, threshold_quadratic=thr)


@dataclass(frozen=True)
class ExecutionPath:
    t: np.ndarray
    deviation: np.ndarray
    kappa: float


def almgren_chriss_reference(sigma_s, impact, risk_tol, delta0, lam, horizon, n_points=1001):
    """Deterministic deviation ``delta0 exp(-kappa t)`` with ``kappa = sqrt(sigma^2 / (2 lam impact R))``."""
    if min(sigma_s, impact, risk_tol, lam, horizon) <= 0:
        raise DomainError("all frozen parameters must be positive")
    kappa = float(np.sqrt(sigma_s ** 2 / (2 * lam * impact * risk_tol)))
    t = np.linspace(0.0, horizon, n_points)
    return ExecutionPath(t=t, deviation=delta0 * np.exp(-kappa * t), kappa=kappa)


def wealth_recursion_error(ens):
    """Largest violation of ``dX = theta dS - cost`` over all stored steps."""
    if ens.paths is None:
        raise DomainError("ensemble was simulated without keep_paths")
    P = ens.paths
    dX = np.diff(P["X"], axis=1)
    pred = np.einsum("nki,nki->nk", P["theta"][:, :-1], P["dS"]) - P["cost"]
    return float(np.max(np.abs(dX - pred)))


def ensemble_rows(ens):
    dev = ens.theta_T - ens.theta0_T
    header = ["path", "terminal_wealth", "objective", "trading_cost"]
    header += ["terminal_deviation"] if dev.shape[1] == 1 else [f"terminal_deviation_{i}" for i in range(dev.shape[1])]
    rows = []
    for i in range(ens.n_paths):
        rows.append([str(i), repr(float(ens.X_T[i])), repr(float(ens.objective[i])),
                     repr(float(ens.cost[i]))] + [repr(float(v)) for v in dev[i]])
    return header, rows


def write_csv(path, header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def ensemble_summary(ens, mc=None):
    mean, se, ce = estimate_value(ens)
    out = {"mean": mean, "stderr": se, "ce": ce, "n_paths": ens.n_paths, "dt": ens.dt,
           "seed": ens.seed, "lambda": ens.lam, "policy": ens.policy, "measure": ens.measure,
           "model_digest": ens.model_digest}
    if mc is not None:
        out["config"] = {"n_paths": mc.n_paths, "dt": mc.dt, "seed": mc.seed, "antithetic": mc.antithetic}
    return out


def write_summary(path, summary):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
