"""Exponential-utility hedging of a European endowment ``h(S_T)`` in the Bachelier model.

The endowment is absorbed by a change of measure with density
``f(t, S_t)``; under the tilted measure the asset drift becomes
``mu + sigma^2 d_s log f`` and the problem is a pure investment problem,
which is solved as a one-factor model whose state variable is the price.
"""
import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .corrector import certainty_equivalent_loss
from .errors import ConvergenceError, DomainError, GridError
from .frictionless import MarketModel, StatePoint, solve_bachelier_exp, solve_statevar_exp
from .pde import GridFunction, PdeGrid, solve_backward

N_HERMITE = 64
CLAMP_RTOL = 1e-10


@dataclass(frozen=True)
class Payoff:
    h: Callable
    dh: Optional[Callable] = None
    name: str = "payoff"

    @classmethod
    def zero(cls):
        return cls(lambda s: 0.0 * np.asarray(s, dtype=float), lambda s: 0.0 * np.asarray(s, dtype=float), "zero")

    @classmethod
    def constant(cls, c):
        return cls(lambda s: c + 0.0 * np.asarray(s, dtype=float),
                   lambda s: 0.0 * np.asarray(s, dtype=float), f"constant({c})")

    @classmethod
    def tanh(cls, strike, scale=1.0):
        """``scale * tanh(s - strike)``: bounded and smooth with bounded derivatives."""
        return cls(lambda s: scale * np.tanh(np.asarray(s, dtype=float) - strike),
                   lambda s: scale / np.cosh(np.asarray(s, dtype=float) - strike) ** 2,
                   f"tanh(s-{strike})")


def gauss_expectation(fn, mean, std, n=N_HERMITE):
    """``E[fn(mean + std Z)]`` for standard normal ``Z`` by Gauss-Hermite quadrature."""
    z, w = np.polynomial.hermite_e.hermegauss(n)
    return float(np.sum(w * fn(mean + std * z)) / np.sqrt(2 * np.pi))


def _bachelier_params(model):
    if model.m != 0 or model.d != 1:
        raise DomainError("hedging is implemented for the one-asset Bachelier model")
    mu = float(np.asarray(model.params["mu"]).reshape(-1)[0])
    sigma = float(np.asarray(model.params["sigma"]).reshape(-1)[0])
    return mu, sigma


class DensitySurface:
    """``f(t, s)`` on a grid with ``f(t0, s0) = 1``.

    ``log_grad`` is ``d_s f / f``; points where ``f`` drops below
    ``1e-10 * max f`` are zeroed and counted in ``log_grad_clamps``.
    """

    def __init__(self, times, s, values, mu, sigma, eta, norm, trivial=False):
        self.times = np.asarray(times, dtype=float)
        self.s = np.asarray(s, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.mu, self.sigma, self.eta, self.norm = mu, sigma, eta, norm
        self.trivial = trivial
        self.log_grad_clamps = 0
        self._f = GridFunction(self.times, self.s, self.values)
        self._floor = CLAMP_RTOL * float(np.max(self.values))

    def f(self, t, s):
        if self.trivial:
            return np.ones(np.broadcast_shapes(np.shape(t), np.shape(s)))
        return self._f(t, s)

    def dsf(self, t, s):
        if self.trivial:
            return np.zeros(np.broadcast_shapes(np.shape(t), np.shape(s)))
        return self._f(t, s, dy=1)

    def log_grad(self, t, s):
        if self.trivial:
            return np.zeros(np.broadcast_shapes(np.shape(t), np.shape(s)))
        f = np.asarray(self._f(t, s))
        g = np.asarray(self._f(t, s, dy=1))
        low = f < self._floor
        if np.any(low):
            self.log_grad_clamps += int(np.count_nonzero(low))
        return np.where(low, 0.0, g / np.where(low, 1.0, f))

    @property
    def clamps(self):
        return self._f.clamps

    def terminal_mass(self, t0, s0):
        """``E[f(T, S_T)]`` under P from ``(t0, s0)`` by quadrature of the terminal data."""
        tau = self.times[-1] - t0
        return gauss_expectation(lambda v: self.f(self.times[-1], v), s0 + self.mu * tau, self.sigma * np.sqrt(tau))

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["t", "s", "f", "dsf"])
            for t in self.times:
                f = np.atleast_1d(self.f(t, self.s))
                g = np.atleast_1d(self.dsf(t, self.s))
                for j, s in enumerate(self.s):
                    wr.writerow([repr(float(t)), repr(float(s)), repr(float(f[j])), repr(float(g[j]))])


def hedge_grid(mu, sigma, T, s0, t0=0.0, n_s=801, n_t=400, width=8.0):
    tau = T - t0
    centre = s0 + 0.5 * mu * tau
    half = width * sigma * np.sqrt(tau) + 0.5 * abs(mu) * tau
    return PdeGrid(centre - half, centre + half, n_s, n_t)


def density_surface(model, payoff, eta, grid=None, t0=0.0, s0=None):
    """Solve ``f_t + mu f_s + sigma^2/2 f_ss = 0`` with ``f(T) = exp(-eta h) / N``.

    ``N`` is the Gaussian expectation of ``exp(-eta h(S_T))`` from ``(t0, s0)``
    by 64-point Gauss-Hermite quadrature.
    """
    mu, sigma = _bachelier_params(model)
    s0 = float(model.params.get("s0", 0.0)) if s0 is None else float(s0)
    T = model.T
    grid = hedge_grid(mu, sigma, T, s0, t0) if grid is None else grid
    times = grid.times(t0, T)
    tau = T - t0
    norm = gauss_expectation(lambda v: np.exp(-eta * payoff.h(v)), s0 + mu * tau, sigma * np.sqrt(tau))
    terminal = np.exp(-eta * payoff.h(grid.y)) / norm
    if np.ptp(terminal) == 0.0:
        values = np.ones((len(times), grid.n_y))
        return DensitySurface(times, grid.y, values, mu, sigma, eta, norm, trivial=True)
    lo, hi = s0 + mu * tau - 6 * sigma * np.sqrt(tau), s0 + mu * tau + 6 * sigma * np.sqrt(tau)
    if grid.y_min > lo or grid.y_max < hi:
        raise GridError("grid must cover six standard deviations around the forward")
    values = solve_backward(grid.y, times, terminal, lambda t, s: (mu, sigma ** 2, 0.0, 0.0))
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise ConvergenceError("density surface lost positivity")
    return DensitySurface(times, grid.y, values, mu, sigma, eta, norm)


def tilted_model(model, surface):
    """Bachelier model under the tilted measure, as a one-factor model with ``Y = S``.

    Returns ``model`` itself when the surface is trivial.
    """
    if getattr(surface, "trivial", False):
        return model
    mu, sigma = _bachelier_params(model)

    def drift(t, y):
        return mu + sigma ** 2 * surface.log_grad(t, y)

    return MarketModel.one_factor(
        mu_s=drift, sigma_s=lambda t, y: sigma + 0.0 * np.asarray(y),
        mu_y=drift, sigma_y=lambda t, y: sigma + 0.0 * np.asarray(y), rho=1.0,
        eta=model.eta, T=model.T, impact=float(np.asarray(model.params["impact"]).reshape(-1)[0]),
        name=model.name + "[tilted]", params=dict(model.params))


def delta_oracle(payoff, sigma, tau, s):
    """Replication delta ``E[h'(s + sigma sqrt(tau) Z)]`` of the driftless price."""
    return gauss_expectation(payoff.dh, s, sigma * np.sqrt(tau))


def price_oracle(payoff, sigma, tau, s):
    return gauss_expectation(payoff.h, s, sigma * np.sqrt(tau))


@dataclass
class HedgeResult:
    theta0_plain: float
    theta0_hedge: float
    ce_plain: object
    ce_hedge: object
    frictionless_price: float
    price_correction: float
    indifference_price: float
    sol_plain: object
    sol_hedge: object
    surface: DensitySurface


def hedge_target_and_ce(mu, sigma, eta, T, payoff, lam, s0, mc, theta=None, impact=1.0,
                        t0=0.0, grid=None, workers=1):
    """Frictionless target and first-order friction correction of the buyer's indifference price.

    ``theta`` is the current holding (defaults to the plain target). The
    price correction is ``CE_hedge - CE_plain`` and the buyer's price is
    the frictionless price minus this correction.
    """
    sol_plain = solve_bachelier_exp(mu, sigma, eta, T, impact=impact)
    base = sol_plain.model
    surface = density_surface(base, payoff, eta, grid=grid, t0=t0, s0=s0)
    tilted = tilted_model(base, surface)
    if tilted is base:
        sol_hedge = solve_bachelier_exp(mu, sigma, eta, T, impact=impact)
    else:
        sgrid = PdeGrid(surface.s[0], surface.s[-1], len(surface.s), len(surface.times) - 1)
        sol_hedge = solve_statevar_exp(tilted, sgrid, t0=t0)
    th_plain = float(sol_plain.theta0(t0, [s0], [s0], 0.0)[0])
    th_hedge = float(sol_hedge.theta0(t0, [s0], [s0], 0.0)[0])
    theta = th_plain if theta is None else float(theta)
    ce_plain = certainty_equivalent_loss(sol_plain, StatePoint(t0, [s0], [s0], 0.0, [theta]), lam, mc, workers)
    ce_hedge = certainty_equivalent_loss(sol_hedge, StatePoint(t0, [s0], [s0], 0.0, [theta]), lam, mc, workers)
    L0 = float(sol_plain.log_w(t0, np.array([s0]), np.array([s0])))
    LH = float(sol_hedge.log_w(t0, np.array([s0]), np.array([s0])))
    p0 = (L0 - LH - np.log(surface.norm)) / eta
    corr = ce_hedge.ce - ce_plain.ce
    return HedgeResult(theta0_plain=th_plain, theta0_hedge=th_hedge, ce_plain=ce_plain, ce_hedge=ce_hedge,
                       frictionless_price=float(p0), price_correction=float(corr),
                       indifference_price=float(p0 - corr), sol_plain=sol_plain, sol_hedge=sol_hedge,
                       surface=surface)
