"""Named model presets used by the CLI, the scripts and the acceptance suite."""
from dataclasses import asdict, dataclass

import numpy as np

from .frictionless import MarketModel, PdeGrid, solve_bachelier_exp, solve_statevar_exp


@dataclass(frozen=True)
class BachelierParams:
    mu: float = 0.05
    sigma: float = 0.2
    eta: float = 1.0
    T: float = 1.0
    impact: float = 1.0
    s0: float = 1.0


@dataclass(frozen=True)
class OuMyopicParams:
    """Asset drift ``nu tanh(y)``, constant volatility, OU state variable."""

    eta: float = 1.0
    nu: float = 0.1
    sigma_s: float = 0.2
    kappa_y: float = 1.0
    sigma_y: float = 0.5
    rho: float = 0.0
    T: float = 1.0
    impact: float = 1.0
    y0: float = 0.5
    s0: float = 1.0
    n_y: int = 401
    n_t: int = 200


@dataclass(frozen=True)
class HedgeTanhParams:
    mu: float = 0.0
    sigma: float = 0.2
    eta: float = 1.0
    T: float = 1.0
    impact: float = 1.0
    strike: float = 0.9
    s0: float = 1.0


PRESETS = {
    "bachelier-const": BachelierParams,
    "ou-myopic": OuMyopicParams,
    "hedge-tanh": HedgeTanhParams,
}

DESCRIPTIONS = {
    "bachelier-const": "arithmetic Brownian motion, constant target",
    "ou-myopic": "drift nu*tanh(y), OU state variable, rho=0",
    "hedge-tanh": "Bachelier with endowment tanh(S_T - K)",
}


def preset_params(name, **overrides):
    if name not in PRESETS:
        raise KeyError(name)
    return PRESETS[name](**overrides)


def ou_model(p):
    nu, sig, k, sy = p.nu, p.sigma_s, p.kappa_y, p.sigma_y
    return MarketModel.one_factor(
        mu_s=lambda t, y: nu * np.tanh(y),
        sigma_s=lambda t, y: sig + 0.0 * np.asarray(y),
        mu_y=lambda t, y: -k * np.asarray(y),
        sigma_y=lambda t, y: sy + 0.0 * np.asarray(y),
        rho=p.rho, eta=p.eta, T=p.T, impact=p.impact, name="ou-myopic", params=asdict(p))


def ou_grid(p):
    return PdeGrid.ou(0.0, p.kappa_y, p.sigma_y, n_y=p.n_y, n_t=p.n_t, width=6.0 + abs(p.y0) * np.sqrt(2 * p.kappa_y) / p.sigma_y)


def build(name, **overrides):
    """Return ``(params, model, solution)`` for a preset."""
    p = preset_params(name, **overrides)
    if isinstance(p, OuMyopicParams):
        model = ou_model(p)
        return p, model, solve_statevar_exp(model, ou_grid(p))
    sol = solve_bachelier_exp(p.mu, p.sigma, p.eta, p.T, impact=p.impact)
    return p, sol.model, sol


def listing():
    return {name: {"description": DESCRIPTIONS[name], "params": asdict(cls())} for name, cls in PRESETS.items()}
