"""Market models and frictionless exponential-utility solutions.

Every coefficient callable is vectorised over leading batch dimensions:
``s`` has shape ``(..., d)``, ``y`` shape ``(..., m)`` and ``x`` shape
``(...)``; time ``t`` is a scalar or broadcastable to the batch shape.

Sign convention: the reduced value function is positive,
``v0(t, s, y, x) = -exp(-eta x) w0(t, y)`` with ``w0 > 0``.
"""
import csv
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import matcore
from .errors import ConvergenceError, DomainError
from .pde import GridFunction, PdeGrid, solve_backward


@dataclass(frozen=True)
class StatePoint:
    t: float
    s: np.ndarray
    y: np.ndarray
    x: float
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", np.atleast_1d(np.asarray(self.s, dtype=float)))
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)).reshape(-1))
        object.__setattr__(self, "theta", np.atleast_1d(np.asarray(self.theta, dtype=float)))
        vals = np.concatenate([[self.t, self.x], self.s, self.y, self.theta])
        if not np.all(np.isfinite(vals)):
            raise DomainError("state has non-finite entries")

    @property
    def zeta(self):
        return self.t, self.s, self.y, self.x


@dataclass(frozen=True)
class OneFactor:
    """Scalar coefficient functions of ``(t, y)`` for one asset and one state variable."""

    mu_s: Callable
    sigma_s: Callable
    mu_y: Callable
    sigma_y: Callable
    rho: float


@dataclass(frozen=True)
class MarketModel:
    d: int
    m: int
    q: int
    mu_s: Callable
    sigma_s: Callable
    mu_y: Callable
    sigma_y: Callable
    lambda_mat: Callable
    T: float
    eta: float
    name: str = "custom"
    params: dict = field(default_factory=dict)
    factor: Optional[OneFactor] = None

    def __post_init__(self):
        if self.eta <= 0:
            raise DomainError("risk aversion eta must be positive")
        if self.T <= 0:
            raise DomainError("horizon T must be positive")

    @property
    def digest(self):
        blob = json.dumps({"name": self.name, "params": self.params, "T": self.T, "eta": self.eta},
                          sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_drifts(self, mu_s, mu_y, name_suffix=""):
        return replace(self, mu_s=mu_s, mu_y=mu_y, factor=None, name=self.name + name_suffix)

    @classmethod
    def bachelier(cls, mu, sigma, eta, T, impact=1.0, name="bachelier"):
        """Constant-coefficient arithmetic Brownian motion; ``sigma`` is ``d x q``."""
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim == 0:
            sigma = sigma.reshape(1, 1)
        elif sigma.ndim == 1:
            sigma = np.diag(sigma)
        d, q = sigma.shape
        if mu.shape != (d,):
            raise DomainError("mu and sigma dimensions disagree")
        if d == 1 and q == 1 and sigma[0, 0] <= 0:
            raise DomainError("volatility must be positive")
        impact = matcore.as_matrix(impact)
        if impact.shape != (d, d):
            impact = impact[0, 0] * np.eye(d)
        matcore.spd_sqrt(impact)
        matcore.spd_sqrt(sigma @ sigma.T)

        def mu_s(t, s, y):
            return np.broadcast_to(mu, np.shape(s)[:-1] + (d,))

        def sigma_s(t, s, y):
            return np.broadcast_to(sigma, np.shape(s)[:-1] + (d, q))

        def mu_y(t, y):
            return np.zeros(np.shape(y)[:-1] + (0,))

        def sigma_y(t, y):
            return np.zeros(np.shape(y)[:-1] + (0, q))

        def lambda_mat(t, s, y, x):
            return np.broadcast_to(impact, np.shape(s)[:-1] + (d, d))

        params = {"mu": mu.tolist(), "sigma": sigma.tolist(), "impact": impact.tolist()}
        return cls(d, 0, q, mu_s, sigma_s, mu_y, sigma_y, lambda_mat, float(T), float(eta),
                   name=name, params=params)

    @classmethod
    def one_factor(cls, mu_s, sigma_s, mu_y, sigma_y, rho, eta, T, impact=1.0,
                   name="one-factor", params=None):
        """One asset driven by W1, one state variable driven by rho W1 + sqrt(1-rho^2) W2."""
        if not -1.0 <= rho <= 1.0:
            raise DomainError("correlation must lie in [-1, 1]")
        if impact <= 0:
            raise DomainError("impact must be positive")
        rho_perp = np.sqrt(max(0.0, 1.0 - rho * rho))
        f = OneFactor(mu_s, sigma_s, mu_y, sigma_y, float(rho))

        def _mu_s(t, s, y):
            return np.asarray(mu_s(t, y[..., 0]), dtype=float)[..., None] + 0.0 * s

        def _sigma_s(t, s, y):
            sig = np.broadcast_to(np.asarray(sigma_s(t, y[..., 0]), dtype=float), y.shape[:-1])
            out = np.zeros(y.shape[:-1] + (1, 2))
            out[..., 0, 0] = sig
            return out

        def _mu_y(t, y):
            return np.broadcast_to(np.asarray(mu_y(t, y[..., 0]), dtype=float), y.shape[:-1])[..., None]

        def _sigma_y(t, y):
            sig = np.broadcast_to(np.asarray(sigma_y(t, y[..., 0]), dtype=float), y.shape[:-1])
            out = np.zeros(y.shape[:-1] + (1, 2))
            out[..., 0, 0] = rho * sig
            out[..., 0, 1] = rho_perp * sig
            return out

        def _lambda(t, s, y, x):
            return np.full(np.shape(s)[:-1] + (1, 1), float(impact))

        return cls(1, 1, 2, _mu_s, _sigma_s, _mu_y, _sigma_y, _lambda, float(T), float(eta),
                   name=name, params=dict(params or {}, rho=rho, impact=impact), factor=f)


def _batch(t, s, y, x, d, m):
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if s.ndim == 0 or s.shape[-1] != d:
        s = s[..., None]
    if m == 0:
        y = np.zeros(s.shape[:-1] + (0,))
    elif y.ndim == 0 or y.shape[-1] != m:
        y = y[..., None]
    x = np.asarray(x, dtype=float)
    return t, s, y, x


class FrictionlessSolution:
    """Exponential-utility solution bundle; subclasses provide the reduced
    value ``log w0`` and the target ``theta0``."""

    model: MarketModel

    def log_w(self, t, s, y):
        raise NotImplementedError

    def theta0(self, t, s, y, x):
        raise NotImplementedError

    def dtheta0(self, t, s, y, x):
        """Jacobian of theta0 with respect to ``(s, y, x)``, shape ``(..., d, d+m+1)``."""
        raise NotImplementedError

    def q_drift(self, t, s, y, x):
        raise NotImplementedError

    def _args(self, t, s, y, x):
        return _batch(t, s, y, x, self.model.d, self.model.m)

    def v0(self, t, s, y, x):
        t, s, y, x = self._args(t, s, y, x)
        return -np.exp(-self.model.eta * x + self.log_w(t, s, y))

    def dxv0(self, t, s, y, x):
        return -self.model.eta * self.v0(t, s, y, x)

    def dxxv0(self, t, s, y, x):
        return self.model.eta ** 2 * self.v0(t, s, y, x)

    def risk_tolerance(self, t, s, y, x):
        t, s, y, x = self._args(t, s, y, x)
        return np.full(np.broadcast_shapes(s.shape[:-1], x.shape), 1.0 / self.model.eta)

    def c_theta0(self, t, s, y, x):
        return c_theta0(self, t, s, y, x)

    def impact_bundle(self, t, s, y, x):
        t, s, y, x = self._args(t, s, y, x)
        return matcore.impact_root_bundle(self.model.lambda_mat(t, s, y, x), self.model.sigma_s(t, s, y))


class BachelierSolution(FrictionlessSolution):
    def __init__(self, model):
        if model.m != 0:
            raise DomainError("Bachelier solution needs a model without state variables")
        self.model = model
        mu = np.asarray(model.params["mu"], dtype=float)
        sigma = np.asarray(model.params["sigma"], dtype=float)
        cov = sigma @ sigma.T
        self._theta = np.linalg.solve(cov, mu) / model.eta
        self._sharpe2 = float(mu @ np.linalg.solve(cov, mu))
        self._q = -sigma.T @ np.linalg.solve(cov, mu)

    def log_w(self, t, s, y):
        return np.broadcast_to(-0.5 * self._sharpe2 * (self.model.T - np.asarray(t, dtype=float)),
                               np.broadcast_shapes(np.shape(t), s.shape[:-1]))

    def theta0(self, t, s, y, x):
        t, s, y, x = self._args(t, s, y, x)
        shape = np.broadcast_shapes(np.shape(t), s.shape[:-1], x.shape)
        return np.broadcast_to(self._theta, shape + (self.model.d,)).copy()

    def dtheta0(self, t, s, y, x):
        t, s, y, x = self._args(t, s, y, x)
        d = self.model.d
        shape = np.broadcast_shapes(np.shape(t), s.shape[:-1], x.shape)
        return np.zeros(shape + (d, d + 1))

    def q_drift(self, t, s, y, x):
        t, s, y, x = self._args(t, s, y, x)
        shape = np.broadcast_shapes(np.shape(t), s.shape[:-1], x.shape)
        return np.broadcast_to(self._q, shape + (self.model.q,)).copy()


def solve_bachelier_exp(mu, sigma, eta, T, impact=1.0):
    """Closed form for constant coefficients: theta0 = (sigma sigma^T)^{-1} mu / eta."""
    if np.ndim(sigma) == 0 and sigma <= 0:
        raise DomainError("sigma must be positive")
    if eta <= 0:
        raise DomainError("eta must be positive")
    return BachelierSolution(MarketModel.bachelier(mu, sigma, eta, T, impact=impact))


class StateVarSolution(FrictionlessSolution):
    """One asset, one state variable, solved on a ``(t, y)`` grid.

    ``log w0`` is stored as a bicubic spline; theta0 uses its y-gradient and
    derivatives of theta0 are central differences with step ``fd_step``.
    """

    def __init__(self, model, grid, times, log_w_values, fd_step=None):
        self.model = model
        self.grid = grid
        self.times = times
        self.log_w_grid = GridFunction(times, grid.y, log_w_values)
        self.fd_step = grid.dy if fd_step is None else fd_step

    @property
    def clamps(self):
        return self.log_w_grid.clamps

    def w0(self, t, y):
        return np.exp(self.log_w_grid(t, y))

    def log_w(self, t, s, y):
        return self.log_w_grid(t, y[..., 0])

    def _theta_ty(self, t, y):
        f = self.model.factor
        eta = self.model.eta
        sig = f.sigma_s(t, y)
        out = f.mu_s(t, y) / (eta * sig ** 2)
        if f.rho != 0.0:
            out = out + f.rho * f.sigma_y(t, y) / (eta * sig) * self.log_w_grid(t, y, dy=1)
        return np.asarray(out, dtype=float)

    def theta0(self, t, s, y, x):
        t, s, y, x = self._args(t, s, y, x)
        th = self._theta_ty(t, y[..., 0])
        shape = np.broadcast_shapes(np.shape(th), s.shape[:-1], x.shape)
        return np.broadcast_to(th, shape)[..., None].copy()

    def dtheta0(self, t, s, y, x):
        t, s, y, x = self._args(t, s, y, x)
        h = self.fd_step
        yy = y[..., 0]
        dth = (self._theta_ty(t, yy + h) - self._theta_ty(t, yy - h)) / (2 * h)
        shape = np.broadcast_shapes(np.shape(dth), s.shape[:-1], x.shape)
        out = np.zeros(shape + (1, 3))
        out[..., 0, 1] = dth
        return out

    def q_drift(self, t, s, y, x):
        t, s, y, x = self._args(t, s, y, x)
        f = self.model.factor
        yy = y[..., 0]
        q1 = -f.mu_s(t, yy) / f.sigma_s(t, yy)
        q2 = np.sqrt(max(0.0, 1.0 - f.rho ** 2)) * f.sigma_y(t, yy) * self.log_w_grid(t, yy, dy=1)
        shape = np.broadcast_shapes(np.shape(q1), np.shape(q2), s.shape[:-1], x.shape)
        out = np.zeros(shape + (2,))
        out[..., 0] = q1
        out[..., 1] = q2
        return out

    def to_csv(self, path):
        """Write the solved grid as rows ``t, y, w0``."""
        vals = np.exp(self.log_w_grid.values)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["t", "y", "w0"])
            for i, t in enumerate(self.times):
                for j, y in enumerate(self.grid.y):
                    wr.writerow([repr(float(t)), repr(float(y)), repr(float(vals[i, j]))])


def solve_statevar_exp(model, grid, t0=0.0, fd_step=None, bc="neumann"):
    """Solve the one-factor exponential-utility problem on ``grid``.

    For |rho| < 1 the reduced value is ``w0 = phi^{1/(1-rho^2)}`` where
    ``phi`` solves a linear equation with killing rate
    ``(1-rho^2) m^2 / 2`` (``m`` the Sharpe ratio). For |rho| = 1 the
    logarithm ``log w0`` itself solves a linear equation with source
    ``-m^2/2``. In both cases the advection is ``mu_y - rho sigma_y m``.
    """
    f = model.factor
    if f is None:
        raise DomainError("solve_statevar_exp needs a one-factor model")
    rho = f.rho
    times = grid.times(t0, model.T)
    y = grid.y

    def sharpe(t, yy):
        sig = np.asarray(f.sigma_s(t, yy), dtype=float)
        if np.any(np.abs(sig) <= 0):
            raise DomainError("sigma_s must be bounded away from zero")
        return np.asarray(f.mu_s(t, yy), dtype=float) / sig

    def drift(t, yy):
        return np.asarray(f.mu_y(t, yy), dtype=float) - rho * np.asarray(f.sigma_y(t, yy)) * sharpe(t, yy)

    def diff(t, yy):
        return np.asarray(f.sigma_y(t, yy), dtype=float) ** 2

    if 1.0 - rho * rho > 1e-12:
        delta = 1.0 - rho * rho

        def coeffs(t, yy):
            return drift(t, yy), diff(t, yy), 0.5 * delta * sharpe(t, yy) ** 2, 0.0

        phi = solve_backward(y, times, np.ones_like(y), coeffs, bc=bc)
        if not np.all(np.isfinite(phi)) or np.any(phi <= 0):
            raise ConvergenceError("reduced value function lost positivity")
        log_w = np.log(phi) / delta
    else:
        def coeffs(t, yy):
            return drift(t, yy), diff(t, yy), 0.0, -0.5 * sharpe(t, yy) ** 2

        log_w = solve_backward(y, times, np.zeros_like(y), coeffs, bc=bc)
        if not np.all(np.isfinite(log_w)):
            raise ConvergenceError("log reduced value function not finite")
    return StateVarSolution(model, grid, times, log_w, fd_step=fd_step)


def c_theta0(sol, t, s, y, x):
    """Local quadratic variation ``J sigma_theta sigma_theta^T J^T`` of the target."""
    model = sol.model
    t, s, y, x = _batch(t, s, y, x, model.d, model.m)
    J = sol.dtheta0(t, s, y, x)
    sig_s = model.sigma_s(t, s, y)
    sig_y = model.sigma_y(t, y)
    th = sol.theta0(t, s, y, x)
    shape = J.shape[:-2]
    sig_x = np.einsum("...i,...iq->...q", th, np.broadcast_to(sig_s, shape + sig_s.shape[-2:]))[..., None, :]
    sig_th = np.concatenate([np.broadcast_to(sig_s, shape + sig_s.shape[-2:]),
                             np.broadcast_to(sig_y, shape + sig_y.shape[-2:]), sig_x], axis=-2)
    A = J @ sig_th
    return A @ np.swapaxes(A, -1, -2)


def _derivatives(fun, t, z, x, steps):
    """Central differences of ``fun(t, z, x)`` (scalar-valued) at one point."""
    ht, hz, hx = steps
    n = len(z)
    f0 = fun(t, z, x)
    out = {"f": f0, "t": (fun(t + ht, z, x) - fun(t - ht, z, x)) / (2 * ht)}
    fxp, fxm = fun(t, z, x + hx), fun(t, z, x - hx)
    out["x"] = (fxp - fxm) / (2 * hx)
    out["xx"] = (fxp - 2 * f0 + fxm) / hx ** 2
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    gx = np.zeros(n)
    e = np.eye(n) * hz
    for i in range(n):
        fp, fm = fun(t, z + e[i], x), fun(t, z - e[i], x)
        grad[i] = (fp - fm) / (2 * hz)
        hess[i, i] = (fp - 2 * f0 + fm) / hz ** 2
        gx[i] = (fun(t, z + e[i], x + hx) - fun(t, z + e[i], x - hx)
                 - fun(t, z - e[i], x + hx) + fun(t, z - e[i], x - hx)) / (4 * hz * hx)
        for j in range(i):
            v = (fun(t, z + e[i] + e[j], x) - fun(t, z + e[i] - e[j], x)
                 - fun(t, z - e[i] + e[j], x) + fun(t, z - e[i] - e[j], x)) / (4 * hz * hz)
            hess[i, j] = hess[j, i] = v
    out.update(grad=grad, hess=hess, gx=gx)
    return out


def _steps(fd_step):
    if np.ndim(fd_step) == 0:
        return (float(fd_step),) * 3
    ht, hz, hx = fd_step
    return float(ht), float(hz), float(hx)


def _split(model, z):
    return z[:model.d], z[model.d:]


def _point(model, zeta):
    t, s, y, x = zeta.zeta if isinstance(zeta, StatePoint) else zeta
    s = np.atleast_1d(np.asarray(s, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))[:model.m]
    return float(t), s, y, float(x)


def _v0_fun(sol):
    model = sol.model

    def fun(t, z, x):
        s, y = _split(model, z)
        return float(sol.v0(t, s, y, x))
    return fun


def hjb_residual(sol, zeta, fd_step=1e-4):
    """LHS - RHS of the simplified frictionless HJB equation at ``zeta``."""
    model = sol.model
    t, s, y, x = _point(model, zeta)
    D = _derivatives(_v0_fun(sol), t, np.concatenate([s, y]), x, _steps(fd_step))
    mu0 = np.concatenate([model.mu_s(t, s, y), model.mu_y(t, y)])
    sbar = np.concatenate([model.sigma_s(t, s, y), model.sigma_y(t, y)], axis=0)
    lhs = D["t"] + mu0 @ D["grad"] + 0.5 * np.trace(sbar @ sbar.T @ D["hess"])
    th = sol.theta0(t, s, y, x)
    sig = model.sigma_s(t, s, y)
    rhs = 0.5 * th @ sig @ sig.T @ th * D["xx"]
    return float(lhs - rhs)


def foc_residual(sol, zeta, fd_step=1e-4):
    """LHS - RHS of the first-order condition defining theta0, a d-vector."""
    model = sol.model
    t, s, y, x = _point(model, zeta)
    D = _derivatives(_v0_fun(sol), t, np.concatenate([s, y]), x, _steps(fd_step))
    sig = model.sigma_s(t, s, y)
    sbar = np.concatenate([sig, model.sigma_y(t, y)], axis=0)
    th = sol.theta0(t, s, y, x)
    lhs = -D["xx"] * sig @ sig.T @ th
    rhs = model.mu_s(t, s, y) * D["x"] + sig @ sbar.T @ D["gx"]
    return lhs - rhs


def q_measure_dynamics(sol, model=None):
    """Model with drifts shifted by ``sigma @ q_drift`` (the marginal pricing measure).

    For exponential utility the Girsanov kernel does not depend on wealth,
    so the shifted coefficients are evaluated at ``x = 0``.
    """
    model = sol.model if model is None else model

    def mu_s(t, s, y):
        q = sol.q_drift(t, s, y, np.zeros(np.shape(s)[:-1]))
        return model.mu_s(t, s, y) + np.einsum("...iq,...q->...i", model.sigma_s(t, s, y), q)

    def mu_y(t, y):
        if model.m == 0:
            return model.mu_y(t, y)
        s = np.zeros(y.shape[:-1] + (model.d,))
        q = sol.q_drift(t, s, y, np.zeros(y.shape[:-1]))
        return model.mu_y(t, y) + np.einsum("...iq,...q->...i", model.sigma_y(t, y), q)

    return model.with_drifts(mu_s, mu_y, name_suffix="[Q]")
