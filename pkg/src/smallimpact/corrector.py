"""First and second correctors, the certainty-equivalent loss and friction comparisons.

For exponential utility the second corrector factorises as
``u(zeta) = dxv0(zeta) * psi(t, y)`` where ``psi`` is the Q-expectation of
the time-integral of ``g = Tr[c_theta0 G] / sqrt(2R)``. ``psi`` is solved on
a ``(t, y)`` grid and serves as the deterministic oracle for the Monte Carlo
estimators, which use either P (with simulated wealth) or Q.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import matcore
from .errors import DomainError, NotProvided
from .frictionless import StatePoint, _derivatives, _point, _steps, q_measure_dynamics
from .pde import GridFunction, solve_backward
from .simkit import PolicySpec, simulate_paths


def _state(sol, zeta):
    t, s, y, x = _point(sol.model, zeta)
    return t, s, y, x


def first_corrector(sol, zeta):
    """``(a, k2)`` at ``zeta``: ``k2 = dxv0 / sqrt(2R) G`` and ``a = Tr[c_theta0 k2]``."""
    t, s, y, x = _state(sol, zeta)
    bundle = sol.impact_bundle(t, s, y, x)
    k2 = matcore.k2_matrix(sol.dxv0(t, s, y, x), sol.dxxv0(t, s, y, x), bundle)
    c = sol.c_theta0(t, s, y, x)
    return float(np.trace(c @ k2)), k2


def corrector_source(sol, t, s, y, x):
    """``a(t, s, y, x)`` vectorised over a batch of states."""
    bundle = sol.impact_bundle(t, s, y, x)
    k2 = matcore.k2_matrix(sol.dxv0(t, s, y, x), sol.dxxv0(t, s, y, x), bundle)
    return np.einsum("...ij,...ji->...", sol.c_theta0(t, s, y, x), k2)


def normalized_source(sol, t, s, y, x):
    """``g = a / dxv0 = Tr[c_theta0 G] / sqrt(2R)``, vectorised."""
    bundle = sol.impact_bundle(t, s, y, x)
    R = np.asarray(sol.risk_tolerance(t, s, y, x))
    return np.einsum("...ij,...ji->...", sol.c_theta0(t, s, y, x), bundle.G) / np.sqrt(2.0 * R)


@dataclass(frozen=True)
class FirstCorrectorResidual:
    residual: float
    scale: float

    @property
    def relative(self):
        return abs(self.residual) / self.scale if self.scale > 0 else abs(self.residual)


def first_corrector_residual(sol, zeta, xi):
    """Plug ``(a, varpi)`` into the first corrector equation at ``(zeta, xi)``.

    Derivatives of ``varpi`` in ``xi`` are central differences with unit
    step, exact for a quadratic form up to rounding.
    """
    t, s, y, x = _state(sol, zeta)
    xi = matcore.as_vector(xi)
    a, k2 = first_corrector(sol, zeta)
    d = len(xi)
    vx = float(sol.dxv0(t, s, y, x))
    vxx = float(sol.dxxv0(t, s, y, x))
    lam = matcore.as_matrix(sol.model.lambda_mat(t, s, y, x))
    sig = sol.model.sigma_s(t, s, y)
    c = sol.c_theta0(t, s, y, x)

    def w(v):
        return float(matcore.varpi(k2, v))

    h = max(1.0, float(np.max(np.abs(xi))))
    e = np.eye(d) * h
    grad = np.array([(w(xi + e[i]) - w(xi - e[i])) / (2 * h) for i in range(d)])
    hess = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            hess[i, j] = (w(xi + e[i] + e[j]) - w(xi + e[i] - e[j])
                          - w(xi - e[i] + e[j]) + w(xi - e[i] - e[j])) / (4 * h * h)
    terms = np.array([
        0.5 * float(xi @ sig @ sig.T @ xi) * vxx,
        -0.5 * float(np.trace(c @ hess)),
        float(grad @ np.linalg.solve(lam, grad)) / (4 * vx),
        a,
    ])
    return FirstCorrectorResidual(residual=float(terms.sum()), scale=float(np.abs(terms).sum()))


class PsiGrid:
    """Grid solution of ``psi_t + L^Q psi + g = 0``, ``psi(T) = 0``; ``u = dxv0 * psi``."""

    def __init__(self, sol, grid, times, values):
        self.sol = sol
        self.grid = grid
        self.times = times
        self.psi = GridFunction(times, grid.y, values)

    def __call__(self, t, y):
        return self.psi(t, y)

    def u(self, t, s, y, x):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return self.sol.dxv0(t, s, y, x) * self.psi(t, y[..., 0])

    @property
    def clamps(self):
        return self.psi.clamps


class ZeroPsi:
    """Exact oracle for constant-target models, where ``g`` vanishes identically."""

    def __init__(self, sol):
        self.sol = sol

    def __call__(self, t, y=None):
        return np.zeros(np.shape(t)) if np.ndim(t) else 0.0

    def u(self, t, s, y, x):
        return 0.0 * self.sol.dxv0(t, s, y, x)

    clamps = 0


def kolmogorov_u_grid(sol, grid=None, t0=0.0, bc="neumann"):
    """Deterministic oracle for the second corrector.

    Solves the Q-Kolmogorov backward equation for ``psi`` on the ``(t, y)``
    grid; for models without state variables the oracle is identically zero.
    """
    model = sol.model
    if model.m == 0:
        if np.any(np.asarray(sol.dtheta0(t0, np.zeros(model.d), None, 0.0)) != 0):
            raise DomainError("grid oracle needs a state variable when theta0 is not constant")
        return ZeroPsi(sol)
    if model.m != 1:
        raise DomainError("grid oracle supports one state variable")
    grid = sol.grid if grid is None else grid
    qmodel = q_measure_dynamics(sol, model)
    times = grid.times(t0, model.T)

    def coeffs(t, yy):
        Y = yy[:, None]
        S = np.zeros((len(yy), model.d))
        X = np.zeros(len(yy))
        b = qmodel.mu_y(t, Y)[:, 0]
        sy = model.sigma_y(t, Y)[:, 0, :]
        g = normalized_source(sol, t, S, Y, X)
        return b, np.sum(sy ** 2, axis=-1), 0.0, g

    values = solve_backward(grid.y, times, np.zeros(grid.n_y), coeffs, bc=bc)
    return PsiGrid(sol, grid, times, values)


def second_corrector_pde_residual(sol, u_oracle, zeta, fd_step):
    """``-L^{theta0} u - a`` at ``zeta`` by central differences in ``(t, s, y, x)``.

    ``u_oracle`` exposes ``u(t, s, y, x)``; the generator is that of the
    frictionless optimal state process under P.
    """
    model = sol.model
    t, s, y, x = _point(model, zeta)
    d = model.d

    def fun(tt, z, xx):
        return float(u_oracle.u(tt, z[:d], z[d:], xx))

    D = _derivatives(fun, t, np.concatenate([s, y]), x, _steps(fd_step))
    th = sol.theta0(t, s, y, x)
    mu_s = model.mu_s(t, s, y)
    sig_s = model.sigma_s(t, s, y)
    drift = np.concatenate([mu_s, model.mu_y(t, y), [th @ mu_s]])
    sig = np.concatenate([sig_s, model.sigma_y(t, y), (th @ sig_s)[None, :]], axis=0)
    n = d + model.m
    H = np.zeros((n + 1, n + 1))
    H[:n, :n] = D["hess"]
    H[:n, n] = H[n, :n] = D["gx"]
    H[n, n] = D["xx"]
    grad = np.concatenate([D["grad"], [D["x"]]])
    Lu = D["t"] + drift @ grad + 0.5 * np.trace(sig @ sig.T @ H)
    a, _ = first_corrector(sol, (t, s, y, x))
    return float(-Lu - a)


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    n_paths: int


def second_corrector_u(sol, zeta, mc, workers=1):
    """Monte Carlo estimate of ``u(zeta) = E[int_t^T a(r, S_r, Y_r, X_r) dr]``.

    Paths follow the frictionless optimum under P with simulated wealth;
    the time integral is a left-endpoint Riemann sum on the step ``dt``.
    """
    t, s, y, x = _state(sol, zeta)
    if t >= sol.model.T:
        return McEstimate(0.0, 0.0, mc.n_paths)
    start = StatePoint(t, s, y, x, sol.theta0(t, s, y, x))
    ens = simulate_paths(sol.model, start, PolicySpec.frictionless(), 0.0, mc, sol=sol, measure="P",
                         integrands={"a": lambda tt, S, Y, X: corrector_source(sol, tt, S, Y, X)},
                         workers=workers)
    vals = ens.integrals["a"]
    return McEstimate(float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(len(vals))), len(vals))


def q_integral(sol, zeta, mc, workers=1):
    """Monte Carlo estimate of ``psi(zeta) = E_Q[int_t^T g dr]``."""
    t, s, y, x = _state(sol, zeta)
    if t >= sol.model.T:
        return McEstimate(0.0, 0.0, mc.n_paths)
    start = StatePoint(t, s, y, x, sol.theta0(t, s, y, x))
    ens = simulate_paths(sol.model, start, PolicySpec.frictionless(), 0.0, mc, sol=sol, measure="Q",
                         integrands={"g": lambda tt, S, Y, X: normalized_source(sol, tt, S, Y, X)},
                         workers=workers)
    vals = ens.integrals["g"]
    return McEstimate(float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(len(vals))), len(vals))


@dataclass(frozen=True)
class CeEstimate:
    ce: float
    stderr: float
    integral_term: float
    penalty_term: float


def _penalty(sol, zeta):
    t, s, y, x = _state(sol, zeta)
    theta = zeta.theta if isinstance(zeta, StatePoint) else sol.theta0(t, s, y, x)
    return float(matcore.liquidation_penalty(sol.theta0(t, s, y, x), sol.risk_tolerance(t, s, y, x),
                                             sol.impact_bundle(t, s, y, x), theta))


def certainty_equivalent_loss(sol, zeta, lam, mc, workers=1):
    """``lam^{1/2} (E_Q[int g dr] + P(zeta, theta))`` with the expectation by Monte Carlo under Q."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    est = q_integral(sol, zeta, mc, workers=workers)
    r = np.sqrt(lam)
    pen = _penalty(sol, zeta)
    return CeEstimate(ce=r * (est.value + pen), stderr=r * est.stderr,
                      integral_term=r * est.value, penalty_term=r * pen)


def ce_theory(sol, zeta, lam, psi):
    """Leading-order CE loss from a deterministic ``psi`` oracle: ``lam^{1/2} (u / dxv0 + P)``."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    t, s, y, x = _state(sol, zeta)
    u = float(psi.u(t, s, y, x))
    r = np.sqrt(lam)
    pen = _penalty(sol, zeta)
    integral = u / float(sol.dxv0(t, s, y, x))
    return CeEstimate(ce=r * (integral + pen), stderr=0.0, integral_term=r * integral, penalty_term=r * pen)


def constant_impact_penalty_term(sigma_s, impact, eta, theta0, theta, lam):
    """Closed-form penalty part of the one-factor CE, ``lam^{1/2} sigma sqrt(impact) (theta0-theta)^2 sqrt(eta/2)``."""
    return float(np.sqrt(lam) * sigma_s * np.sqrt(impact) * (theta0 - theta) ** 2 * np.sqrt(eta / 2.0))


class FrictionKind(Enum):
    QUADRATIC = "quadratic"
    PROPORTIONAL = "proportional"
    FIXED = "fixed"


def _positive(*vals):
    arrs = [np.asarray(v, dtype=float) for v in vals]
    if any(np.any(a <= 0) for a in arrs):
        raise DomainError("friction inputs must be positive")
    return arrs


def friction_threshold(kind, R, lambda_cost, sigma_s, sigma_theta0):
    """Leading-order average squared deviation from the target for each friction."""
    R, lam, sig, sth = _positive(R, lambda_cost, sigma_s, sigma_theta0)
    base = R * lam / sig ** 2
    if kind is FrictionKind.QUADRATIC:
        return np.sqrt(2.0) * np.sqrt(base) * sth ** 2
    if kind is FrictionKind.PROPORTIONAL:
        return 12.0 ** (-1.0 / 3.0) * base ** (2.0 / 3.0) * sth ** (4.0 / 3.0)
    if kind is FrictionKind.FIXED:
        return np.sqrt(base) * sth / np.sqrt(3.0)
    raise DomainError(f"unknown friction {kind!r}")


def friction_ce_integrand(kind, R, lambda_cost, sigma_s, sigma_theta0):
    """Pointwise integrand of the certainty-equivalent loss, to be integrated under Q."""
    R, lam, sig, sth = _positive(R, lambda_cost, sigma_s, sigma_theta0)
    if kind is FrictionKind.QUADRATIC:
        return np.sqrt(sig ** 2 * lam / (2.0 * R)) * sth ** 2
    if kind is FrictionKind.PROPORTIONAL:
        return np.cbrt(9.0 * sig ** 2 * lam / (32.0 * R)) * sth ** (4.0 / 3.0)
    if kind is FrictionKind.FIXED:
        raise NotProvided("no closed-form certainty-equivalent integrand for fixed costs")
    raise DomainError(f"unknown friction {kind!r}")
