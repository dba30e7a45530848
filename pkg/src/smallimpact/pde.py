"""Backward parabolic solver on a uniform 1-D grid.

Solves ``u_t + b u_y + (a/2) u_yy - k u + g = 0`` backward from a terminal
condition with Crank-Nicolson, started by two implicit Euler half steps
(Rannacher) to damp terminal kinks.
"""
import threading
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.linalg import solve_banded

from .errors import GridError


@dataclass(frozen=True)
class PdeGrid:
    y_min: float
    y_max: float
    n_y: int = 401
    n_t: int = 200

    def __post_init__(self):
        if not self.y_max > self.y_min:
            raise GridError("empty y-interval")
        if self.n_y < 5 or self.n_t < 2:
            raise GridError("grid too coarse")

    @property
    def y(self):
        return np.linspace(self.y_min, self.y_max, self.n_y)

    @property
    def dy(self):
        return (self.y_max - self.y_min) / (self.n_y - 1)

    def times(self, t0, T):
        return np.linspace(t0, T, self.n_t + 1)

    def refined(self):
        """Dyadic refinement: halves both spacings, keeps every old node."""
        return PdeGrid(self.y_min, self.y_max, 2 * self.n_y - 1, 2 * self.n_t)

    @classmethod
    def ou(cls, y0, kappa, sigma_y, n_y=401, n_t=200, width=6.0):
        half = width * sigma_y / np.sqrt(2.0 * kappa)
        return cls(y0 - half, y0 + half, n_y, n_t)


def _operator_bands(b, a, k, h, bc):
    lower = -b / (2 * h) + a / (2 * h * h)
    upper = b / (2 * h) + a / (2 * h * h)
    diag = -a / (h * h) - k
    if bc == "neumann":
        upper[0] += lower[0]
        lower[-1] += upper[-1]
    elif bc == "linear":
        diag[0] += 2 * lower[0]
        upper[0] -= lower[0]
        diag[-1] += 2 * upper[-1]
        lower[-1] -= upper[-1]
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    lower[0] = 0.0
    upper[-1] = 0.0
    return lower, diag, upper


def _apply(lower, diag, upper, u):
    out = diag * u
    out[1:] += lower[1:] * u[:-1]
    out[:-1] += upper[:-1] * u[1:]
    return out


def _theta_step(u_next, t_now, t_next, y, coeffs, h, bc, theta):
    """One step from ``t_next`` back to ``t_now`` with implicitness ``theta``."""
    dt = t_next - t_now
    b1, a1, k1, g1 = coeffs(t_now, y)
    l1, d1, r1 = _operator_bands(*(np.array(c, dtype=float) for c in (b1, a1, k1)), h, bc)
    rhs = u_next.copy()
    if theta < 1.0:
        b2, a2, k2, g2 = coeffs(t_next, y)
        l2, d2, r2 = _operator_bands(*(np.array(c, dtype=float) for c in (b2, a2, k2)), h, bc)
        rhs += (1 - theta) * dt * (_apply(l2, d2, r2, u_next) + g2)
    rhs += theta * dt * g1
    ab = np.zeros((3, len(y)))
    ab[0, 1:] = -theta * dt * r1[:-1]
    ab[1] = 1.0 - theta * dt * d1
    ab[2, :-1] = -theta * dt * l1[1:]
    return solve_banded((1, 1), ab, rhs)


def solve_backward(y, times, terminal, coeffs, bc="neumann", rannacher=True):
    """March ``terminal`` back through ``times`` (ascending).

    ``coeffs(t, y)`` returns ``(b, a, k, g)`` arrays on the grid (scalars
    broadcast). Returns an array of shape ``(len(times), len(y))``.
    """
    y = np.asarray(y, dtype=float)
    h = y[1] - y[0]

    def full(t, yy):
        return tuple(np.broadcast_to(np.asarray(c, dtype=float), yy.shape) for c in coeffs(t, yy))

    out = np.empty((len(times), len(y)))
    out[-1] = terminal
    u = np.array(terminal, dtype=float)
    for n in range(len(times) - 2, -1, -1):
        t_now, t_next = times[n], times[n + 1]
        if rannacher and n == len(times) - 2:
            t_mid = 0.5 * (t_now + t_next)
            u = _theta_step(u, t_mid, t_next, y, full, h, bc, 1.0)
            u = _theta_step(u, t_now, t_mid, y, full, h, bc, 1.0)
        else:
            u = _theta_step(u, t_now, t_next, y, full, h, bc, 0.5)
        out[n] = u
    return out


class GridFunction:
    """Bicubic spline over a solved ``(t, y)`` grid.

    Points with ``y`` outside the grid are clamped to the boundary and
    counted in ``clamps``; ``t`` outside the grid raises GridError.
    """

    def __init__(self, times, y, values):
        self.times = np.asarray(times, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self._spline = RectBivariateSpline(self.times, self.y, self.values, kx=3, ky=3)
        self._lock = threading.Lock()
        self.clamps = 0

    def __call__(self, t, y, dt=0, dy=0):
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        span = self.times[-1] - self.times[0]
        if np.any(t < self.times[0] - 1e-12 * span) or np.any(t > self.times[-1] + 1e-12 * span):
            raise GridError(f"time outside solved grid [{self.times[0]}, {self.times[-1]}]")
        t = np.clip(t, self.times[0], self.times[-1])
        outside = (y < self.y[0]) | (y > self.y[-1])
        if np.any(outside):
            with self._lock:
                self.clamps += int(np.count_nonzero(outside))
            y = np.clip(y, self.y[0], self.y[-1])
        t, y = np.broadcast_arrays(t, y)
        res = self._spline.ev(t.ravel(), y.ravel(), dx=dt, dy=dy).reshape(t.shape)
        return res if res.ndim else float(res)
