"""SPD matrix algebra and the closed-form objects built from the impact matrix.

All functions accept a single ``(d, d)`` matrix or a stack ``(..., d, d)``;
scalars are promoted to ``(1, 1)``. Vectors are ``(..., d)``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotPositiveDefinite, NotSymmetric

SYM_RTOL = 1e-12
PD_RTOL = 1e-10


def as_matrix(m):
    m = np.asarray(m, dtype=float)
    if m.ndim == 0:
        return m.reshape(1, 1)
    if m.ndim == 1:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[-1] != m.shape[-2]:
        raise DomainError(f"matrix is not square: shape {m.shape}")
    return m


def as_vector(v):
    v = np.asarray(v, dtype=float)
    return v.reshape(1) if v.ndim == 0 else v


def _checked_eigh(m):
    scale = np.max(np.abs(m), axis=(-2, -1), keepdims=True)
    asym = np.max(np.abs(m - np.swapaxes(m, -1, -2)), axis=(-2, -1), keepdims=True)
    if np.any(asym > SYM_RTOL * np.maximum(scale, np.finfo(float).tiny)):
        raise NotSymmetric(f"asymmetry {float(asym.max()):.3e} exceeds tolerance")
    w, v = np.linalg.eigh(0.5 * (m + np.swapaxes(m, -1, -2)))
    wmax = w[..., -1:]
    if np.any(wmax <= 0) or np.any(w[..., :1] <= PD_RTOL * wmax):
        raise NotPositiveDefinite(f"smallest eigenvalue {float(w[..., 0].min()):.3e} not positive")
    return w, v


def spd_power(m, p):
    """Real power ``m**p`` of an SPD matrix (stack) via eigendecomposition."""
    w, v = _checked_eigh(as_matrix(m))
    r = (v * w[..., None, :] ** p) @ np.swapaxes(v, -1, -2)
    return 0.5 * (r + np.swapaxes(r, -1, -2))


def spd_sqrt(m):
    """Principal square root of a symmetric positive definite matrix.

    Raises NotSymmetric when the relative asymmetry exceeds 1e-12 and
    NotPositiveDefinite when the smallest eigenvalue is not above
    1e-10 times the largest.
    """
    return spd_power(m, 0.5)


@dataclass(frozen=True)
class ImpactRootBundle:
    """``G = L^{1/2} A L^{1/2}`` and ``Mrate = L^{-1/2} A L^{1/2}``,
    with ``A = (L^{-1/2} S L^{-1/2})^{1/2}``, ``L`` the impact matrix and
    ``S = sigma sigma^T``. Note ``Mrate = L^{-1} G``."""

    G: np.ndarray
    Mrate: np.ndarray


def impact_root_bundle(lambda_mat, sigma_s):
    lam = as_matrix(lambda_mat)
    sig = np.asarray(sigma_s, dtype=float)
    if sig.ndim == 0:
        sig = sig.reshape(1, 1)
    cov = sig @ np.swapaxes(sig, -1, -2)
    w, v = _checked_eigh(lam)
    vt = np.swapaxes(v, -1, -2)
    lam_half = (v * np.sqrt(w)[..., None, :]) @ vt
    lam_ihalf = (v * (1.0 / np.sqrt(w))[..., None, :]) @ vt
    inner = spd_sqrt(lam_ihalf @ cov @ lam_ihalf)
    G = lam_half @ inner @ lam_half
    G = 0.5 * (G + np.swapaxes(G, -1, -2))
    Mrate = lam_ihalf @ inner @ lam_half
    return ImpactRootBundle(G=G, Mrate=Mrate)


def risk_tolerance(dxv0, dxxv0):
    dxv0 = np.asarray(dxv0, dtype=float)
    dxxv0 = np.asarray(dxxv0, dtype=float)
    if np.any(dxv0 <= 0) or np.any(dxxv0 >= 0):
        raise DomainError("need dxv0 > 0 and dxxv0 < 0")
    return -dxv0 / dxxv0


def k2_matrix(dxv0, dxxv0, bundle):
    """Quadratic deviation penalty matrix, ``dxv0 / sqrt(2R) * G`` (positive branch)."""
    R = risk_tolerance(dxv0, dxxv0)
    factor = np.asarray(dxv0 / np.sqrt(2.0 * R))
    return factor[..., None, None] * bundle.G


def varpi(k2, xi):
    """Quadratic form ``xi^T k2 xi``."""
    k2 = as_matrix(k2)
    xi = as_vector(xi)
    return np.einsum("...i,...ij,...j->...", xi, k2, xi)


def liquidation_penalty(theta0, risk_tol, bundle, theta):
    """Risk-adjusted liquidation cost ``(theta - theta0)^T G (theta - theta0) / sqrt(2R)``."""
    risk_tol = np.asarray(risk_tol, dtype=float)
    if np.any(risk_tol <= 0):
        raise DomainError("risk tolerance must be positive")
    dev = as_vector(theta) - as_vector(theta0)
    return varpi(bundle.G, dev) / np.sqrt(2.0 * risk_tol)
