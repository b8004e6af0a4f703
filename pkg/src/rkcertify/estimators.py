"""Weighted error estimates: embedded RMS and residual L1/L2 norms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .quadrature import QuadratureResult, gauss_kronrod
from .reconstruction import HermiteReconstruction, eval, eval_derivative

__all__ = [
    "ESTIMATOR_KINDS",
    "WeightedErrorEstimate",
    "QuadratureResult",
    "gauss_kronrod",
    "residual_function",
    "residual_norm_l1",
    "residual_norm_l2",
    "residual_gronwall_increment",
    "weighted_residual",
    "embedded_weighted",
]

ESTIMATOR_KINDS = ("embedded", "residual-l1", "residual-l2")

ODE_RTOL = 1e-8
PDE_RTOL = 1e-6
QUAD_ATOL = 1e-14

# per-evaluation rounding allowance, in units of ||u_hat'|| + ||f(u_hat)||
ROUNDING_SLACK = 8.0 * np.finfo(float).eps


@dataclass(frozen=True)
class WeightedErrorEstimate:
    """Estimate ``w`` relative to the tolerance (``w <= 1`` means on target)."""

    w: float
    raw_norm: float
    kind: str
    k: Optional[int] = None
    flagged: bool = False


def residual_function(
    rec: HermiteReconstruction, f: Callable, t_n: float, vectorized: bool = False, rounding: bool = False
):
    """Return ``g(tau) = ||u_hat'(tau) - f(t_n + tau, u_hat(tau))||_2`` for arrays of ``tau``.

    With ``vectorized=True`` the right-hand side is called once as
    ``f(t_array, U)`` with ``U`` of shape ``(m, n)``. ``rounding=True`` adds
    ``ROUNDING_SLACK * (||u_hat'|| + ||f||)``, an upper allowance for the
    cancellation in the difference.
    """

    def g(tau):
        tau = np.clip(np.asarray(tau, dtype=float), 0.0, rec.dt)
        U = eval(rec, tau)
        dU = eval_derivative(rec, tau)
        if vectorized:
            F = np.asarray(f(t_n + tau, U), dtype=float)
        else:
            F = np.column_stack([f(t_n + ti, U[:, j]) for j, ti in enumerate(tau)])
        r = np.sqrt(np.sum((dU - F) ** 2, axis=0))
        if rounding:
            r = r + ROUNDING_SLACK * (np.sqrt(np.sum(dU**2, axis=0)) + np.sqrt(np.sum(F**2, axis=0)))
        return r

    return g


def residual_norm_l1(
    rec: HermiteReconstruction,
    f: Callable,
    t_n: float,
    rtol: float = ODE_RTOL,
    atol: float = QUAD_ATOL,
    vectorized: bool = False,
    max_subdiv: int = 10_000,
) -> QuadratureResult:
    """``||R||_{L1(t_n, t_n + dt)}`` of the residual of ``rec``."""
    g = residual_function(rec, f, t_n, vectorized)
    return gauss_kronrod(g, 0.0, rec.dt, rtol, atol, max_subdiv, vectorized=True)


def residual_norm_l2(
    rec: HermiteReconstruction,
    f: Callable,
    t_n: float,
    rtol: float = ODE_RTOL,
    atol: float = QUAD_ATOL,
    vectorized: bool = False,
    max_subdiv: int = 10_000,
) -> QuadratureResult:
    """``sqrt(dt) * ||R||_{L2}``, i.e. ``sqrt(dt * int ||R||^2)``.

    The error bound of the squared integral is pushed through the square root.
    """
    g = residual_function(rec, f, t_n, vectorized)
    q = gauss_kronrod(lambda tau: g(tau) ** 2, 0.0, rec.dt, rtol, atol, max_subdiv, vectorized=True)
    value = math.sqrt(rec.dt * max(q.value, 0.0))
    upper = math.sqrt(rec.dt * (max(q.value, 0.0) + q.error_estimate))
    return QuadratureResult(value, upper - value, q.subdivisions, q.converged, q.evaluations)


def residual_gronwall_increment(
    rec: HermiteReconstruction,
    f: Callable,
    t_n: float,
    L: float,
    t0: float = 0.0,
    rtol: float = ODE_RTOL,
    atol: float = QUAD_ATOL,
    vectorized: bool = False,
    max_subdiv: int = 10_000,
) -> QuadratureResult:
    """``int_{t_n}^{t_n+dt} ||R(s)|| exp(-L (s - t0)) ds``, with the rounding allowance included."""
    g = residual_function(rec, f, t_n, vectorized, rounding=True)
    shift = t_n - t0
    return gauss_kronrod(
        lambda tau: g(tau) * np.exp(-L * (shift + tau)), 0.0, rec.dt, rtol, atol, max_subdiv, vectorized=True
    )


def weighted_residual(
    raw_norm,
    u_n,
    u_np1,
    tau_a: float,
    tau_r: float,
    kind: str = "residual-l1",
    k: Optional[int] = None,
) -> WeightedErrorEstimate:
    """Divide a residual norm by ``tau_a + tau_r max(||u_n||, ||u_np1||)``.

    ``raw_norm`` may be a float or a :class:`QuadratureResult`; an unconverged
    quadrature contributes its error bound to ``w``.
    """
    flagged = False
    if isinstance(raw_norm, QuadratureResult):
        value = raw_norm.value
        if not raw_norm.converged:
            flagged = True
            value += raw_norm.error_estimate
    else:
        value = float(raw_norm)
    denom = tau_a + tau_r * max(float(np.linalg.norm(u_n)), float(np.linalg.norm(u_np1)))
    if not denom > 0:
        raise ValueError("zero tolerance denominator")
    return WeightedErrorEstimate(value / denom, value, kind, k, flagged)


def embedded_weighted(u_np1, u_hat_np1, u_n, tau_a: float, tau_r: float, k: Optional[int] = None) -> WeightedErrorEstimate:
    """Componentwise weighted RMS of ``u_np1 - u_hat_np1``."""
    u_np1 = np.atleast_1d(np.asarray(u_np1, dtype=float))
    u_hat_np1 = np.atleast_1d(np.asarray(u_hat_np1, dtype=float))
    u_n = np.atleast_1d(np.asarray(u_n, dtype=float))
    if not (u_np1.shape == u_hat_np1.shape == u_n.shape):
        raise ValueError("state shapes differ")
    denom = tau_a + tau_r * np.maximum(np.abs(u_np1), np.abs(u_n))
    if np.any(denom <= 0):
        raise ValueError("zero tolerance denominator")
    diff = u_np1 - u_hat_np1
    w = float(np.sqrt(np.mean((diff / denom) ** 2)))
    return WeightedErrorEstimate(w, float(np.linalg.norm(diff)), "embedded", k)
