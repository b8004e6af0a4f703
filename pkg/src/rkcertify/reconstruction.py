"""Per-step Hermite reconstructions of a Runge-Kutta solution.

Each reconstruction lives on one step only, in local time ``tau in [0, dt]``,
and is stored as monomial coefficients (ascending degree, one row per degree)
so that values and derivatives at many nodes are a couple of Horner passes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HermiteReconstruction",
    "KINDS",
    "RECONSTRUCTION_FOR_METHOD",
    "build_reconstruction",
    "eval",
    "eval_derivative",
]

KINDS = ("linear", "quadratic-left", "cubic-central")

# method -> reconstruction whose residual has the matching order
RECONSTRUCTION_FOR_METHOD = {
    "euler": "linear",
    "heun2_euler1": "quadratic-left",
    "bs3": "cubic-central",
}

_DEGREE = {"linear": 1, "quadratic-left": 2, "cubic-central": 3}


@dataclass(frozen=True)
class HermiteReconstruction:
    """Polynomial ``u_hat(tau) = sum_j coeffs[j] tau**j`` on ``[0, dt]``."""

    coeffs: np.ndarray  # shape (degree + 1, m)
    dt: float
    kind: str

    @property
    def degree(self) -> int:
        return _DEGREE[self.kind]

    def __call__(self, tau):
        return eval(self, tau)

    def derivative(self, tau):
        return eval_derivative(self, tau)


def build_reconstruction(
    kind: str,
    u_n,
    f_n,
    u_np1,
    f_np1=None,
    dt: float = 1.0,
) -> HermiteReconstruction:
    """Build the reconstruction of one step.

    ``linear`` interpolates the two endpoint values, ``quadratic-left`` adds
    ``u_hat'(0) = f_n`` and ``cubic-central`` adds both endpoint derivatives.
    """
    if kind not in _DEGREE:
        raise ValueError(f"unknown reconstruction {kind!r}; expected one of {KINDS}")
    if not dt > 0:
        raise ValueError("dt must be positive")
    u_n = np.atleast_1d(np.asarray(u_n, dtype=float))
    u_np1 = np.atleast_1d(np.asarray(u_np1, dtype=float))
    diff = u_np1 - u_n
    if kind == "linear":
        coeffs = np.stack([u_n, diff / dt])
    elif kind == "quadratic-left":
        f_n = np.atleast_1d(np.asarray(f_n, dtype=float))
        # (1 - tau^2/dt^2) u_n + (tau - tau^2/dt) f_n + tau^2/dt^2 u_np1
        coeffs = np.stack([u_n, f_n, diff / dt**2 - f_n / dt])
    else:
        if f_np1 is None:
            raise ValueError("cubic-central reconstruction needs f_np1")
        f_n = np.atleast_1d(np.asarray(f_n, dtype=float))
        f_np1 = np.atleast_1d(np.asarray(f_np1, dtype=float))
        c2 = 3.0 * diff / dt**2 - (2.0 * f_n + f_np1) / dt
        c3 = -2.0 * diff / dt**3 + (f_n + f_np1) / dt**2
        coeffs = np.stack([u_n, f_n, c2, c3])
    return HermiteReconstruction(coeffs=coeffs, dt=float(dt), kind=kind)


def _check_range(rec: HermiteReconstruction, tau) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    # tiny slack for nodes produced by affine maps of [0, dt]
    slack = 1e-12 * rec.dt
    if np.any(tau < -slack) or np.any(tau > rec.dt + slack):
        raise ValueError(f"tau outside [0, {rec.dt}]")
    return tau


def eval(rec: HermiteReconstruction, tau):
    """Value of the reconstruction; array ``tau`` gives shape ``(m, len(tau))``."""
    tau = _check_range(rec, tau)
    c = rec.coeffs
    if tau.ndim == 0:
        acc = c[-1].copy()
        for j in range(len(c) - 2, -1, -1):
            acc = acc * tau + c[j]
        return acc
    acc = np.repeat(c[-1][:, None], tau.size, axis=1)
    for j in range(len(c) - 2, -1, -1):
        acc = acc * tau + c[j][:, None]
    return acc


def eval_derivative(rec: HermiteReconstruction, tau):
    """First derivative in local time, same shape conventions as :func:`eval`."""
    tau = _check_range(rec, tau)
    c = rec.coeffs
    d = [j * c[j] for j in range(1, len(c))]
    if tau.ndim == 0:
        acc = d[-1].copy()
        for j in range(len(d) - 2, -1, -1):
            acc = acc * tau + d[j]
        return acc
    acc = np.repeat(d[-1][:, None], tau.size, axis=1)
    for j in range(len(d) - 2, -1, -1):
        acc = acc * tau + d[j][:, None]
    return acc
