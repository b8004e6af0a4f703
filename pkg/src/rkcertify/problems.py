"""Test problems: stiff-ish ODEs, reliability problems and small semidiscretized PDEs.

Every right-hand side accepts either a state of shape ``(m,)`` with a scalar
time, or a batch of states of shape ``(m, n)`` with ``n`` times; the residual
quadrature relies on the batched form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

__all__ = [
    "Problem",
    "PROBLEMS",
    "make_problem",
    "hairer_wanner",
    "krogh",
    "krogh_matrices",
    "rigid_body",
    "RIGID_BODY_M",
    "lipschitz_linear",
    "lipschitz_nonlinear",
    "bbm_fourier",
    "bbm_traveling_wave",
    "advection_1d_upwind",
]


@dataclass
class Problem:
    """An initial value problem ``u' = f(t, u)``, ``u(t0) = u0``.

    ``L`` is a one-sided Lipschitz constant when one is known, ``reference``
    an exact solution ``t -> u(t)`` when one is known. ``quad_rtol`` is the
    relative tolerance for residual quadratures on this problem.
    """

    name: str
    f: Callable
    u0: np.ndarray
    t_span: tuple
    L: Optional[float] = None
    reference: Optional[Callable] = None
    vectorized: bool = True
    quad_rtol: float = 1e-8
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.u0 = np.atleast_1d(np.asarray(self.u0, dtype=float))
        self.t_span = (float(self.t_span[0]), float(self.t_span[1]))
        if not np.all(np.isfinite(self.f(self.t_span[0], self.u0))):
            raise ValueError(f"{self.name}: f(t0, u0) is not finite")


def hairer_wanner() -> Problem:
    """Linear problem with a rotating stiff Jacobian (Hairer & Wanner, ODEs II, IV.2)."""

    def f(t, u):
        c, s = np.cos(t), np.sin(t)
        return -2000.0 * np.array([c * u[0] + s * u[1] + 1.0, -s * u[0] + c * u[1] + 1.0])

    return Problem("hairer_wanner", f, [1.0, 0.0], (0.0, 1.57))


def krogh_matrices(phi: float):
    """Return ``(U, B)`` for Krogh's problem with parameter ``phi``."""
    U = 0.5 * (np.ones((4, 4)) - 2.0 * np.eye(4))
    c, s = math.cos(phi), math.sin(phi)
    M = np.array([
        [-10.0 * c, -10.0 * s, 0.0, 0.0],
        [10.0 * s, -10.0 * c, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.5],
    ])
    return U, U.T @ M @ U


def krogh(phi: float) -> Problem:
    """Krogh's nonlinear test problem; dominant eigenvalues tend to ``-10|cos phi| +- 10 i sin phi``."""
    U, B = krogh_matrices(phi)

    def f(t, u):
        z = U @ u
        nl = np.array([0.5 * z[0] ** 2 - 0.5 * z[1] ** 2, z[0] * z[1], z[2] ** 2, z[3] ** 2])
        return -(B @ u) + U.T @ nl

    return Problem("krogh", f, [0.0, -2.0, -1.0, -1.0], (0.0, 100.0), params={"phi": phi})


RIGID_BODY_M = 0.51


def _rigid_body_exact(t):
    sn, cn, dn, _ = special.ellipj(np.asarray(t, dtype=float), RIGID_BODY_M)
    return np.array([sn, cn, dn])


def rigid_body() -> Problem:
    """Euler equations of a rigid body over one period.

    The exact solution is ``(sn, cn, dn)(t | m=0.51)``, so the period is
    ``4 K(0.51)``.
    """

    def f(t, u):
        return np.array([u[1] * u[2], -u[0] * u[2], -RIGID_BODY_M * u[0] * u[1]])

    period = 4.0 * float(special.ellipk(RIGID_BODY_M))
    return Problem("rigid_body", f, [0.0, 1.0, 1.0], (0.0, period), reference=_rigid_body_exact,
                   params={"period": period})


def lipschitz_linear() -> Problem:
    def f(t, u):
        return np.asarray(u, dtype=float).copy()

    return Problem("lipschitz_linear", f, [1.0], (0.0, 1.0), L=1.0,
                   reference=lambda t: np.atleast_1d(np.exp(t)))


def lipschitz_nonlinear() -> Problem:
    """``u' = exp(-u)``, ``u(0) = 1``; exact ``log(e + t)``; one-sided Lipschitz constant 0."""

    def f(t, u):
        return np.exp(-np.asarray(u, dtype=float))

    return Problem("lipschitz_nonlinear", f, [1.0], (0.0, 100.0), L=0.0,
                   reference=lambda t: np.atleast_1d(np.log(math.e + np.asarray(t, dtype=float))))


BBM_DOMAIN = (-90.0, 90.0)


def bbm_traveling_wave(t, x, c: float = 1.2):
    """Solitary wave ``3 (c-1) sech^2(K (x - c t))`` wrapped onto the periodic domain."""
    lo, hi = BBM_DOMAIN
    length = hi - lo
    A = 3.0 * (c - 1.0)
    K = 0.5 * math.sqrt(1.0 - 1.0 / c)
    xi = np.mod(np.asarray(x) - c * t - lo, length) + lo
    return A / np.cosh(K * xi) ** 2


def bbm_fourier(N: int = 256, c: float = 1.2) -> Problem:
    """Fourier collocation of the BBM equation on ``[-90, 90]``.

    The nonlinear flux uses the split form ``(D(u^2) + u D u) / 3`` with a
    real skew-symmetric derivative ``D`` (Nyquist mode dropped), which conserves
    ``sum(u)`` and ``sum(u^2 + (D u)^2)`` exactly in the semidiscretization.
    """
    if N < 2 or N & (N - 1):
        raise ValueError(f"N must be a power of two, got {N}")
    lo, hi = BBM_DOMAIN
    length = hi - lo
    x = lo + length * np.arange(N) / N
    k = 2.0 * np.pi * np.fft.rfftfreq(N, d=length / N)
    ik = 1j * k
    ik[-1] = 0.0
    # (I - D^2)^{-1} with the same D, so the Nyquist mode is left alone too
    inv_elliptic = 1.0 / (1.0 - (ik * ik).real)

    def f(t, u):
        u = np.asarray(u, dtype=float)
        uh = np.fft.rfft(u, axis=0)
        shape = (-1,) + (1,) * (u.ndim - 1)
        ikb = ik.reshape(shape)
        Du = np.fft.irfft(ikb * uh, n=N, axis=0)
        flux_h = ikb * np.fft.rfft(u * u, axis=0) / 3.0 + np.fft.rfft(u * Du, axis=0) / 3.0 + ikb * uh
        return -np.fft.irfft(inv_elliptic.reshape(shape) * flux_h, n=N, axis=0)

    def derivative(u):
        return np.fft.irfft(ik * np.fft.rfft(u), n=N)

    t_end = length / c
    return Problem(
        "bbm",
        f,
        bbm_traveling_wave(0.0, x, c),
        (0.0, t_end),
        reference=lambda t: bbm_traveling_wave(t, x, c),
        quad_rtol=1e-6,
        params={"N": N, "c": c, "x": x, "dx": length / N, "derivative": derivative},
    )


def advection_1d_upwind(N: int = 64, t_end: float = 4.0) -> Problem:
    """First-order upwind semidiscretization of ``u_t + u_x = 0`` on periodic ``[-1, 1]``.

    The reference is the exact solution of the semidiscrete system (each Fourier
    mode evolves with the circulant eigenvalue ``-(N/2)(1 - exp(-2 pi i k / N))``).
    """
    dx = 2.0 / N
    x = -1.0 + dx * np.arange(N)
    u0 = np.sin(np.pi * x)
    lam = -(1.0 / dx) * (1.0 - np.exp(-2j * np.pi * np.fft.fftfreq(N)))
    u0h = np.fft.fft(u0)

    def f(t, u):
        u = np.asarray(u, dtype=float)
        return -(u - np.roll(u, 1, axis=0)) / dx

    def reference(t):
        return np.real(np.fft.ifft(np.exp(lam * t) * u0h))

    return Problem("advection", f, u0, (0.0, t_end), reference=reference, quad_rtol=1e-6,
                   params={"N": N, "x": x, "dx": dx, "eigenvalues": lam})


PROBLEMS = {
    "hairer_wanner": hairer_wanner,
    "krogh": krogh,
    "rigid_body": rigid_body,
    "lipschitz_linear": lipschitz_linear,
    "lipschitz_nonlinear": lipschitz_nonlinear,
    "bbm": bbm_fourier,
    "advection": advection_1d_upwind,
}


def make_problem(name: str, **params) -> Problem:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; known problems: {sorted(PROBLEMS)}") from None
    return factory(**params)
