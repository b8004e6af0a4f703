"""Step-size-control stability on ``u' = lambda u``.

At a fixed point of the coupled (log|u|, log dt) dynamics, ``z = dt lambda``
lies on the boundary of the stability region. The controller is stable there
when the Jacobian of that map has spectral radius at most one; this module
builds those Jacobians for embedded and residual estimators and scans them
along the boundary.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .controller import ControllerConfig
from .quadrature import gauss_kronrod
from .tableau import embedded_error_polynomial, make_tableau, stability_polynomial

__all__ = [
    "BoundaryPoint",
    "ControlJacobian",
    "StabilityPoint",
    "boundary_radius",
    "boundary_point",
    "mu",
    "nu",
    "central_l1_error",
    "central_l2_error",
    "residual_log_sensitivity",
    "build_jacobian",
    "char_poly",
    "polynomial_roots",
    "spectral_radius",
    "stability_map",
    "default_phi_grid",
]


@dataclass(frozen=True)
class BoundaryPoint:
    phi: float
    r: float

    @property
    def z(self) -> complex:
        return self.r * cmath.exp(1j * self.phi)


@dataclass(frozen=True)
class ControlJacobian:
    entries: np.ndarray
    mu: float
    nu_or_q: float


@dataclass(frozen=True)
class StabilityPoint:
    phi: float
    r: Optional[float]
    z: Optional[complex]
    spectral_radius: Optional[float]
    error: str = ""


def _poly_abs(R: Polynomial, z: complex) -> float:
    return abs(complex(R(z)))


def boundary_radius(R: Polynomial, phi: float, step: float = 1e-2, r_max: float = 20.0, tol: float = 1e-12) -> float:
    """Radius where the ray ``r exp(i phi)`` first leaves ``|R| <= 1``.

    Marches outward in steps of ``step`` and bisects the first bracket down to
    ``tol``.
    """
    direction = cmath.exp(1j * phi)
    inside = 0.0
    r = step
    while r <= r_max + 0.5 * step:
        if _poly_abs(R, r * direction) > 1.0:
            lo, hi = inside, r
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if _poly_abs(R, mid * direction) > 1.0:
                    hi = mid
                else:
                    lo = mid
            if lo == 0.0:
                # the ray leaves |R| <= 1 immediately: no interior to cross from
                break
            return 0.5 * (lo + hi)
        inside = r
        r += step
    raise ValueError(f"no stability boundary crossing up to r={r_max} at phi={phi}")


def boundary_point(R: Polynomial, phi: float) -> BoundaryPoint:
    return BoundaryPoint(phi, boundary_radius(R, phi))


def _log_derivative(P: Polynomial, z: complex) -> float:
    val = complex(P(z))
    if val == 0:
        raise ZeroDivisionError(f"polynomial vanishes at z={z}")
    return (complex(P.deriv()(z)) * z / val).real


def mu(R: Polynomial, z: complex) -> float:
    """``Re(z R'(z) / R(z))``, the sensitivity of ``log|u|`` to ``log dt``."""
    return _log_derivative(R, z)


def nu(E: Polynomial, z: complex) -> float:
    """``Re(z E'(z) / E(z))`` for the embedded error polynomial."""
    return _log_derivative(E, z)


# Residual error norms of one step on u' = lambda u with |u^n| = 1.

def _central_h(t, dt, lam):
    g = t - 2.0 * dt + t * dt * lam
    return t * (dt - t) * np.abs(g) * abs(lam) ** 4 / 6.0


def _central_dh_ddt(t, dt, lam):
    g = t - 2.0 * dt + t * dt * lam
    ag = np.abs(g)
    dg = -2.0 + t * lam
    with np.errstate(invalid="ignore", divide="ignore"):
        dabs = np.where(ag > 0, np.real(np.conj(g) * dg) / np.where(ag > 0, ag, 1.0), 0.0)
    return (t * ag + t * (dt - t) * dabs) * abs(lam) ** 4 / 6.0


def _kinks(dt: float, lam: complex) -> list:
    if lam.imag != 0.0:
        return []
    denom = 1.0 + dt * lam.real
    if denom == 0.0:
        return []
    t_star = 2.0 * dt / denom
    return [t_star] if 0.0 < t_star < dt else []


def central_l1_error(z: complex, dt: float = 1.0, rtol: float = 1e-8, atol: float = 1e-14):
    """``||R||_{L1}`` of the central cubic Hermite reconstruction of one BS3 step (``|u^n| = 1``)."""
    lam = complex(z) / dt
    return gauss_kronrod(lambda t: _central_h(t, dt, lam), 0.0, dt, rtol, atol, vectorized=True,
                         breakpoints=_kinks(dt, lam))


def central_l2_error(z: complex, dt: float = 1.0) -> float:
    """Closed form ``sqrt(dt) ||R||_{L2}`` for the central cubic reconstruction (``|u^n| = 1``)."""
    z = complex(z)
    lam = abs(z) / dt
    return dt**4 * lam**4 * math.sqrt(8.0 + abs(z) ** 2 - 5.0 * z.real) / (6.0 * math.sqrt(105.0))


_ORDER_CONSTANT = {"euler": 2.0, "heun2_euler1": 3.0}


def residual_log_sensitivity(
    method: str,
    estimator: str,
    z: complex,
    dt: float = 1.0,
    reconstruction: str = "central",
    rtol: float = 1e-8,
    atol: float = 1e-14,
) -> float:
    """``d log|e_{n+1}| / d log dt`` at fixed ``lambda`` for a residual estimator.

    ``reconstruction`` only matters for ``bs3``: ``"left"`` is the left-biased
    cubic (constant 4 for L1 and L2), ``"central"`` the one used at run time.
    """
    tab = make_tableau(method)
    if estimator not in ("residual-l1", "residual-l2"):
        raise ValueError(f"not a residual estimator: {estimator!r}")
    if tab.name in _ORDER_CONSTANT:
        return _ORDER_CONSTANT[tab.name]
    if tab.name != "bs3":
        raise ValueError(f"no residual sensitivity for method {method!r}")
    if reconstruction == "left":
        return 4.0
    if reconstruction != "central":
        raise ValueError(f"unknown reconstruction {reconstruction!r}")
    z = complex(z)
    if estimator == "residual-l2":
        a2 = abs(z) ** 2
        return (64.0 + 10.0 * a2 - 45.0 * z.real) / (2.0 * (8.0 + a2 - 5.0 * z.real))
    lam = z / dt
    kinks = _kinks(dt, lam)
    e = gauss_kronrod(lambda t: _central_h(t, dt, lam), 0.0, dt, rtol, atol, vectorized=True, breakpoints=kinks)
    de = gauss_kronrod(lambda t: _central_dh_ddt(t, dt, lam), 0.0, dt, rtol, atol, vectorized=True,
                       breakpoints=kinks)
    if not (e.converged and de.converged):
        warnings.warn(f"sensitivity quadrature did not converge at z={z}", RuntimeWarning)
    h_end = float(_central_h(dt, dt, lam))
    return dt * (h_end + de.value) / e.value


def _sensitivity(method: str, estimator: str, z: complex, reconstruction: str) -> float:
    if estimator == "embedded":
        return nu(embedded_error_polynomial(make_tableau(method)), z)
    return residual_log_sensitivity(method, estimator, z, reconstruction=reconstruction)


def build_jacobian(
    controller: ControllerConfig,
    estimator: str,
    method: str,
    z: complex,
    reconstruction: str = "central",
) -> ControlJacobian:
    """Jacobian of the (log|u|, log dt) controller dynamics at ``z``.

    Size 2 for an I controller, 4 for PI and 6 for PID. Row 1 is
    ``(1, mu, 0, ...)``, row 2 holds ``-beta_i / k`` and ``-beta_i q / k``
    (plus the identity on the current ``log dt``), the rest shift the history.
    """
    tab = make_tableau(method)
    if estimator == "embedded" and not tab.has_embedded:
        raise ValueError(f"method {method!r} has no embedded weights")
    b1, b2, b3 = controller.beta
    n = 2 if (b2 == 0.0 and b3 == 0.0) else (4 if b3 == 0.0 else 6)
    k = controller.k
    m = mu(stability_polynomial(tab), z)
    q = _sensitivity(tab.name, estimator, z, reconstruction)
    J = np.zeros((n, n))
    J[0, 0] = 1.0
    J[0, 1] = m
    for i, b in enumerate((b1, b2, b3)[: n // 2]):
        J[1, 2 * i] = -b / k
        J[1, 2 * i + 1] = -b * q / k
    J[1, 1] += 1.0
    for i in range(2, n):
        J[i, i - 2] = 1.0
    return ControlJacobian(J, m, q)


def char_poly(M: np.ndarray) -> np.ndarray:
    """Characteristic polynomial coefficients (ascending, monic) by Faddeev-LeVerrier."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    Mk = np.zeros_like(M)
    eye = np.eye(n)
    for k in range(1, n + 1):
        Mk = M @ Mk + coeffs[n - k + 1] * eye
        coeffs[n - k] = -np.trace(M @ Mk) / k
    return coeffs


def polynomial_roots(coeffs: Sequence[float], tol: float = 1e-10, max_sweeps: int = 1000) -> np.ndarray:
    """Roots of a polynomial (ascending coefficients) by Durand-Kerner iteration."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    n_zero = 0
    while len(c) > 1 and c[0] == 0:
        c = c[1:]
        n_zero += 1
    deg = len(c) - 1
    if deg < 1:
        return np.zeros(n_zero, dtype=complex)
    c = c / c[-1]
    z = (0.4 + 0.9j) ** np.arange(deg)
    for _ in range(max_sweeps):
        delta_max = 0.0
        for j in range(deg):
            num = np.polyval(c[::-1], z[j])
            den = np.prod(z[j] - np.delete(z, j))
            step = num / den if den != 0 else 0.0
            z[j] -= step
            delta_max = max(delta_max, abs(step) / max(1.0, abs(z[j])))
        if delta_max < tol:
            return np.concatenate([z, np.zeros(n_zero, dtype=complex)])
    raise RuntimeError(f"Durand-Kerner did not converge in {max_sweeps} sweeps")


def spectral_radius(M: np.ndarray) -> float:
    """Largest eigenvalue modulus of a small real matrix."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 1:
        return abs(M[0, 0])
    if n == 2:
        half_tr = 0.5 * (M[0, 0] + M[1, 1])
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        root = cmath.sqrt(half_tr * half_tr - det)
        return max(abs(half_tr + root), abs(half_tr - root))
    return float(np.max(np.abs(polynomial_roots(char_poly(M)))))


def default_phi_grid(n: int = 256) -> np.ndarray:
    """``n`` uniform angles in ``(pi/2, pi]``."""
    return 0.5 * np.pi + 0.5 * np.pi * np.arange(1, n + 1) / n


def stability_map(
    method: str,
    estimator: str,
    controller: ControllerConfig,
    phi_grid: Optional[Sequence[float]] = None,
    reconstruction: str = "central",
) -> list:
    """Spectral radius of the controller Jacobian along the stability boundary.

    Points where the boundary or the Jacobian cannot be computed are returned
    with ``None`` fields and the error message.
    """
    R = stability_polynomial(make_tableau(method))
    grid = default_phi_grid() if phi_grid is None else phi_grid
    out = []
    for phi in grid:
        phi = float(phi)
        try:
            bp = boundary_point(R, phi)
        except ValueError as exc:
            out.append(StabilityPoint(phi, None, None, None, str(exc)))
            continue
        try:
            J = build_jacobian(controller, estimator, method, bp.z, reconstruction)
            rho = spectral_radius(J.entries)
        except (ValueError, ZeroDivisionError, RuntimeError) as exc:
            out.append(StabilityPoint(phi, bp.r, bp.z, None, str(exc)))
            continue
        out.append(StabilityPoint(phi, bp.r, bp.z, rho))
    return out
