"""I/PI/PID step-size control with the arctan limiter."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ControllerConfig",
    "ControllerState",
    "I_CONTROLLER",
    "PI_CONTROLLER",
    "EPS_CAP",
    "ACCEPT_SAFETY",
    "limiter",
    "propose",
    "decide",
    "accept",
    "initial_step_size",
]

# epsilon used for a zero error estimate; kappa bounds the resulting growth anyway
EPS_CAP = 1e10
ACCEPT_SAFETY = 0.81

I_CONTROLLER = (1.0, 0.0, 0.0)
PI_CONTROLLER = (0.6, -0.2, 0.0)


@dataclass(frozen=True)
class ControllerConfig:
    """Controller parameters.

    ``dt_min``/``dt_max`` left as ``None`` are filled in from the time span by
    :func:`rkcertify.integrator.solve`.

    By default a step is accepted iff the limited step-size factor is at
    least ``accept_safety = 0.81`` (the rule of OrdinaryDiffEq's
    ``PIDController``). ``accept_safety=None`` switches to the plain test
    ``w <= 1``.
    """

    beta: tuple = I_CONTROLLER
    k: int = 1
    mode: str = "eps"
    dt_min: Optional[float] = None
    dt_max: Optional[float] = None
    max_rejections: int = 100
    accept_safety: Optional[float] = ACCEPT_SAFETY

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta) + (0.0,) * (3 - len(self.beta)))
        if len(self.beta) != 3:
            raise ValueError("beta must have at most three entries")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        mode = self.mode.lower()
        if mode not in ("eps", "epus"):
            raise ValueError(f"mode must be 'eps' or 'epus', got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if self.dt_min is not None and not self.dt_min > 0:
            raise ValueError("dt_min must be positive")
        if self.dt_min is not None and self.dt_max is not None and self.dt_min > self.dt_max:
            raise ValueError("dt_min > dt_max")

    def with_span(self, t0: float, t_end: float) -> "ControllerConfig":
        span = abs(t_end - t0)
        return replace(
            self,
            dt_min=1e-14 * span if self.dt_min is None else self.dt_min,
            dt_max=span if self.dt_max is None else self.dt_max,
        )


@dataclass(frozen=True)
class ControllerState:
    """History ``(eps_n, eps_{n-1})``; both start at the equilibrium value 1."""

    eps_prev: float = 1.0
    eps_prev2: float = 1.0


def limiter(a: float) -> float:
    return 1.0 + math.atan(a - 1.0)


def accept(w: float) -> bool:
    return w <= 1.0


def _epsilon(cfg: ControllerConfig, w: float, dt: float) -> float:
    num = dt if cfg.mode == "epus" else 1.0
    if w == 0.0:
        return EPS_CAP
    return min(num / w, EPS_CAP)


def propose(
    cfg: ControllerConfig,
    st: ControllerState,
    w: float,
    dt: float,
    accepted: Optional[bool] = None,
):
    """Next step size and controller state.

    The history is shifted only when the step is accepted; a rejected step
    retries with the returned size against the old history. A non-finite
    ``w`` halves ``dt``. ``accepted`` overrides the decision of
    :func:`decide`.
    """
    ok, dt_next, st_next = decide(cfg, st, w, dt)
    if accepted is not None and accepted != ok:
        st_next = ControllerState(st_next.eps_prev, st.eps_prev) if accepted else st
    return dt_next, st_next


def decide(cfg: ControllerConfig, st: ControllerState, w: float, dt: float):
    """Return ``(accepted, dt_next, st_next)`` for an estimate ``w`` of a step of size ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not math.isfinite(w):
        return False, _clamp(cfg, 0.5 * dt), st
    if w < 0:
        raise ValueError("w must be nonnegative")
    b1, b2, b3 = cfg.beta
    eps = _epsilon(cfg, w, dt)
    k = cfg.k
    factor = limiter(eps ** (b1 / k) * st.eps_prev ** (b2 / k) * st.eps_prev2 ** (b3 / k))
    if cfg.accept_safety is None:
        accepted = accept(w)
    else:
        accepted = factor >= cfg.accept_safety
    dt_next = _clamp(cfg, factor * dt)
    st_next = ControllerState(eps, st.eps_prev) if accepted else st
    return accepted, dt_next, st_next


def _clamp(cfg: ControllerConfig, dt: float) -> float:
    if cfg.dt_max is not None:
        dt = min(dt, cfg.dt_max)
    if cfg.dt_min is not None:
        dt = max(dt, cfg.dt_min)
    return dt


def _wrms(x: np.ndarray, scale: np.ndarray) -> float:
    return float(np.sqrt(np.mean((x / scale) ** 2)))


def initial_step_size(
    f: Callable, t0: float, u0, p: int, tau_a: float, tau_r: float, exponent: Optional[float] = None
) -> float:
    """Starting step from the Hairer-Norsett-Wanner procedure (Solving ODEs I, II.4).

    Uses the weighted RMS norm with weights ``tau_a + tau_r |u0_i|`` and one
    explicit Euler probe to estimate the second derivative. The final guess is
    ``(0.01 / max(d1, d2)) ** exponent``; the textbook value is ``1 / (p + 1)``,
    OrdinaryDiffEq uses ``1 / p``. The default is the textbook value.
    """
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    f0 = np.atleast_1d(np.asarray(f(t0, u0), dtype=float))
    if not np.all(np.isfinite(f0)):
        raise FloatingPointError("non-finite right-hand side at the initial point")
    scale = tau_a + tau_r * np.abs(u0)
    d0 = _wrms(u0, scale)
    d1 = _wrms(f0, scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    f1 = np.atleast_1d(np.asarray(f(t0 + h0, u0 + h0 * f0), dtype=float))
    if not np.all(np.isfinite(f1)):
        raise FloatingPointError("non-finite right-hand side in the initial-step probe")
    d2 = _wrms(f1 - f0, scale) / h0
    dmax = max(d1, d2)
    if dmax <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dmax) ** (1.0 / (p + 1) if exponent is None else exponent)
    return min(100.0 * h0, h1)
