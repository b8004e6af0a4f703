"""Adaptive solve loop and the Gronwall global-error certificate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .controller import ControllerConfig, ControllerState, decide, initial_step_size
from .estimators import (
    ESTIMATOR_KINDS,
    QUAD_ATOL,
    embedded_weighted,
    residual_gronwall_increment,
    residual_norm_l1,
    residual_norm_l2,
    weighted_residual,
)
from .problems import Problem
from .reconstruction import RECONSTRUCTION_FOR_METHOD, build_reconstruction
from .tableau import StepFailure, make_tableau, rk_step

__all__ = ["StepRecord", "IntegrationTrace", "solve", "gronwall_bound", "default_k", "final_error"]


@dataclass(frozen=True)
class StepRecord:
    t: float
    dt: float
    w: float
    accepted: bool
    raw_norm: float
    gronwall_increment: float = 0.0
    truncated: bool = False


@dataclass
class IntegrationTrace:
    records: list = field(default_factory=list)
    u_final: Optional[np.ndarray] = None
    t_final: float = 0.0
    t0: float = 0.0
    n_accepted: int = 0
    n_rejected: int = 0
    gronwall_integral: float = 0.0
    gronwall_enabled: bool = False
    method: str = ""
    estimator: str = ""
    status: str = "success"
    message: str = ""
    n_rhs: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "success"

    def accepted_steps(self, controlled_only: bool = False) -> np.ndarray:
        """Array of accepted step sizes.

        ``controlled_only`` drops the final step when it was shortened to
        land on the end time.
        """
        return np.array([r.dt for r in self.records if r.accepted and not (controlled_only and r.truncated)])


def default_k(method: str, estimator: str) -> int:
    """Order exponent: ``p`` for embedded pairs, ``p + 1`` for residual estimators."""
    tab = make_tableau(method)
    return tab.p if estimator == "embedded" else tab.p + 1


class _CountingRHS:
    def __init__(self, f):
        self.f = f
        self.calls = 0

    def __call__(self, t, u):
        u = np.asarray(u)
        self.calls += 1 if u.ndim < 2 else u.shape[1]
        return self.f(t, u)


def solve(
    problem: Problem,
    method: str,
    estimator: str,
    cfg: ControllerConfig,
    tau_a: float,
    tau_r: float,
    t_span: Optional[tuple] = None,
    L: Optional[float] = None,
    quad_rtol: Optional[float] = None,
    quad_atol: float = QUAD_ATOL,
    dt0: Optional[float] = None,
    record_rejected: bool = True,
) -> IntegrationTrace:
    """Integrate ``problem`` adaptively.

    Parameters
    ----------
    problem : Problem
    method : str
        Tableau name, see :func:`rkcertify.tableau.make_tableau`.
    estimator : {"embedded", "residual-l1", "residual-l2"}
    cfg : ControllerConfig
        Missing ``dt_min``/``dt_max`` default to ``1e-14`` times and one
        times the span length.
    tau_a, tau_r : float
        Absolute and relative tolerances.
    t_span : tuple, optional
        Defaults to ``problem.t_span``.
    L : float, optional
        One-sided Lipschitz constant. With a residual estimator the integral
        ``int ||R(s)|| exp(-L s) ds`` is accumulated for :func:`gronwall_bound`.
    quad_rtol : float, optional
        Residual quadrature tolerance; defaults to ``problem.quad_rtol``.
    dt0 : float, optional
        Starting step; otherwise chosen by :func:`initial_step_size` with
        exponent ``1 / p``.
    record_rejected : bool
        Set to False to keep only accepted steps in ``records`` (long PDE runs).

    Returns
    -------
    IntegrationTrace
        ``status`` is ``"success"``, ``"max_rejections"`` or ``"dt_min"``; on
        abort the trace holds everything up to that point. Non-finite stages
        count as rejections.
    """
    if estimator not in ESTIMATOR_KINDS:
        raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATOR_KINDS}")
    tab = make_tableau(method)
    if estimator == "embedded" and not tab.has_embedded:
        raise ValueError(f"method {tab.name!r} has no embedded weights")
    t0, t_end = problem.t_span if t_span is None else (float(t_span[0]), float(t_span[1]))
    if not t_end > t0:
        raise ValueError("empty time span")
    cfg = cfg.with_span(t0, t_end)
    residual = estimator != "embedded"
    rec_kind = RECONSTRUCTION_FOR_METHOD[tab.name]
    rtol_q = problem.quad_rtol if quad_rtol is None else quad_rtol
    gronwall = residual and L is not None
    vec = problem.vectorized
    f = _CountingRHS(problem.f)

    trace = IntegrationTrace(t0=t0, t_final=t0, gronwall_enabled=gronwall, method=tab.name,
                             estimator=estimator)
    t = t0
    u = problem.u0.copy()
    f_n = np.asarray(f(t, u), dtype=float)
    if dt0 is None:
        dt = initial_step_size(f, t0, u, tab.p, tau_a, tau_r, exponent=1.0 / tab.p)
    else:
        dt = float(dt0)
    dt = min(max(dt, cfg.dt_min), cfg.dt_max)
    st = ControllerState()
    consecutive = 0

    while t < t_end:
        remaining = t_end - t
        last = dt >= remaining * (1.0 - 1e-12)
        h = remaining if last else dt
        try:
            u_next, ks, f_fsal = rk_step(tab, f, t, u, h, f0=f_n)
            f_np1 = f_fsal if f_fsal is not None else None
            if residual:
                if f_np1 is None:
                    f_np1 = np.asarray(f(t + h, u_next), dtype=float)
                rec_hat = build_reconstruction(rec_kind, u, f_n, u_next, f_np1, h)
                norm = residual_norm_l1 if estimator == "residual-l1" else residual_norm_l2
                q = norm(rec_hat, f, t, rtol_q, quad_atol, vectorized=vec)
                est = weighted_residual(q, u, u_next, tau_a, tau_r, kind=estimator, k=cfg.k)
            else:
                # difference weights applied directly; avoids cancellation in u_next - u_hat
                diff = np.zeros_like(u)
                derivs = ks + [f_np1] if tab.fsal else ks
                for wi, ki in zip(tab.error_weights, derivs):
                    if wi != 0.0:
                        diff = diff + wi * ki
                est = embedded_weighted(u_next, u_next - h * diff, u, tau_a, tau_r, k=cfg.k)
            w = est.w
        except StepFailure as exc:
            w = math.inf
            est = None
            trace.message = str(exc)

        ok, dt_next, st_next = decide(cfg, st, w, h)
        if ok:
            incr = 0.0
            if gronwall:
                # quadrature error bound added so the certificate stays an upper bound
                gq = residual_gronwall_increment(rec_hat, f, t, L, t0, rtol_q, quad_atol, vectorized=vec)
                incr = gq.value + gq.error_estimate
                trace.gronwall_integral += incr
            trace.records.append(StepRecord(t, h, w, True, est.raw_norm, incr, truncated=last and h < dt))
            trace.n_accepted += 1
            t = t_end if last else t + h
            u = u_next
            if f_np1 is None:
                f_np1 = np.asarray(f(t, u), dtype=float)
            f_n = f_np1
            consecutive = 0
            if not last:
                st = st_next
                dt = dt_next
        else:
            if record_rejected:
                trace.records.append(StepRecord(t, h, w, False, math.nan if est is None else est.raw_norm, 0.0))
            trace.n_rejected += 1
            consecutive += 1
            if consecutive > cfg.max_rejections:
                trace.status = "max_rejections"
                trace.message = f"more than {cfg.max_rejections} consecutive rejections at t={t!r}"
                break
            if h <= cfg.dt_min * (1.0 + 1e-12):
                trace.status = "dt_min"
                trace.message = f"step size underflow (dt={h!r} <= dt_min) at t={t!r}"
                break
            dt = dt_next

    trace.u_final = u
    trace.t_final = t
    trace.n_rhs = f.calls
    return trace


def gronwall_bound(trace: IntegrationTrace, L: float, delta0: float = 0.0) -> float:
    """``(delta0 + int ||R|| exp(-L s) ds) * exp(L (t_final - t0))``."""
    if not trace.gronwall_enabled:
        raise ValueError("trace was not produced with a residual estimator and a Lipschitz constant")
    return (delta0 + trace.gronwall_integral) * math.exp(L * (trace.t_final - trace.t0))


def final_error(trace: IntegrationTrace, problem: Problem) -> float:
    """Euclidean error at the final time against ``problem.reference``."""
    if problem.reference is None:
        raise ValueError(f"problem {problem.name!r} has no reference solution")
    return float(np.linalg.norm(trace.u_final - np.asarray(problem.reference(trace.t_final))))
