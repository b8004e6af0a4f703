"""Adaptive Gauss-Kronrod (G7/K15) quadrature with largest-error bisection."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["QuadratureResult", "gauss_kronrod", "KRONROD_NODES", "KRONROD_WEIGHTS", "GAUSS_WEIGHTS"]

# Nonnegative Kronrod abscissae on [-1, 1], largest first; odd indices are the
# 7-point Gauss nodes (index 7 is the shared midpoint).
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full symmetric 15-point layout
KRONROD_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
_GAUSS_MASK = np.zeros(15, dtype=bool)
_GAUSS_MASK[[1, 3, 5, 7, 9, 11, 13]] = True
GAUSS_WEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])

_GW_FULL = np.zeros(15)
_GW_FULL[_GAUSS_MASK] = GAUSS_WEIGHTS


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    subdivisions: int
    converged: bool = True
    evaluations: int = 0

    def __float__(self) -> float:
        return self.value


def _extrapolation_row(x0: float) -> np.ndarray:
    """Weights giving the degree-14 interpolant through the Kronrod nodes at ``x0``."""
    d = x0 - KRONROD_NODES
    row = np.empty(15)
    for j in range(15):
        others = np.delete(KRONROD_NODES, j)
        row[j] = np.prod(np.delete(d, j) / (KRONROD_NODES[j] - others))
    return row


_EXTRAP = np.vstack([_extrapolation_row(-1.0), _extrapolation_row(1.0)])
# refine until the estimate is this fraction of the target: on kinked integrands
# the estimate can be optimistic by a factor of ten or more
_SAFETY = 0.1
# fraction of a segment beyond the outermost node at each end
_BLIND = 0.5 * (1.0 - _XK[0])


def _segment(g, a: float, b: float, vectorized: bool):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = np.concatenate([mid + half * KRONROD_NODES, [a, b]])
    if vectorized:
        y = np.asarray(g(x), dtype=float)
    else:
        y = np.array([g(xi) for xi in x], dtype=float)
    yk = y[:15]
    k = half * float(KRONROD_WEIGHTS @ yk)
    gv = half * float(_GW_FULL @ yk)
    # a kink between an endpoint and the outermost node is invisible to both
    # rules; the endpoint values betray it, and the missed area is at most
    # their mismatch times the blind width
    blind = _BLIND * (b - a) * float(np.abs(y[15:] - _EXTRAP @ yk).sum())
    diff = abs(k - gv)
    # QUADPACK's scaling inflates moderate differences, where |K - G| is known
    # to be optimistic on nonsmooth integrands; never shrink below the raw value
    resasc = abs(half) * float(KRONROD_WEIGHTS @ np.abs(yk - k / (b - a)))
    if resasc > 0:
        diff = max(diff, resasc * min(1.0, (200.0 * diff / resasc) ** 1.5))
    return k, max(diff, blind)


def gauss_kronrod(
    g: Callable,
    a: float,
    b: float,
    rtol: float = 1e-8,
    atol: float = 1e-14,
    max_subdiv: int = 10_000,
    vectorized: bool = False,
    breakpoints=(),
) -> QuadratureResult:
    """Integrate a scalar function over ``[a, b]``.

    Starts from ``[a, b]`` (split at any ``breakpoints`` inside it) and keeps
    bisecting the segment with the largest error estimate until the summed
    estimate is well below ``max(atol, rtol * |value|)``. A segment's estimate
    is the largest of ``|K15 - G7|`` (with QUADPACK's scaling), half the
    change on bisection, and an endpoint check for kinks that fall outside
    the outermost node. ``converged`` reports whether the summed estimate
    meets the requested tolerance.

    Parameters
    ----------
    g : callable
        Integrand. With ``vectorized=True`` it receives an array of nodes and
        returns an array of values.
    max_subdiv : int
        Maximum number of segments. Exceeding it returns a result with
        ``converged=False`` instead of raising.
    breakpoints : iterable of float
        Known kinks of ``g``; ones outside ``(a, b)`` are ignored.

    Examples
    --------
    >>> round(gauss_kronrod(np.sin, 0.0, np.pi, vectorized=True).value, 12)
    2.0
    """
    if not a < b:
        raise ValueError("need a < b")
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")
    edges = [a] + sorted(float(p) for p in breakpoints if a < p < b) + [b]
    heap = []
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _segment(g, lo, hi, vectorized)
        total += v
        err += e
        heapq.heappush(heap, (-e, lo, hi, v))
    nseg = len(heap)
    while err > _SAFETY * max(atol, rtol * abs(total)) and nseg < max_subdiv:
        neg_e, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            heapq.heappush(heap, (neg_e, lo, hi, v))
            break
        v1, e1 = _segment(g, lo, mid, vectorized)
        v2, e2 = _segment(g, mid, hi, vectorized)
        # |K - G| alone can vanish by accident next to a kink; the mismatch
        # between parent and children catches that
        split = 0.5 * abs(v1 + v2 - v)
        e1, e2 = max(e1, split), max(e2, split)
        total += v1 + v2 - v
        err += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        nseg += 1
    # re-sum to shed accumulated cancellation in the running totals
    total = float(sum(item[3] for item in heap))
    err = float(sum(-item[0] for item in heap))
    converged = err <= max(atol, rtol * abs(total))
    return QuadratureResult(total, err, nseg, converged, 17 * (2 * nseg - len(edges) + 1))
