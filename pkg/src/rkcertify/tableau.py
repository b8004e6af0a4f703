"""Butcher tableaus, a generic explicit Runge-Kutta step, and stability polynomials."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "ButcherTableau",
    "StepFailure",
    "METHODS",
    "make_tableau",
    "rk_step",
    "stability_polynomial",
    "stage_polynomials",
    "embedded_stability_polynomial",
    "embedded_error_polynomial",
]


class StepFailure(FloatingPointError):
    """Raised when a stage produces non-finite values."""


@dataclass(frozen=True)
class ButcherTableau:
    """Explicit Runge-Kutta tableau with optional embedded weights.

    Coefficients are kept as exact rationals (``*_exact``) and as float arrays.
    For an FSAL pair ``b_hat`` has ``s + 1`` entries; the last one multiplies
    ``f(t + dt, u_next)``.
    """

    name: str
    A_exact: tuple
    b_exact: tuple
    c_exact: tuple
    p: int
    b_hat_exact: Optional[tuple] = None
    p_hat: Optional[int] = None
    fsal: bool = False
    A: np.ndarray = field(init=False, repr=False, compare=False)
    b: np.ndarray = field(init=False, repr=False, compare=False)
    c: np.ndarray = field(init=False, repr=False, compare=False)
    b_hat: Optional[np.ndarray] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        s = len(self.b_exact)
        if len(self.A_exact) != s or any(len(row) != s for row in self.A_exact):
            raise ValueError("A must be s x s")
        if len(self.c_exact) != s:
            raise ValueError("c must have length s")
        for i in range(s):
            if any(self.A_exact[i][j] != 0 for j in range(i, s)):
                raise ValueError("A must be strictly lower triangular")
            if sum(self.A_exact[i]) != self.c_exact[i]:
                raise ValueError(f"row-sum condition violated in row {i}")
        if sum(self.b_exact) != 1:
            raise ValueError("weights must sum to one")
        if self.b_hat_exact is not None:
            expected = s + 1 if self.fsal else s
            if len(self.b_hat_exact) != expected:
                raise ValueError(f"b_hat must have length {expected}")
        elif self.fsal:
            raise ValueError("fsal requires embedded weights")

        to_float = lambda seq: np.array([float(x) for x in seq])
        object.__setattr__(self, "A", np.array([[float(x) for x in row] for row in self.A_exact]))
        object.__setattr__(self, "b", to_float(self.b_exact))
        object.__setattr__(self, "c", to_float(self.c_exact))
        object.__setattr__(
            self, "b_hat", None if self.b_hat_exact is None else to_float(self.b_hat_exact)
        )

    @property
    def stages(self) -> int:
        return len(self.b_exact)

    @property
    def has_embedded(self) -> bool:
        return self.b_hat_exact is not None

    @property
    def error_weights(self) -> np.ndarray:
        """``b - b_hat`` (padded with 0 for the FSAL slot), exact then rounded."""
        if self.b_hat_exact is None:
            raise ValueError(f"tableau {self.name!r} has no embedded weights")
        b = list(self.b_exact) + ([Fraction(0)] if self.fsal else [])
        return np.array([float(x - y) for x, y in zip(b, self.b_hat_exact)])


def _F(x) -> Fraction:
    return Fraction(x)


def _tableau(name, A, b, c, p, b_hat=None, p_hat=None, fsal=False) -> ButcherTableau:
    return ButcherTableau(
        name=name,
        A_exact=tuple(tuple(_F(x) for x in row) for row in A),
        b_exact=tuple(_F(x) for x in b),
        c_exact=tuple(_F(x) for x in c),
        p=p,
        b_hat_exact=None if b_hat is None else tuple(_F(x) for x in b_hat),
        p_hat=p_hat,
        fsal=fsal,
    )


def _euler():
    return _tableau("euler", [[0]], [1], [0], p=1)


def _heun2_euler1():
    return _tableau(
        "heun2_euler1",
        [[0, 0], [1, 0]],
        [Fraction(1, 2), Fraction(1, 2)],
        [0, 1],
        p=2,
        b_hat=[1, 0],
        p_hat=1,
    )


def _bs3():
    # Bogacki & Shampine (1989), Appl. Math. Lett. 2(4)
    F = Fraction
    return _tableau(
        "bs3",
        [[0, 0, 0], [F(1, 2), 0, 0], [0, F(3, 4), 0]],
        [F(2, 9), F(1, 3), F(4, 9)],
        [0, F(1, 2), F(3, 4)],
        p=3,
        b_hat=[F(7, 24), F(1, 4), F(1, 3), F(1, 8)],
        p_hat=2,
        fsal=True,
    )


METHODS: dict[str, Callable[[], ButcherTableau]] = {
    "euler": _euler,
    "heun2_euler1": _heun2_euler1,
    "bs3": _bs3,
}

_ALIASES = {"heun2": "heun2_euler1", "heun": "heun2_euler1"}


def make_tableau(name: str) -> ButcherTableau:
    """Return the tableau registered under ``name``.

    Known names are ``euler``, ``heun2_euler1`` (alias ``heun2``) and ``bs3``.
    """
    key = _ALIASES.get(name, name)
    try:
        return METHODS[key]()
    except KeyError:
        raise ValueError(f"unknown method {name!r}; known methods: {sorted(METHODS)}") from None


def rk_step(
    tab: ButcherTableau,
    f: Callable,
    t: float,
    u: np.ndarray,
    dt: float,
    f0: Optional[np.ndarray] = None,
):
    """Take one explicit Runge-Kutta step.

    Parameters
    ----------
    tab : ButcherTableau
    f : callable
        Right-hand side ``f(t, u)``.
    t, u, dt : float, ndarray, float
        Current time, state and step size.
    f0 : ndarray, optional
        Cached ``f(t, u)``, e.g. from the previous FSAL step.

    Returns
    -------
    u_next : ndarray
    stage_derivatives : list of ndarray
    f_next : ndarray or None
        ``f(t + dt, u_next)`` for FSAL tableaus, else ``None``.

    Raises
    ------
    StepFailure
        If any stage derivative or the update is not finite.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = np.asarray(u, dtype=float)
    A, b, c = tab.A, tab.b, tab.c
    ks: list[np.ndarray] = []
    for i in range(tab.stages):
        if i == 0 and f0 is not None:
            k = np.asarray(f0, dtype=float)
        else:
            y = u.copy()
            for j in range(i):
                if A[i, j] != 0.0:
                    y = y + (dt * A[i, j]) * ks[j]
            k = np.asarray(f(t + c[i] * dt, y), dtype=float)
        if not np.all(np.isfinite(k)):
            raise StepFailure(f"non-finite stage {i} at t={t!r}, dt={dt!r}")
        ks.append(k)
    u_next = u.copy()
    for i in range(tab.stages):
        if b[i] != 0.0:
            u_next = u_next + (dt * b[i]) * ks[i]
    if not np.all(np.isfinite(u_next)):
        raise StepFailure(f"non-finite update at t={t!r}, dt={dt!r}")
    f_next = None
    if tab.fsal:
        f_next = np.asarray(f(t + dt, u_next), dtype=float)
        if not np.all(np.isfinite(f_next)):
            raise StepFailure(f"non-finite FSAL derivative at t={t!r}, dt={dt!r}")
    return u_next, ks, f_next


# exact polynomial arithmetic on ascending Fraction lists

def _padd(p: Sequence[Fraction], q: Sequence[Fraction]) -> list[Fraction]:
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]


def _pscale(p: Sequence[Fraction], a: Fraction) -> list[Fraction]:
    return [a * x for x in p]


def _pshift(p: Sequence[Fraction]) -> list[Fraction]:
    """Multiply by z."""
    return [Fraction(0)] + list(p)


def _to_poly(coeffs: Sequence[Fraction]) -> Polynomial:
    return Polynomial([float(x) for x in coeffs]).trim()


def stage_polynomials(tab: ButcherTableau) -> list[list[Fraction]]:
    """Exact stage polynomials ``R_i`` with ``y^i = R_i(z) u`` on ``u' = lambda u``."""
    polys: list[list[Fraction]] = []
    for i in range(tab.stages):
        acc = [Fraction(1)]
        for j in range(i):
            a = tab.A_exact[i][j]
            if a != 0:
                acc = _padd(acc, _pshift(_pscale(polys[j], a)))
        polys.append(acc)
    return polys


def _weights_polynomial(tab: ButcherTableau, weights: Sequence[Fraction]) -> list[Fraction]:
    stages = stage_polynomials(tab)
    acc: list[Fraction] = [Fraction(0)]
    for w, Ri in zip(weights, stages):
        if w != 0:
            acc = _padd(acc, _pscale(Ri, w))
    return _padd([Fraction(1)], _pshift(acc))


def _stability_exact(tab: ButcherTableau) -> list[Fraction]:
    return _weights_polynomial(tab, tab.b_exact)


def _embedded_exact(tab: ButcherTableau) -> list[Fraction]:
    if tab.b_hat_exact is None:
        raise ValueError(f"tableau {tab.name!r} has no embedded weights")
    s = tab.stages
    R_hat = _weights_polynomial(tab, tab.b_hat_exact[:s])
    if tab.fsal:
        R_hat = _padd(R_hat, _pshift(_pscale(_stability_exact(tab), tab.b_hat_exact[s])))
    return R_hat


def stability_polynomial(tab: ButcherTableau) -> Polynomial:
    """Stability function ``R(z) = 1 + sum_j (b^T A^{j-1} 1) z^j`` (ascending coefficients)."""
    return _to_poly(_stability_exact(tab))


def embedded_stability_polynomial(tab: ButcherTableau) -> Polynomial:
    return _to_poly(_embedded_exact(tab))


def embedded_error_polynomial(tab: ButcherTableau) -> Polynomial:
    """``E(z) = R(z) - R_hat(z)`` for the embedded pair.

    Computed in exact arithmetic, so coefficients up to the embedded order are
    exactly zero.
    """
    diff = _padd(_stability_exact(tab), _pscale(_embedded_exact(tab), Fraction(-1)))
    return _to_poly(diff)
