"""Fractional method of characteristics in canonical variables.

For ``a D^beta_x u + b D^alpha_t u = c`` the fractional Taylor expansion turns
``(dx)^beta / (Γ(1+beta) ds) = a`` into ``dX/ds = a`` (likewise for T), so the
characteristic system is the classical autonomous ODE

    dX/ds = a(X, T),   dT/ds = b(X, T),   du/ds = c(X, T).

Everything here integrates that system with fixed-step RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from fraclie.canonical import CanonicalExpr, X, T, const, format_expr
from fraclie.errors import BlowUpError, DegenerateScalingError, DomainError, UnreachableError
from fraclie.fraccalc import OrderLike, as_order

__all__ = [
    "FirstOrderProblem",
    "CharacteristicCurve",
    "ScalingInvariant",
    "characteristic_system",
    "integrate_characteristic",
    "scaling_invariant",
    "solve_first_order",
    "to_physical",
]

System = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FirstOrderProblem:
    """Coefficients of ``a D^beta_x u + b D^alpha_t u = c`` in canonical variables."""

    a_coeff: CanonicalExpr
    b_coeff: CanonicalExpr
    c_rhs: CanonicalExpr = CanonicalExpr()

    def __post_init__(self) -> None:
        if not self.a_coeff and not self.b_coeff:
            raise DomainError("a and b cannot both vanish identically")


@dataclass(frozen=True, eq=False)
class CharacteristicCurve:
    s_values: np.ndarray
    points: np.ndarray  # rows of (X, T, u)

    def __post_init__(self) -> None:
        s = np.asarray(self.s_values, dtype=float)
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if len(s) != len(pts):
            raise DomainError("curve parameter and points differ in length")
        if np.any(np.diff(s) <= 0):
            raise DomainError("curve parameter must be strictly increasing")
        object.__setattr__(self, "s_values", s)
        object.__setattr__(self, "points", pts)

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1]


def characteristic_system(p: FirstOrderProblem) -> System:
    """Right-hand side ``(X, T, u) -> (a, b, c)``."""

    def rhs(state: np.ndarray) -> np.ndarray:
        Xv, Tv = state[0], state[1]
        return np.array([p.a_coeff(Xv, Tv), p.b_coeff(Xv, Tv), p.c_rhs(Xv, Tv)], dtype=float)

    return rhs


def _rk4_step(f: System, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_characteristic(
    system: System, start: Sequence[float], s_end: float, step: float
) -> CharacteristicCurve:
    """Fixed-step RK4 from ``s = 0`` to ``s_end``.

    The step is shrunk to the nearest value that divides ``s_end`` evenly.
    """
    if not step > 0:
        raise DomainError(f"step must be positive, got {step!r}")
    if s_end < 0:
        raise DomainError(f"s_end must be nonnegative, got {s_end!r}")
    y = np.asarray(start, dtype=float)
    if s_end == 0:
        return CharacteristicCurve(np.array([0.0]), y[None, :])
    n = max(1, math.ceil(s_end / step - 1e-9))
    h = s_end / n
    pts = np.empty((n + 1, 3))
    pts[0] = y
    # overflow is reported as BlowUpError below, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            y = _rk4_step(system, y, h)
            if not np.all(np.isfinite(y)):
                raise BlowUpError(f"non-finite state at s = {(i + 1) * h:g}")
            pts[i + 1] = y
    return CharacteristicCurve(np.arange(n + 1) * h, pts)


@dataclass(frozen=True)
class ScalingInvariant:
    """``J(X, T) = X**B / T**A`` for ``A X u_X + B T u_T = 0``.

    Any constant multiple is an invariant too; for ``(A, B) = (1, 2)`` this is
    ``X²/T``, twice the ``X²/(2T)`` normalization.
    """

    A: float
    B: float

    def __call__(self, Xv, Tv):
        return np.asarray(Xv, dtype=float) ** self.B / np.asarray(Tv, dtype=float) ** self.A

    def problem(self) -> FirstOrderProblem:
        return FirstOrderProblem(self.A * X, self.B * T, const(0))

    def __str__(self) -> str:
        def power(name, e):
            return name if e == 1 else f"{name}^{e:g}"

        return f"{power('X', self.B)}/{power('T', self.A)}"


def scaling_invariant(A: float, B: float) -> ScalingInvariant:
    if A == 0 or B == 0:
        raise DegenerateScalingError("scaling constants A and B must both be nonzero")
    return ScalingInvariant(float(A), float(B))


def to_physical(Xv, Tv, alpha: OrderLike, beta: OrderLike):
    """Invert the canonical map: ``x = (Γ(1+beta) X)^(1/beta)``."""
    alpha, beta = as_order(alpha), as_order(beta)
    x = (beta.gamma_1p * np.asarray(Xv, dtype=float)) ** (1.0 / beta.value)
    t = (alpha.gamma_1p * np.asarray(Tv, dtype=float)) ** (1.0 / alpha.value)
    return x, t


def solve_first_order(
    p: FirstOrderProblem,
    initial: Callable[[float], float],
    targets: Sequence[tuple[float, float]],
    t0: float,
    steps: int = 1000,
    s_budget: float = 1e6,
) -> list[float]:
    """Solve by following each target's characteristic back to ``T = t0``.

    The curve is reparametrized by T (``dX/dT = a/b``, ``du/dT = c/b``,
    ``ds/dT = 1/b``) so that it lands on the initial line exactly; ``u`` at the
    target is the initial value at the foot plus the accumulated ``∫ c ds``.
    """
    a, b, c = p.a_coeff, p.b_coeff, p.c_rhs

    def rhs(Tv: float, y: np.ndarray) -> np.ndarray:
        bv = b(y[0], Tv)
        if not math.isfinite(bv) or abs(bv) < 1e-14:
            raise UnreachableError(f"b vanishes on the characteristic near T = {Tv:g}")
        return np.array([a(y[0], Tv) / bv, c(y[0], Tv) / bv, 1.0 / bv])

    results = []
    for Xt, Tt in targets:
        if Tt == t0:
            results.append(float(initial(Xt)))
            continue
        # y = (X, ∫c ds accumulated from the target, s elapsed)
        y = np.array([float(Xt), 0.0, 0.0])
        h = (t0 - Tt) / steps
        Tv = float(Tt)
        ds_sign = None
        for _ in range(steps):
            k1 = rhs(Tv, y)
            k2 = rhs(Tv + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(Tv + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(Tv + h, y + h * k3)
            for k in (k1, k2, k3, k4):
                sign = k[2] > 0
                if ds_sign is None:
                    ds_sign = sign
                elif sign != ds_sign:
                    raise UnreachableError("characteristic turns back before reaching T0")
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            Tv += h
            if not np.all(np.isfinite(y)) or abs(y[2]) > s_budget:
                raise UnreachableError(f"characteristic from ({Xt:g}, {Tt:g}) exceeds the s budget")
        # integrating from target to foot gave ∫c ds in reverse; undo that sign
        results.append(float(initial(y[0])) - y[1])
    return results


def describe_problem(p: FirstOrderProblem) -> str:
    return (
        f"({format_expr(p.a_coeff)}) u_X + ({format_expr(p.b_coeff)}) u_T = {format_expr(p.c_rhs)}"
    )
