"""Lie point symmetries of the space-time fractional diffusion equation.

All vector fields live in canonical coordinates ``(X, T, u)``, where the
chain-rule convention reduces ``D^beta_x u = D^beta_x(D^beta_x u)`` ... to the
classical heat equation ``u_T = u_XX``. A generator is

    xi(X, T) ∂_X + tau(X, T) ∂_T + (phi_linear(X, T) u + phi_source(X, T)) ∂_u.

Two sets of infinitesimals are available:

``"paper"``
    the Γ-weighted coefficient structure, in which the ``c6`` terms carry the
    Γ-ratios ``4Γ²(1+α)/Γ(1+2α)`` (on ``T²`` in tau) and
    ``Γ²(1+β)/Γ(1+2β)`` (on ``X²`` in phi). These do not satisfy the
    determining equations, not even at α = β = 1.
``"corrected"``
    the same structure with those ratios replaced by 4 and 1, which is the
    classical projective symmetry of the heat equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Literal, Sequence, Union

import numpy as np

from fraclie.canonical import (
    ZERO_TOL,
    CanonicalExpr,
    X,
    T,
    const,
    exp_linear,
    format_expr,
    formal_dt,
    formal_dx,
    heat_residual,
)
from fraclie.errors import ClosureError, ConstraintError, DomainError, OffShellError
from fraclie.fraccalc import OrderLike, as_order

__all__ = [
    "Mode",
    "Infinitesimals",
    "Generator",
    "TransformFamily",
    "BracketTable",
    "gamma_ratios",
    "infinitesimals_to_generator",
    "basis",
    "source_generator",
    "lie_bracket",
    "decompose",
    "bracket_table",
    "prolongation_coefficients",
    "determining_residual",
    "transform_solution",
    "iterate_family5",
]

Mode = Literal["paper", "corrected"]
Seed = Union[CanonicalExpr, Callable]
_ZERO = CanonicalExpr()


@dataclass(frozen=True)
class Infinitesimals:
    """The constants ``c1 .. c6`` and the source ``a(X, T)``.

    ``a`` must itself solve the diffusion equation; that is checked here.
    """

    c: tuple = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    a_term: CanonicalExpr = _ZERO

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in self.c)
        if len(c) != 6 or not all(math.isfinite(v) for v in c):
            raise DomainError("infinitesimals need six finite constants c1..c6")
        object.__setattr__(self, "c", c)
        if not heat_residual(self.a_term).is_zero(ZERO_TOL):
            raise ConstraintError(
                f"source term {format_expr(self.a_term)} does not solve the diffusion equation"
            )


@dataclass(frozen=True)
class Generator:
    """``xi ∂_X + tau ∂_T + (phi_linear u + phi_source) ∂_u``."""

    xi: CanonicalExpr = _ZERO
    tau: CanonicalExpr = _ZERO
    phi_linear: CanonicalExpr = _ZERO
    phi_source: CanonicalExpr = _ZERO

    def components(self) -> tuple[CanonicalExpr, ...]:
        return (self.xi, self.tau, self.phi_linear, self.phi_source)

    def __add__(self, other: "Generator") -> "Generator":
        return Generator(*(a + b for a, b in zip(self.components(), other.components())))

    def __sub__(self, other: "Generator") -> "Generator":
        return Generator(*(a - b for a, b in zip(self.components(), other.components())))

    def scale(self, k) -> "Generator":
        return Generator(*(k * comp for comp in self.components()))

    def is_zero(self, tol: float = ZERO_TOL) -> bool:
        return all(comp.is_zero(tol) for comp in self.components())

    def phi(self, u: CanonicalExpr) -> CanonicalExpr:
        return self.phi_linear * u + self.phi_source

    def __str__(self) -> str:
        parts = [
            f"xi={format_expr(self.xi)}",
            f"tau={format_expr(self.tau)}",
            f"phi=({format_expr(self.phi_linear)})*u+{format_expr(self.phi_source)}",
        ]
        return ", ".join(parts)


def gamma_ratios(alpha: OrderLike, beta: OrderLike, mode: Mode = "paper") -> tuple[float, float]:
    """``(kappa_tau, kappa_phi)``: multipliers of ``c6 T²`` in tau and ``c6 X²`` in phi."""
    if mode == "corrected":
        return 4.0, 1.0
    if mode != "paper":
        raise DomainError(f"unknown mode {mode!r}")
    alpha, beta = as_order(alpha), as_order(beta)
    kappa_tau = 4.0 * alpha.gamma_1p**2 / alpha.gamma_1p2
    kappa_phi = beta.gamma_1p**2 / beta.gamma_1p2
    return kappa_tau, kappa_phi


def infinitesimals_to_generator(
    inf: Infinitesimals, alpha: OrderLike = 1.0, beta: OrderLike = 1.0, mode: Mode = "paper"
) -> Generator:
    """Build ``(xi, tau, phi)`` from the constants.

    xi  = c1 + c4 X + 2 c5 T + 4 c6 X T
    tau = c2 + 2 c4 T + kappa_tau c6 T²
    phi = (c3 - c5 X - 2 c6 T - kappa_phi c6 X²) u + a
    """
    c1, c2, c3, c4, c5, c6 = inf.c
    kappa_tau, kappa_phi = gamma_ratios(alpha, beta, mode)
    xi = c1 + c4 * X + 2 * c5 * T + 4 * c6 * X * T
    tau = c2 + 2 * c4 * T + (kappa_tau * c6) * T**2
    phi_linear = c3 - c5 * X - 2 * c6 * T - (kappa_phi * c6) * X**2
    return Generator(xi, tau, phi_linear, inf.a_term)


def basis(mode: Mode = "corrected", alpha: OrderLike = 1.0, beta: OrderLike = 1.0) -> list[Generator]:
    """``[v1, ..., v6]``, one generator per unit constant ``c_i``.

    v1 = ∂_X, v2 = ∂_T, v3 = u ∂_u, v4 = X ∂_X + 2T ∂_T, v5 = 2T ∂_X - X u ∂_u,
    and v6 = 4XT ∂_X + kappa_tau T² ∂_T - (kappa_phi X² + 2T) u ∂_u.
    The infinite-dimensional part ``a ∂_u`` is :func:`source_generator`.
    """
    gens = []
    for i in range(6):
        c = [0.0] * 6
        c[i] = 1.0
        gens.append(infinitesimals_to_generator(Infinitesimals(tuple(c)), alpha, beta, mode))
    return gens


def source_generator(a_term: CanonicalExpr) -> Generator:
    """v7 = a(X, T) ∂_u for a solution ``a`` of the diffusion equation."""
    return infinitesimals_to_generator(Infinitesimals(a_term=a_term))


def _apply(g: Generator, f: CanonicalExpr) -> CanonicalExpr:
    """g acting on a u-independent function."""
    return g.xi * formal_dx(f) + g.tau * formal_dt(f)


def lie_bracket(g: Generator, h: Generator) -> Generator:
    """Commutator ``[g, h] = g h - h g`` of first-order operators on (X, T, u).

    With ``phi = A u + B`` the u-component is
    ``g(A_h) u + g(B_h) + B_g A_h - (h <-> g)``; the ``A_g A_h u`` products cancel.
    """
    xi = _apply(g, h.xi) - _apply(h, g.xi)
    tau = _apply(g, h.tau) - _apply(h, g.tau)
    phi_linear = _apply(g, h.phi_linear) - _apply(h, g.phi_linear)
    phi_source = (
        _apply(g, h.phi_source)
        + g.phi_source * h.phi_linear
        - _apply(h, g.phi_source)
        - h.phi_source * g.phi_linear
    )
    return Generator(xi, tau, phi_linear, phi_source)


def _flatten(g: Generator) -> dict:
    out = {}
    for idx, comp in enumerate(g.components()):
        for t in comp.terms:
            out[(idx,) + t.key] = float(t.coeff)
    return out


def decompose(g: Generator, gens: Sequence[Generator], tol: float = ZERO_TOL) -> np.ndarray:
    """Coordinates of ``g`` in ``gens``; raises :class:`ClosureError` if it is not in their span."""
    flat_basis = [_flatten(b) for b in gens]
    flat_g = _flatten(g)
    keys = sorted(set(flat_g).union(*flat_basis), key=repr)
    A = np.array([[fb.get(k, 0.0) for fb in flat_basis] for k in keys]).reshape(len(keys), len(gens))
    y = np.array([flat_g.get(k, 0.0) for k in keys])
    if not keys:
        return np.zeros(len(gens))
    coords, *_ = np.linalg.lstsq(A, y, rcond=None)
    mismatch = np.max(np.abs(A @ coords - y)) if len(y) else 0.0
    if mismatch > tol:
        raise ClosureError(f"generator not in span (mismatch {mismatch:.3e})")
    # snap rounding noise so integer structure constants read back exactly
    snapped = np.round(coords)
    return np.where(np.abs(coords - snapped) <= tol, snapped, coords) + 0.0


@dataclass(frozen=True)
class BracketTable:
    """Structure constants: ``entries[(i, j)]`` are the coordinates of ``[v_i, v_j]``.

    Indices are 1-based to match the generator names.
    """

    entries: dict = field(default_factory=dict)
    size: int = 6

    def __post_init__(self) -> None:
        for (i, j), coords in self.entries.items():
            other = self.entries.get((j, i))
            if other is not None and np.max(np.abs(np.asarray(coords) + np.asarray(other))) > ZERO_TOL:
                raise ClosureError(f"table is not antisymmetric at ({i}, {j})", pair=(i, j))

    def __getitem__(self, pair: tuple[int, int]) -> np.ndarray:
        return self.entries[pair]

    def label(self, i: int, j: int) -> str:
        return format_combination(self.entries[(i, j)])


def format_combination(coords: Sequence[float]) -> str:
    """``[0, 0, -2, 4, 0, 0]`` -> ``"4*v4-2*v3"`` (highest index first)."""
    parts = []
    for idx in range(len(coords), 0, -1):
        c = float(coords[idx - 1])
        if abs(c) <= ZERO_TOL:
            continue
        mag = abs(c)
        body = f"v{idx}" if mag == 1.0 else f"{mag:.9g}*v{idx}"
        if not parts:
            parts.append(f"-{body}" if c < 0 else body)
        else:
            parts.append(f"-{body}" if c < 0 else f"+{body}")
    return "".join(parts) or "0"


def bracket_table(mode: Mode = "corrected", alpha: OrderLike = 1.0, beta: OrderLike = 1.0) -> BracketTable:
    """All 36 brackets of the six-dimensional basis, decomposed in that basis."""
    gens = basis(mode, alpha, beta)
    entries = {}
    for i, gi in enumerate(gens, start=1):
        for j, gj in enumerate(gens, start=1):
            try:
                entries[(i, j)] = decompose(lie_bracket(gi, gj), gens)
            except ClosureError as exc:
                raise ClosureError(f"[v{i}, v{j}] leaves the span: {exc}", pair=(i, j)) from exc
    return BracketTable(entries, len(gens))


@dataclass(frozen=True)
class _Jet:
    u: CanonicalExpr
    u_x: CanonicalExpr
    u_t: CanonicalExpr
    u_xx: CanonicalExpr
    u_xt: CanonicalExpr


def _jet(u: CanonicalExpr, on_shell: bool) -> _Jet:
    u_x = formal_dx(u)
    u_xx = formal_dx(u_x)
    if on_shell:
        # eliminate u_T through u_T = u_XX
        return _Jet(u, u_x, u_xx, u_xx, formal_dx(u_xx))
    return _Jet(u, u_x, formal_dt(u), u_xx, formal_dt(u_x))


def _prolong(g: Generator, jet: _Jet) -> tuple[CanonicalExpr, CanonicalExpr, CanonicalExpr]:
    A, B = g.phi_linear, g.phi_source
    # total derivatives of phi = A u + B along the jet
    phi_t = formal_dt(A) * jet.u + A * jet.u_t + formal_dt(B)
    phi_x = formal_dx(A) * jet.u + A * jet.u_x + formal_dx(B)
    A_x = formal_dx(A)
    phi_xx = formal_dx(A_x) * jet.u + 2 * A_x * jet.u_x + A * jet.u_xx + formal_dx(formal_dx(B))

    xi_x, xi_t = formal_dx(g.xi), formal_dt(g.xi)
    tau_x, tau_t = formal_dx(g.tau), formal_dt(g.tau)
    pr_t = phi_t - xi_t * jet.u_x - tau_t * jet.u_t
    pr_x = phi_x - xi_x * jet.u_x - tau_x * jet.u_t
    pr_xx = (
        phi_xx
        - 2 * xi_x * jet.u_xx
        - formal_dx(xi_x) * jet.u_x
        - 2 * tau_x * jet.u_xt
        - formal_dx(tau_x) * jet.u_t
    )
    return pr_t, pr_x, pr_xx


def prolongation_coefficients(
    g: Generator, u: CanonicalExpr
) -> tuple[CanonicalExpr, CanonicalExpr, CanonicalExpr]:
    """``(phi^[t], phi^[x], phi^[xx])`` evaluated on the jet of ``u``."""
    return _prolong(g, _jet(u, on_shell=False))


def determining_residual(g: Generator, u: CanonicalExpr) -> CanonicalExpr:
    """``phi^[t] - phi^[xx]`` on the jet of the solution ``u``, with ``u_T = u_XX``.

    Zero for every solution exactly when ``g`` is a symmetry.
    """
    if not heat_residual(u).is_zero(ZERO_TOL):
        raise OffShellError(f"{format_expr(u)} does not solve the diffusion equation")
    pr_t, _, pr_xx = _prolong(g, _jet(u, on_shell=True))
    return (pr_t - pr_xx).pruned(ZERO_TOL)


@dataclass(frozen=True)
class TransformFamily:
    """One of the seven one-parameter solution maps, with group parameter ``epsilon``."""

    family: int
    epsilon: float
    a_term: CanonicalExpr | None = None

    def __post_init__(self) -> None:
        if self.family not in range(1, 8):
            raise DomainError(f"family must be 1..7, got {self.family!r}")
        if not math.isfinite(self.epsilon):
            raise DomainError("epsilon must be finite")
        if self.family == 7:
            if self.a_term is None:
                raise ConstraintError("family 7 needs a source term a(X, T)")
            if not heat_residual(self.a_term).is_zero(ZERO_TOL):
                raise ConstraintError(
                    f"source term {format_expr(self.a_term)} does not solve the diffusion equation"
                )
        elif self.a_term is not None:
            raise ConstraintError(f"family {self.family} takes no source term")


def _family6_callable(eps: float, seed: Callable) -> Callable:
    def u(Xv, Tv):
        Xv = np.asarray(Xv, dtype=float)
        Tv = np.asarray(Tv, dtype=float)
        d = 1.0 + 4.0 * eps * Tv
        with np.errstate(invalid="ignore", divide="ignore"):
            value = d**-0.5 * np.exp(-eps * Xv**2 / d) * seed(Xv / d, Tv / d)
        value = np.where(d > 0, value, np.nan)
        return float(value) if value.ndim == 0 else value

    return u


def transform_solution(fam: TransformFamily, seed: Seed):
    """Apply a solution map to a seed solution ``f(X, T)``.

    1: f(X - ε, T)            2: f(X, T - ε)             3: e^ε f
    4: f(X e^-ε, T e^-2ε)     5: e^(ε²T - εX) f(X - 2εT, T)
    6: (1+4εT)^-1/2 exp(-εX²/(1+4εT)) f(X/(1+4εT), T/(1+4εT))
    7: f + ε a

    Expression seeds give expressions for every family except 6; family 6 and
    callable seeds give a callable of ``(X, T)``.
    """
    eps = fam.epsilon
    k = fam.family
    if isinstance(seed, CanonicalExpr) and k != 6:
        e = Fraction(eps)
        if k == 1:
            return seed.substitute(X - e, T)
        if k == 2:
            return seed.substitute(X, T - e)
        if k == 3:
            return Fraction(math.exp(eps)) * seed if eps else seed
        if k == 4:
            if not eps:
                return seed
            return seed.substitute(Fraction(math.exp(-eps)) * X, Fraction(math.exp(-2.0 * eps)) * T)
        if k == 5:
            return exp_linear(-e, e * e) * seed.substitute(X - 2 * e * T, T)
        return seed + e * fam.a_term

    f = seed.eval_canonical if isinstance(seed, CanonicalExpr) else seed
    if k == 6:
        return _family6_callable(eps, f)
    if k == 1:
        return lambda Xv, Tv: f(np.asarray(Xv) - eps, Tv)
    if k == 2:
        return lambda Xv, Tv: f(Xv, np.asarray(Tv) - eps)
    if k == 3:
        return lambda Xv, Tv: math.exp(eps) * f(Xv, Tv)
    if k == 4:
        return lambda Xv, Tv: f(np.asarray(Xv) * math.exp(-eps), np.asarray(Tv) * math.exp(-2 * eps))
    if k == 5:
        return lambda Xv, Tv: np.exp(eps**2 * np.asarray(Tv) - eps * np.asarray(Xv)) * f(
            np.asarray(Xv) - 2 * eps * np.asarray(Tv), Tv
        )
    a = fam.a_term
    return lambda Xv, Tv: f(Xv, Tv) + eps * a.eval_canonical(Xv, Tv)


def iterate_family5(c: float, epsilon: float, n: int) -> list[CanonicalExpr]:
    """``u_1 = c exp(ε²T - εX)``, then ``u_{k+1}`` = family 5 applied to ``u_k``."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n!r}")
    fam = TransformFamily(5, epsilon)
    out = []
    u = const(c)
    for _ in range(n):
        u = transform_solution(fam, u)
        if not heat_residual(u).is_zero(ZERO_TOL):
            raise AssertionError(f"iterate {format_expr(u)} left the solution set")
        out.append(u)
    return out
