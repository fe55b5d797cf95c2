"""Exact polynomial-exponential expressions in the canonical variables.

With ``X = x**beta / Γ(1+beta)`` and ``T = t**alpha / Γ(1+alpha)``, the chain
rule convention turns ``D^beta_x`` into ``∂/∂X`` and ``D^alpha_t`` into
``∂/∂T``. Expressions are finite sums of terms

    coeff * X**m * T**n * exp(p*X + q*T)

and are closed under addition, multiplication and classical partial
differentiation. Coefficients and exponential rates are stored as
:class:`fractions.Fraction` built from the double inputs, so the algebra is
exact: rounding only happens when an expression is evaluated or printed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

from fraclie.errors import DomainError, ParseError, UnsupportedConventionError
from fraclie.fraccalc import OrderLike, as_order, gamma_fn

__all__ = [
    "ZERO_TOL",
    "CanonicalTerm",
    "CanonicalExpr",
    "X",
    "T",
    "const",
    "exp_linear",
    "to_canonical",
    "formal_dx",
    "formal_dt",
    "power_rule_dx",
    "power_rule_dt",
    "convention_gap",
    "evaluate",
    "heat_residual",
    "parse_expr",
    "format_expr",
]

#: Absolute coefficient threshold below which a normalized expression counts as zero.
ZERO_TOL = 1e-12

Number = Union[int, float, Fraction]


def _exact(value: Number) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (float, np.floating)) and not math.isfinite(value):
        raise DomainError(f"coefficients must be finite, got {value!r}")
    return Fraction(value)


@dataclass(frozen=True)
class CanonicalTerm:
    """``coeff * X**xpow * T**tpow * exp(expx*X + expt*T)``."""

    coeff: Fraction
    xpow: int = 0
    tpow: int = 0
    expx: Fraction = Fraction(0)
    expt: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        for name in ("coeff", "expx", "expt"):
            object.__setattr__(self, name, _exact(getattr(self, name)))
        if self.coeff == 0:
            raise DomainError("a stored term must have a nonzero coefficient")
        if int(self.xpow) != self.xpow or int(self.tpow) != self.tpow:
            raise DomainError("powers of X and T must be integers")
        if self.xpow < 0 or self.tpow < 0:
            raise DomainError("powers of X and T must be nonnegative")
        object.__setattr__(self, "xpow", int(self.xpow))
        object.__setattr__(self, "tpow", int(self.tpow))

    @property
    def key(self) -> tuple:
        return (self.xpow, self.tpow, self.expx, self.expt)

    def sort_key(self) -> tuple:
        # exponential group, then descending degree, then descending X power
        return (self.expx, self.expt, -(self.xpow + self.tpow), -self.xpow)


def _merge(pairs: Iterable[tuple[tuple, Fraction]]) -> tuple[CanonicalTerm, ...]:
    acc: dict[tuple, Fraction] = {}
    for key, coeff in pairs:
        acc[key] = acc.get(key, Fraction(0)) + coeff
    terms = [CanonicalTerm(c, *k) for k, c in acc.items() if c != 0]
    terms.sort(key=CanonicalTerm.sort_key)
    return tuple(terms)


@dataclass(frozen=True)
class CanonicalExpr:
    """A normalized sum of :class:`CanonicalTerm` (like terms merged, sorted).

    Construction always normalizes, so two expressions are equal exactly when
    their term tuples are equal.
    """

    terms: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", _merge((t.key, t.coeff) for t in self.terms))

    @classmethod
    def _from_pairs(cls, pairs) -> "CanonicalExpr":
        expr = object.__new__(cls)
        object.__setattr__(expr, "terms", _merge(pairs))
        return expr

    # -- arithmetic ---------------------------------------------------------

    @staticmethod
    def _lift(other) -> "CanonicalExpr":
        if isinstance(other, CanonicalExpr):
            return other
        if isinstance(other, (int, float, Fraction, np.floating, np.integer)):
            return const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return CanonicalExpr._from_pairs(
            [(t.key, t.coeff) for t in self.terms] + [(t.key, t.coeff) for t in other.terms]
        )

    __radd__ = __add__

    def __neg__(self):
        return CanonicalExpr._from_pairs((t.key, -t.coeff) for t in self.terms)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        pairs = []
        for a in self.terms:
            for b in other.terms:
                key = (a.xpow + b.xpow, a.tpow + b.tpow, a.expx + b.expx, a.expt + b.expt)
                pairs.append((key, a.coeff * b.coeff))
        return CanonicalExpr._from_pairs(pairs)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if int(n) != n or n < 0:
            raise DomainError("expressions can only be raised to nonnegative integer powers")
        result = const(1)
        for _ in range(int(n)):
            result = result * self
        return result

    # -- inspection ----------------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __str__(self) -> str:
        return format_expr(self)

    def __repr__(self) -> str:
        return f"CanonicalExpr({format_expr(self)!r})"

    def max_abs_coeff(self) -> float:
        return max((abs(float(t.coeff)) for t in self.terms), default=0.0)

    def is_zero(self, tol: float = ZERO_TOL) -> bool:
        """True when every coefficient is within ``tol`` of zero."""
        return self.max_abs_coeff() <= tol

    def pruned(self, tol: float = ZERO_TOL) -> "CanonicalExpr":
        """Drop terms with ``|coeff| <= tol``."""
        return CanonicalExpr._from_pairs(
            (t.key, t.coeff) for t in self.terms if abs(float(t.coeff)) > tol
        )

    def has_exponentials(self) -> bool:
        return any(t.expx != 0 or t.expt != 0 for t in self.terms)

    def allclose(self, other: "CanonicalExpr", tol: float = 1e-12) -> bool:
        """Termwise comparison allowing relative slack in coefficients and rates."""
        a, b = self.pruned(tol), other.pruned(tol)
        if len(a) != len(b):
            return False
        for s, o in zip(a.terms, b.terms):
            if (s.xpow, s.tpow) != (o.xpow, o.tpow):
                return False
            for u, v in ((s.coeff, o.coeff), (s.expx, o.expx), (s.expt, o.expt)):
                if abs(float(u) - float(v)) > tol * max(1.0, abs(float(u)), abs(float(v))):
                    return False
        return True

    def eval_canonical(self, Xv, Tv):
        """Evaluate at canonical coordinates (scalars or broadcastable arrays)."""
        Xv = np.asarray(Xv, dtype=float)
        Tv = np.asarray(Tv, dtype=float)
        total = np.zeros(np.broadcast(Xv, Tv).shape)
        for t in self.terms:
            part = float(t.coeff) * Xv**t.xpow * Tv**t.tpow
            if t.expx != 0 or t.expt != 0:
                part = part * np.exp(float(t.expx) * Xv + float(t.expt) * Tv)
            total = total + part
        return float(total) if total.ndim == 0 else total

    def __call__(self, Xv, Tv):
        return self.eval_canonical(Xv, Tv)

    # -- substitution ---------------------------------------------------------

    def substitute(self, x_image: "CanonicalExpr", t_image: "CanonicalExpr") -> "CanonicalExpr":
        """Compose with an affine change of variables.

        ``x_image`` and ``t_image`` must be polynomials of degree at most one
        (no exponentials); the result replaces X and T by them.
        """
        for image in (x_image, t_image):
            if image.has_exponentials() or any(t.xpow + t.tpow > 1 for t in image.terms):
                raise DomainError("substitution images must be affine in X and T")
        x_lin = _linear_parts(x_image)
        t_lin = _linear_parts(t_image)
        out = CanonicalExpr()
        for term in self.terms:
            poly = CanonicalExpr((CanonicalTerm(term.coeff),)) * x_image**term.xpow * t_image**term.tpow
            if term.expx != 0 or term.expt != 0:
                # exp(p*(a0 + a1 X + a2 T) + q*(b0 + b1 X + b2 T))
                c0 = term.expx * x_lin[0] + term.expt * t_lin[0]
                px = term.expx * x_lin[1] + term.expt * t_lin[1]
                qt = term.expx * x_lin[2] + term.expt * t_lin[2]
                poly = poly * exp_linear(px, qt, shift=c0)
            out = out + poly
        return out


def _linear_parts(expr: CanonicalExpr) -> tuple[Fraction, Fraction, Fraction]:
    parts = [Fraction(0), Fraction(0), Fraction(0)]
    for t in expr.terms:
        idx = 0 if (t.xpow, t.tpow) == (0, 0) else (1 if t.xpow == 1 else 2)
        parts[idx] += t.coeff
    return tuple(parts)


def const(value: Number) -> CanonicalExpr:
    value = _exact(value)
    if value == 0:
        return CanonicalExpr()
    return CanonicalExpr((CanonicalTerm(value),))


def exp_linear(p: Number, q: Number, shift: Number = 0) -> CanonicalExpr:
    """``exp(shift + p*X + q*T)``; the constant factor is folded into the coefficient."""
    shift = _exact(shift)
    coeff = Fraction(1) if shift == 0 else _exact(math.exp(shift))
    return CanonicalExpr((CanonicalTerm(coeff, 0, 0, p, q),))


#: The canonical variables as expressions.
X = CanonicalExpr((CanonicalTerm(1, 1, 0),))
T = CanonicalExpr((CanonicalTerm(1, 0, 1),))


def to_canonical(x, t, alpha: OrderLike, beta: OrderLike):
    """``(x**beta / Γ(1+beta), t**alpha / Γ(1+alpha))``; works on arrays."""
    alpha, beta = as_order(alpha), as_order(beta)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(x < 0) or np.any(t < 0):
        raise DomainError("canonical variables require x, t >= 0")
    Xv = x**beta.value / beta.gamma_1p
    Tv = t**alpha.value / alpha.gamma_1p
    if Xv.ndim == 0 and Tv.ndim == 0:
        return float(Xv), float(Tv)
    return Xv, Tv


def formal_dx(e: CanonicalExpr) -> CanonicalExpr:
    """Exact ∂/∂X (the chain-rule image of ``D^beta_x``)."""
    pairs = []
    for t in e.terms:
        if t.xpow:
            pairs.append(((t.xpow - 1, t.tpow, t.expx, t.expt), t.coeff * t.xpow))
        if t.expx:
            pairs.append((t.key, t.coeff * t.expx))
    return CanonicalExpr._from_pairs(pairs)


def formal_dt(e: CanonicalExpr) -> CanonicalExpr:
    """Exact ∂/∂T (the chain-rule image of ``D^alpha_t``)."""
    pairs = []
    for t in e.terms:
        if t.tpow:
            pairs.append(((t.xpow, t.tpow - 1, t.expx, t.expt), t.coeff * t.tpow))
        if t.expt:
            pairs.append((t.key, t.coeff * t.expt))
    return CanonicalExpr._from_pairs(pairs)


def _power_rule_factor(n: int, order: OrderLike) -> float:
    # D^a of V^n, V = s^a/Γ(1+a), equals this factor times V^(n-1)
    a = as_order(order).value
    return gamma_fn(1.0 + n * a) / (gamma_fn(1.0 + (n - 1) * a) * gamma_fn(1.0 + a))


def power_rule_dx(e: CanonicalExpr, beta: OrderLike) -> CanonicalExpr:
    """``D^beta_x`` by the monomial power rule; X-exponentials are rejected."""
    if any(t.expx != 0 for t in e.terms):
        raise UnsupportedConventionError("power rule in x is undefined on exp(p*X) factors")
    pairs = [
        ((t.xpow - 1, t.tpow, t.expx, t.expt), t.coeff * _exact(_power_rule_factor(t.xpow, beta)))
        for t in e.terms
        if t.xpow
    ]
    return CanonicalExpr._from_pairs(pairs)


def power_rule_dt(e: CanonicalExpr, alpha: OrderLike) -> CanonicalExpr:
    """``D^alpha_t`` by the monomial power rule; T-exponentials are rejected."""
    if any(t.expt != 0 for t in e.terms):
        raise UnsupportedConventionError("power rule in t is undefined on exp(q*T) factors")
    pairs = [
        ((t.xpow, t.tpow - 1, t.expx, t.expt), t.coeff * _exact(_power_rule_factor(t.tpow, alpha)))
        for t in e.terms
        if t.tpow
    ]
    return CanonicalExpr._from_pairs(pairs)


def convention_gap(m: int, order: OrderLike) -> float:
    """Power-rule over chain-rule coefficient for the monomial ``X**m``.

    ``Γ(1+mβ) / (m Γ(1+(m-1)β) Γ(1+β))``; exactly 1 at β = 1.
    """
    if int(m) != m or m < 2:
        raise DomainError(f"convention_gap needs an integer m >= 2, got {m!r}")
    return _power_rule_factor(int(m), order) / m


def evaluate(e: CanonicalExpr, x, t, alpha: OrderLike, beta: OrderLike):
    """Value of ``e`` at physical coordinates ``(x, t)``."""
    Xv, Tv = to_canonical(x, t, alpha, beta)
    return e.eval_canonical(Xv, Tv)


def heat_residual(e: CanonicalExpr) -> CanonicalExpr:
    """``∂_T e - ∂_X² e``: the diffusion operator in the chain-rule convention."""
    return formal_dt(e) - formal_dx(formal_dx(e))


# -- grammar ------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>exp|X|T)"
    r"|(?P<op>\*\*|[-+*^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r} at {pos}")
        kind = m.lastgroup
        value = m.group(kind)
        tokens.append((kind, "^" if value == "**" else value))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            want = repr(value) if value else "an operand"
            found = "end of input" if tok[0] is None else repr(tok[1])
            raise ParseError(f"expected {want}, found {found}")
        self.i += 1
        return tok

    def parse(self) -> CanonicalExpr:
        if not self.tokens:
            raise ParseError("empty expression")
        e = self.sum()
        if self.i != len(self.tokens):
            raise ParseError(f"unexpected trailing {self.peek()[1]!r}")
        return e

    def sum(self):
        e = self.product()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.product()
            e = e + rhs if op == "+" else e - rhs
        return e

    def product(self):
        e = self.unary()
        while self.peek()[1] == "*":
            self.take()
            e = e * self.unary()
        return e

    def unary(self):
        if self.peek()[1] in ("+", "-"):
            sign = self.take()[1]
            e = self.unary()
            return -e if sign == "-" else e
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            exponent = self.unary()
            if exponent.terms and any(t.key != (0, 0, 0, 0) for t in exponent.terms):
                raise ParseError("exponents must be constants")
            n = exponent.terms[0].coeff if exponent.terms else Fraction(0)
            if n.denominator != 1 or n < 0:
                raise ParseError(f"exponents must be nonnegative integers, got {float(n)!r}")
            return base ** int(n)
        return base

    def atom(self):
        kind, value = self.take()
        if kind == "num":
            return const(float(value))
        if value == "X":
            return X
        if value == "T":
            return T
        if value == "exp":
            self.take("(")
            arg = self.sum()
            self.take(")")
            if arg.has_exponentials() or any(t.xpow + t.tpow > 1 for t in arg.terms):
                raise ParseError("exp() argument must be linear in X and T")
            c0, p, q = _linear_parts(arg)
            return exp_linear(p, q, shift=c0)
        if value == "(":
            e = self.sum()
            self.take(")")
            return e
        raise ParseError(f"unexpected {value!r}")


def parse_expr(text: str) -> CanonicalExpr:
    """Parse the infix grammar: ``X``, ``T``, numbers, ``+ - * ^`` and ``exp(...)``."""
    return _Parser(text).parse()


def _fmt_number(value: Fraction, digits) -> str:
    v = float(value)
    if digits is None:
        s = repr(v)
        return s[:-2] if s.endswith(".0") else s
    return f"{v:.{digits}g}"


def _signed_join(items: list[tuple[Fraction, str]], digits) -> str:
    """Join ``(coeff, factor)`` pairs as a signed sum; factor '' means constant."""
    out = []
    for i, (c, factor) in enumerate(items):
        neg = c < 0
        mag = _fmt_number(abs(c), digits)
        if factor and mag == "1":
            body = factor
        elif factor:
            body = f"{mag}*{factor}"
        else:
            body = mag
        if i == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f"-{body}" if neg else f"+{body}")
    return "".join(out)


def _exp_factor(p: Fraction, q: Fraction, digits) -> str:
    parts = [(c, v) for c, v in ((p, "X"), (q, "T")) if c != 0]
    parts.sort(key=lambda cv: cv[0] < 0)  # stable: positive rates first
    return f"exp({_signed_join(parts, digits)})"


def format_expr(e: CanonicalExpr, digits: int | None = None) -> str:
    """Print in the same grammar :func:`parse_expr` reads.

    ``digits=None`` prints shortest round-trip floats; an integer gives that
    many significant digits.
    """
    if not e.terms:
        return "0"
    items = []
    for t in e.terms:
        factors = []
        if t.xpow:
            factors.append("X" if t.xpow == 1 else f"X^{t.xpow}")
        if t.tpow:
            factors.append("T" if t.tpow == 1 else f"T^{t.tpow}")
        if t.expx or t.expt:
            factors.append(_exp_factor(t.expx, t.expt, digits))
        items.append((t.coeff, "*".join(factors)))
    return _signed_join(items, digits)
