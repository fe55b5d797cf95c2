"""Residual checks for ``D^alpha_t u = D^beta_x(D^beta_x u)``.

Two independent routes are compared:

* formal: the chain-rule reduction ``u_T - u_XX`` computed exactly in the
  canonical term algebra;
* numeric: sampled fields differentiated with the Grünwald-Letnikov kernel
  of :mod:`fraclie.fraccalc` (the integral definition of the derivative).

Numeric norms are taken over the interior region ``x, t >= 0.25 L``, since
the discrete derivative is least accurate next to the origin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from fraclie.canonical import (
    ZERO_TOL,
    CanonicalExpr,
    const,
    evaluate,
    exp_linear,
    format_expr,
    heat_residual,
    parse_expr,
)
from fraclie.errors import ConvergenceError, DomainError, GridSizeError, SamplingError, SuiteFailure
from fraclie.fraccalc import (
    OrderLike,
    SampledField,
    UniformGrid,
    as_order,
    composed_x_derivative,
    mittag_leffler,
    mrl_derivative,
    nodes_at_least,
)
from fraclie.symmetry import TransformFamily, basis, determining_residual, transform_solution

__all__ = [
    "ResidualReport",
    "INTERIOR_FRACTION",
    "CLASSICAL_SEEDS",
    "pde_residual_numeric",
    "pde_residual_formal",
    "fd_heat_residual",
    "suite_classical_limit",
    "suite_eigen_solution",
    "suite_determining",
    "gap_report_family5",
    "eigen_solution",
    "dump_reports",
    "load_reports",
]

INTERIOR_FRACTION = 0.25
CLASSICAL_SEEDS = ("1", "X^2+2*T", "exp(X+T)")
FAMILY6_TOL = 1e-6

_JSON_KEYS = ("mode", "alpha", "beta", "family", "seed", "grid", "max_rel", "rms_rel", "notes")


@dataclass(frozen=True)
class ResidualReport:
    """Residual of one candidate solution, with max and RMS norms relative to ``u``.

    Formal reports measure coefficient norms of the residual expression
    against those of ``u``; a formal zero is an empty normalized expression.
    """

    mode: str
    alpha: float
    beta: float
    family: int | None = None
    seed: str = ""
    grid: tuple | None = None
    max_rel: float = 0.0
    rms_rel: float = 0.0
    notes: str = ""
    residual: object = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.mode not in ("formal", "numeric"):
            raise DomainError(f"unknown report mode {self.mode!r}")
        for name in ("max_rel", "rms_rel"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and nonnegative, got {v!r}")
        if self.grid is not None:
            object.__setattr__(self, "grid", tuple(int(n) for n in self.grid))

    @property
    def is_formal_zero(self) -> bool:
        return self.mode == "formal" and isinstance(self.residual, CanonicalExpr) and not self.residual

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in _JSON_KEYS}
        d["grid"] = list(self.grid) if self.grid is not None else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ResidualReport":
        grid = d.get("grid")
        return cls(
            mode=d["mode"],
            alpha=d["alpha"],
            beta=d["beta"],
            family=d.get("family"),
            seed=d.get("seed", ""),
            grid=tuple(grid) if grid is not None else None,
            max_rel=d["max_rel"],
            rms_rel=d["rms_rel"],
            notes=d.get("notes", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ResidualReport":
        return cls.from_dict(json.loads(text))


def dump_reports(reports: Iterable[ResidualReport], path: str | Path | None = None) -> str:
    """Serialize reports as a JSON list; floats keep their full round-trip precision."""
    text = json.dumps([r.to_dict() for r in reports], indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_reports(source: str | Path) -> list[ResidualReport]:
    """Read reports from a file path or a JSON string.

    Accepts a bare list of reports or a document with a ``"reports"`` list
    (the layout written by ``fraclie verify``).
    """
    if isinstance(source, str) and source.lstrip()[:1] in ("[", "{"):
        text = source
    else:
        text = Path(source).read_text(encoding="utf-8")
    data = json.loads(text)
    if isinstance(data, dict):
        data = data["reports"]
    return [ResidualReport.from_dict(d) for d in data]


def _relative_norms(residual: np.ndarray, reference: np.ndarray) -> tuple[float, float]:
    r_max = float(np.max(np.abs(residual))) if residual.size else 0.0
    r_rms = float(np.sqrt(np.mean(residual**2))) if residual.size else 0.0
    u_max = float(np.max(np.abs(reference))) if reference.size else 0.0
    u_rms = float(np.sqrt(np.mean(reference**2))) if reference.size else 0.0
    # an identically zero u is measured in absolute terms
    return (r_max / u_max if u_max else r_max, r_rms / u_rms if u_rms else r_rms)


def pde_residual_numeric(
    u: Callable,
    alpha: OrderLike,
    beta: OrderLike,
    gridx: UniformGrid,
    gridt: UniformGrid,
    family: int | None = None,
    seed: str = "",
    notes: str = "",
) -> ResidualReport:
    """``D^alpha_t u - D^beta_x(D^beta_x u)`` on a tensor grid, via the GL kernel.

    ``u`` is called with broadcast arrays ``u(x[:, None], t[None, :])``.
    """
    alpha, beta = as_order(alpha), as_order(beta)
    if gridx.count < 32 or gridt.count < 32:
        raise GridSizeError("numeric residuals need at least 32 nodes per axis")
    try:
        field_u = SampledField.from_function(u, (gridx, gridt))
    except DomainError as exc:
        raise SamplingError(f"could not sample u: {exc}") from exc
    dt = mrl_derivative(field_u, alpha, axis=1)
    dxx = composed_x_derivative(field_u, beta, axis=0)
    residual = field_u.with_values(dt.values - dxx.values)
    mx = nodes_at_least(gridx, INTERIOR_FRACTION)
    mt = nodes_at_least(gridt, INTERIOR_FRACTION)
    inner = np.ix_(mx, mt)
    max_rel, rms_rel = _relative_norms(residual.values[inner], field_u.values[inner])
    return ResidualReport(
        mode="numeric",
        alpha=alpha.value,
        beta=beta.value,
        family=family,
        seed=seed,
        grid=(gridx.count, gridt.count),
        max_rel=max_rel,
        rms_rel=rms_rel,
        notes=notes,
        residual=residual,
    )


def _coeff_norms(e: CanonicalExpr) -> tuple[float, float]:
    if not e.terms:
        return 0.0, 0.0
    c = np.array([abs(float(t.coeff)) for t in e.terms])
    return float(c.max()), float(np.sqrt(np.mean(c**2)))


def pde_residual_formal(
    u: CanonicalExpr,
    alpha: OrderLike = 1.0,
    beta: OrderLike = 1.0,
    family: int | None = None,
    seed: str | None = None,
    notes: str = "",
) -> ResidualReport:
    """Exact residual ``u_T - u_XX`` of an algebra expression."""
    residual = heat_residual(u).pruned(ZERO_TOL)
    r_max, r_rms = _coeff_norms(residual)
    u_max, u_rms = _coeff_norms(u)
    return ResidualReport(
        mode="formal",
        alpha=float(as_order(alpha).value),
        beta=float(as_order(beta).value),
        family=family,
        seed=format_expr(u) if seed is None else seed,
        grid=None,
        max_rel=r_max / u_max if u_max else r_max,
        rms_rel=r_rms / u_rms if u_rms else r_rms,
        notes=notes,
        residual=residual,
    )


def fd_heat_residual(
    F: Callable, Xn: np.ndarray, Tn: np.ndarray, delta: float = 1e-2
) -> tuple[float, float, np.ndarray]:
    """Pointwise ``u_T - u_XX`` of a callable in canonical variables.

    Fourth-order central differences with step ``delta``; returns
    ``(max_rel, rms_rel, residual)`` relative to ``u`` on the same points.
    Points whose stencil hits a non-finite value are dropped.
    """
    Xg, Tg = np.meshgrid(np.asarray(Xn, float), np.asarray(Tn, float), indexing="ij")
    u0 = F(Xg, Tg)
    ut = (-F(Xg, Tg + 2 * delta) + 8 * F(Xg, Tg + delta) - 8 * F(Xg, Tg - delta) + F(Xg, Tg - 2 * delta)) / (
        12 * delta
    )
    uxx = (
        -F(Xg + 2 * delta, Tg)
        + 16 * F(Xg + delta, Tg)
        - 30 * u0
        + 16 * F(Xg - delta, Tg)
        - F(Xg - 2 * delta, Tg)
    ) / (12 * delta**2)
    residual = ut - uxx
    ok = np.isfinite(residual) & np.isfinite(u0)
    max_rel, rms_rel = _relative_norms(residual[ok], u0[ok])
    return max_rel, rms_rel, residual


def suite_classical_limit(
    epsilon: float = 0.5,
    epsilon6: float = 0.1,
    seeds: Sequence[str] = CLASSICAL_SEEDS,
    source: str = "exp(X+T)",
    fd_nodes: int = 64,
) -> list[ResidualReport]:
    """Every family applied to every seed at α = β = 1.

    Families 1-5 and 7 are checked formally (exact zero required); family 6 is
    checked by finite differences on a ``fd_nodes²`` grid over ``[0, 1]²``
    (max relative residual below 1e-6). Raises :class:`SuiteFailure` listing
    every failing (family, seed) pair.
    """
    a_term = parse_expr(source)
    reports = []
    failures = []
    Xn = Tn = np.linspace(0.0, 1.0, fd_nodes)
    for seed_text in seeds:
        seed = parse_expr(seed_text)
        for k in range(1, 8):
            if k == 6:
                fam = TransformFamily(6, epsilon6)
                F = transform_solution(fam, seed)
                max_rel, rms_rel, res = fd_heat_residual(F, Xn, Tn)
                rep = ResidualReport(
                    "numeric", 1.0, 1.0, 6, seed_text, (fd_nodes, fd_nodes), max_rel, rms_rel,
                    notes=f"epsilon={epsilon6!r}; finite differences in (X, T)", residual=res,
                )
                if not max_rel < FAMILY6_TOL:
                    failures.append(f"family 6, seed {seed_text}: max_rel {max_rel:.3e}")
            else:
                fam = TransformFamily(k, epsilon, a_term if k == 7 else None)
                u = transform_solution(fam, seed)
                rep = pde_residual_formal(u, family=k, seed=seed_text, notes=f"epsilon={epsilon!r}")
                if not rep.is_formal_zero:
                    failures.append(f"family {k}, seed {seed_text}: residual {format_expr(rep.residual)}")
            reports.append(rep)
    if failures:
        raise SuiteFailure(failures, reports)
    return reports


def eigen_solution(alpha: OrderLike, beta: OrderLike, mu: float = 1.0) -> Callable:
    """``u(x, t) = E_beta(mu x^beta) E_alpha(mu² t^alpha)``.

    Term-by-term power rule gives ``D^alpha_t u = mu² u`` and
    ``D^beta_x(D^beta_x u) = mu² u``.
    """
    a, b = as_order(alpha).value, as_order(beta).value

    def u(x, t):
        return mittag_leffler(b, mu * np.asarray(x, float) ** b) * mittag_leffler(
            a, mu**2 * np.asarray(t, float) ** a
        )

    return u


def suite_eigen_solution(
    alpha: OrderLike,
    beta: OrderLike,
    mu: float = 1.0,
    grids: Sequence[int] = (256, 512, 1024),
    reference: int = 512,
    check_trend: bool = True,
) -> ResidualReport:
    """Numeric residual of the Mittag-Leffler eigen-solution on ``[0, 1]²``.

    Runs every grid in ``grids`` and returns the report at ``reference``; the
    RMS residual must decrease strictly with refinement.
    """
    if not 0 < mu <= 2:
        raise DomainError(f"mu must lie in (0, 2], got {mu!r}")
    alpha, beta = as_order(alpha), as_order(beta)
    u = eigen_solution(alpha, beta, mu)
    label = f"E_{beta.value:g}({mu:g} x^{beta.value:g}) E_{alpha.value:g}({mu * mu:g} t^{alpha.value:g})"
    reports = {}
    for n in sorted(set(grids) | {reference}):
        g = UniformGrid.on_interval(1.0, n)
        reports[n] = pde_residual_numeric(u, alpha, beta, g, g, seed=label)
    trend = [reports[n].rms_rel for n in grids]
    trend_text = ", ".join(f"rms[{n}]={r:.6e}" for n, r in zip(grids, trend))
    ref = reports[reference]
    ref = ResidualReport(
        ref.mode, ref.alpha, ref.beta, None, label, ref.grid, ref.max_rel, ref.rms_rel,
        notes=f"mu={mu!r}; {trend_text}", residual=ref.residual,
    )
    if check_trend and not all(b < a for a, b in zip(trend, trend[1:])):
        raise ConvergenceError(f"eigen-solution residual does not decrease: {trend_text}")
    return ref


def suite_determining(
    alpha: OrderLike = 0.5,
    beta: OrderLike = 0.5,
    seeds: Sequence[str] = CLASSICAL_SEEDS,
) -> tuple[list[ResidualReport], list[ResidualReport]]:
    """Determining-equation residuals of the basis on solution seeds.

    Returns ``(asserted, discrepancy)``. The asserted list covers v1..v5 in
    both modes and v6 in corrected mode, each of which must vanish. The
    discrepancy list holds the Γ-weighted v6 residuals, which are only reported.
    Raises :class:`SuiteFailure` when an asserted residual is nonzero.
    """
    alpha, beta = as_order(alpha), as_order(beta)
    asserted, discrepancy, failures = [], [], []
    for mode in ("paper", "corrected"):
        gens = basis(mode, alpha, beta)
        for i, g in enumerate(gens, start=1):
            for seed_text in seeds:
                u = parse_expr(seed_text)
                res = determining_residual(g, u)
                r_max, r_rms = _coeff_norms(res)
                u_max, u_rms = _coeff_norms(u)
                rep = ResidualReport(
                    "formal", alpha.value, beta.value, i, seed_text, None,
                    r_max / u_max, r_rms / u_rms,
                    notes=f"determining residual of v{i} ({mode} mode)", residual=res,
                )
                if mode == "paper" and i == 6:
                    discrepancy.append(rep)
                    continue
                asserted.append(rep)
                if res:
                    failures.append(f"v{i} ({mode}), seed {seed_text}: {format_expr(res)}")
    if failures:
        raise SuiteFailure(failures, asserted + discrepancy)
    return asserted, discrepancy


def gap_report_family5(
    alpha: OrderLike,
    beta: OrderLike,
    epsilon: float,
    c: float = 1.0,
    n: int = 512,
) -> ResidualReport:
    """Numeric residual of ``c exp(ε² T - ε X)`` under the integral-defined derivative.

    The formal residual of this function is exactly zero; the numeric value
    measures how far the chain-rule convention is from the integral
    definition. Nothing is asserted.
    """
    alpha, beta = as_order(alpha), as_order(beta)
    e = float(epsilon)
    expr = c * exp_linear(-e, e * e) if c else const(0)
    formal = pde_residual_formal(expr, alpha, beta)
    g = UniformGrid.on_interval(1.0, n)
    rep = pde_residual_numeric(
        lambda x, t: evaluate(expr, x, t, alpha, beta), alpha, beta, g, g, family=5,
        seed=format_expr(expr),
    )
    formal_text = "0" if formal.is_formal_zero else format_expr(formal.residual)
    return ResidualReport(
        rep.mode, rep.alpha, rep.beta, 5, rep.seed, rep.grid, rep.max_rel, rep.rms_rel,
        notes=f"epsilon={e!r}; c={float(c)!r}; formal residual {formal_text}; report only",
        residual=rep.residual,
    )
