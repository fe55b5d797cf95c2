"""Command-line front end: ``fraclie {deriv,transform,verify,bracket,invariant}``.

Exit codes: 0 success, 1 a check failed, 2 usage or domain error.
Flags override values from an optional ``--config`` JSON file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fraclie import canonical, characteristics, fraccalc, symmetry, verify
from fraclie.errors import (
    ClosureError,
    ConvergenceError,
    DomainError,
    FracLieError,
    GridSizeError,
    ParseError,
    SuiteFailure,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SUITES = ("classical", "eigen", "gap", "determining")
EIGEN_RMS_TOL = 5e-2


@dataclass
class RunConfig:
    alpha: float = 0.5
    beta: float = 0.5
    grid_n: int | None = None
    eigen_grids: tuple = (256, 512, 1024)
    epsilon: float = 0.5
    family: int = 5
    seed: str = "1"
    a_term: str = "exp(X+T)"
    output: str | None = None
    mode: str = "formal"
    mu: float = 1.0
    c: float = 1.0
    suite: str = "all"

    def validate(self) -> "RunConfig":
        fraccalc.FractionalOrder(self.alpha)
        fraccalc.FractionalOrder(self.beta)
        if self.family not in range(1, 8):
            raise DomainError(f"family must be 1..7, got {self.family}")
        if self.mode not in ("formal", "numeric", "both"):
            raise DomainError(f"mode must be formal, numeric or both, got {self.mode!r}")
        if self.suite not in SUITES + ("all",):
            raise DomainError(f"unknown suite {self.suite!r}")
        canonical.parse_expr(self.seed)
        self.eigen_grids = tuple(int(n) for n in self.eigen_grids)
        return self

    @classmethod
    def build(cls, config_path: str | None, overrides: dict) -> "RunConfig":
        values: dict = {}
        if config_path:
            try:
                values.update(json.loads(Path(config_path).read_text(encoding="utf-8")))
            except (OSError, json.JSONDecodeError) as exc:
                raise DomainError(f"cannot read config {config_path}: {exc}") from exc
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        values.update({k: v for k, v in overrides.items() if k in known and v is not None})
        return cls(**values).validate()


def _fmt(v: float) -> str:
    return f"{float(v):.9g}"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_deriv(args, cfg: RunConfig) -> int:
    alpha = fraccalc.FractionalOrder(args.alpha if args.alpha is not None else cfg.alpha)
    p = args.power
    n = cfg.grid_n or 4096
    coeff = fraccalc.power_rule_coeff(alpha, p)
    grid = fraccalc.UniformGrid.on_interval(1.0, n)
    x = grid.nodes
    gl = fraccalc.mrl_derivative(fraccalc.sample(lambda s: s**p, grid), alpha).values
    rows = []
    # the origin is a singular point of the closed form; rows start at node 1
    for i in range(1, n):
        oracle = fraccalc.quadrature_oracle(lambda s: s**p, alpha, x[i], args.oracle_n)
        closed = coeff * x[i] ** (p - alpha.value)
        rows.append([_fmt(x[i]), _fmt(gl[i]), _fmt(oracle), _fmt(closed)])
    _emit(_csv_text(["x", "gl_value", "oracle_value", "closed_form"], rows), cfg.output)
    return EXIT_OK


def cmd_transform(args, cfg: RunConfig) -> int:
    seed = canonical.parse_expr(cfg.seed)
    a_term = canonical.parse_expr(cfg.a_term) if cfg.family == 7 else None
    fam = symmetry.TransformFamily(cfg.family, cfg.epsilon, a_term)
    out = sys.stdout
    if cfg.family == 6:
        F = symmetry.transform_solution(fam, seed)
        grid = np.linspace(0.0, 1.0, 64)
        max_rel, _, _ = verify.fd_heat_residual(F, grid, grid)
        out.write("note: family 6 leaves the term algebra; output is numeric-only\n")
        out.write(f"numeric_residual: {_fmt(max_rel)}\n")
        return EXIT_OK
    u = symmetry.transform_solution(fam, seed)
    report = verify.pde_residual_formal(u, family=cfg.family, seed=cfg.seed)
    out.write(canonical.format_expr(u, digits=args.digits) + "\n")
    out.write(f"residual_norm: {_fmt(report.max_rel)}\n")
    if cfg.mode in ("numeric", "both"):
        grid = np.linspace(0.0, 1.0, 64)
        max_rel, _, _ = verify.fd_heat_residual(u.eval_canonical, grid, grid)
        out.write(f"numeric_residual: {_fmt(max_rel)}\n")
    return EXIT_OK


def _run_suite(name: str, cfg: RunConfig) -> tuple[list, list]:
    """Return (reports, failures) for one suite."""
    if name == "classical":
        try:
            return verify.suite_classical_limit(epsilon=cfg.epsilon), []
        except SuiteFailure as exc:
            return exc.reports, [f"classical: {f}" for f in exc.failures]
    if name == "eigen":
        reference = cfg.grid_n or 512
        try:
            rep = verify.suite_eigen_solution(
                cfg.alpha, cfg.beta, cfg.mu, grids=cfg.eigen_grids, reference=reference
            )
        except ConvergenceError as exc:
            return [], [f"eigen: {exc}"]
        failures = [] if rep.rms_rel < EIGEN_RMS_TOL else [f"eigen: rms_rel {rep.rms_rel:.3e} >= {EIGEN_RMS_TOL}"]
        return [rep], failures
    if name == "gap":
        return [verify.gap_report_family5(cfg.alpha, cfg.beta, cfg.epsilon, cfg.c, n=cfg.grid_n or 512)], []
    try:
        asserted, discrepancy = verify.suite_determining(cfg.alpha, cfg.beta)
        return asserted + discrepancy, []
    except SuiteFailure as exc:
        return exc.reports, [f"determining: {f}" for f in exc.failures]


def cmd_verify(args, cfg: RunConfig) -> int:
    names = SUITES if cfg.suite == "all" else (cfg.suite,)
    reports, failures = [], []
    for name in names:
        r, f = _run_suite(name, cfg)
        reports.extend(r)
        failures.extend(f)
    doc = {
        "config": {k: v for k, v in dataclasses.asdict(cfg).items() if k != "output"},
        "suites": list(names),
        "passed": not failures,
        "failures": failures,
        "reports": [r.to_dict() for r in reports],
    }
    doc["config"]["eigen_grids"] = list(cfg.eigen_grids)
    _emit(json.dumps(doc, indent=2) + "\n", cfg.output)
    for f in failures:
        print(f"FAILED {f}", file=sys.stderr)
    return EXIT_FAIL if failures else EXIT_OK


def cmd_bracket(args, cfg: RunConfig) -> int:
    table = symmetry.bracket_table(args.bracket_mode, cfg.alpha, cfg.beta)
    n = table.size
    rows = [[f"v{i}"] + [table.label(i, j) for j in range(1, n + 1)] for i in range(1, n + 1)]
    _emit(_csv_text(["bracket"] + [f"v{j}" for j in range(1, n + 1)], rows), cfg.output)
    return EXIT_OK


def cmd_invariant(args, cfg: RunConfig) -> int:
    inv = characteristics.scaling_invariant(args.a_coeff, args.b_coeff)
    X0, T0 = canonical.to_canonical(args.x0, args.t0, args.alpha, args.beta)
    system = characteristics.characteristic_system(inv.problem())
    curve = characteristics.integrate_characteristic(system, (X0, T0, args.u0), args.s_end, args.step)
    J = inv(curve.points[:, 0], curve.points[:, 1])
    rows = [
        [_fmt(s), _fmt(Xv), _fmt(Tv), _fmt(uv), _fmt(j)]
        for s, (Xv, Tv, uv), j in zip(curve.s_values, curve.points, J)
    ]
    _emit(_csv_text(["s", "X", "T", "u", "invariant"], rows), cfg.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fraclie", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with RunConfig values; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, orders=True):
        if orders:
            p.add_argument("--alpha", type=float)
            p.add_argument("--beta", type=float)
        p.add_argument("--output", "-o", help="write to this file instead of stdout")
        p.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    p = sub.add_parser("deriv", help="GL derivative of x^p against oracle and closed form (CSV)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--power", type=float, default=1.0)
    p.add_argument("--grid-n", dest="grid_n", type=int)
    p.add_argument("--oracle-n", dest="oracle_n", type=int, default=1024)
    common(p, orders=False)
    p.set_defaults(func=cmd_deriv)

    p = sub.add_parser("transform", help="apply a solution-transformation family to a seed")
    p.add_argument("--family", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--seed")
    p.add_argument("--a-term", dest="a_term", help="source a(X,T) for family 7")
    p.add_argument("--mode", choices=("formal", "numeric", "both"))
    p.add_argument("--digits", type=int, default=8, help="significant digits in the printed expression")
    common(p, orders=False)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("verify", help="run verification suites and write a JSON report")
    p.add_argument("--suite", choices=SUITES + ("all",))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--grid-n", dest="grid_n", type=int)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bracket", help="structure constants of the symmetry algebra (CSV)")
    p.add_argument("--mode", dest="bracket_mode", choices=("corrected", "paper"), default="corrected")
    common(p)
    p.set_defaults(func=cmd_bracket)

    p = sub.add_parser("invariant", help="scaling invariant along an RK4 characteristic (CSV)")
    p.add_argument("--a-coeff", dest="a_coeff", type=float, required=True)
    p.add_argument("--b-coeff", dest="b_coeff", type=float, required=True)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--u0", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--s-end", dest="s_end", type=float, default=1.0)
    p.add_argument("--step", type=float, default=1e-3)
    common(p, orders=False)
    p.set_defaults(func=cmd_invariant)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {k: v for k, v in vars(args).items() if k not in ("func", "command", "config")}
        cfg = RunConfig.build(getattr(args, "config", None), overrides)
        return args.func(args, cfg)
    except (DomainError, ParseError, GridSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SuiteFailure, ClosureError, ConvergenceError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except FracLieError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
