"""Command line interface: ``fgmx <command> ...``.

Exit codes: 0 success or affirmative verdict, 1 negative verdict, 2 usage,
parse or schema error.  Reports go to stdout as JSON, datasets as CSV.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import exprlang
from .copula import InvalidSpecError, validate
from .dependence import dependence_report
from .families import (FAMILY_TAGS, FamilyDomainError, FamilyParams, family_info,
                       fit_rho_inversion, gpd_from_rho_lambda, make_named)
from .funcspace import QuadratureConfig
from .measures import blomqvist_beta, diagonal_mass, measure_set, spearman_rho, upper_tail_dep
from .sampler import empirical_measures, sample, with_margins, write_csv
from .specfile import SpecFileError, load_spec, load_spec_doc, build_spec

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, allow_nan=True)
    sys.stdout.write("\n")


def _fail(msg: str, code: int, **extra) -> int:
    _emit({"error": msg, **extra})
    return code


def _quad() -> QuadratureConfig:
    return QuadratureConfig.from_env()


# ----------------------------------------------------------------- commands


def cmd_validate(args) -> int:
    spec = build_spec(load_spec_doc(args.spec), certified=False)
    report = validate(spec, n_grid=args.grid, eps=args.eps)
    _emit({"label": spec.label, **report.to_dict()})
    return EXIT_OK if report.verdict else EXIT_NEGATIVE


def cmd_measures(args) -> int:
    spec = load_spec(args.spec)
    _emit({"label": spec.label, **measure_set(spec, _quad()).to_dict()})
    return EXIT_OK


def cmd_depcheck(args) -> int:
    spec = load_spec(args.spec)
    _emit({"label": spec.label, **dependence_report(spec).to_dict()})
    return EXIT_OK


def _quantile(src: Optional[str]):
    if src is None:
        return lambda x: np.asarray(x, dtype=float)
    return exprlang.compile_expr(exprlang.parse(src))


def cmd_sample(args) -> int:
    qx, qy = _quantile(args.margin_x), _quantile(args.margin_y)
    spec = load_spec(args.spec)
    batch = sample(spec, args.n, args.seed)
    margins = None
    if args.margin_x is not None or args.margin_y is not None:
        try:
            margins = with_margins(batch, qx, qy)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if args.out in (None, "-"):
        buf = io.StringIO()
        write_csv(batch, buf, margins)
        sys.stdout.write(buf.getvalue())
    else:
        write_csv(batch, args.out, margins)
        if args.summary:
            _emit({"n": batch.n, "seed": batch.seed, "diagonal_hits": batch.diagonal_hits,
                   **{k: v for k, v in empirical_measures(batch).items() if k != "lambda_hat"}})
    return EXIT_OK


def cmd_family(args) -> int:
    if args.action == "list":
        _emit({"families": list(FAMILY_TAGS)})
        return EXIT_OK
    if args.action == "show":
        if len(args.values) != 1:
            raise UsageError("family show needs exactly one tag")
        _emit(family_info(args.values[0]))
        return EXIT_OK
    if len(args.values) != 2:
        raise UsageError("family from-rho-lambda needs RHO LAMBDA")
    try:
        rho, lam = (float(x) for x in args.values)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        alpha, sigma = gpd_from_rho_lambda(rho, lam)
    except FamilyDomainError as exc:
        return _fail(str(exc), EXIT_NEGATIVE)
    _emit({"family": "gpd", "alpha": alpha, "sigma": sigma})
    return EXIT_OK


def _read_pairs(path: str) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    try:
        float(header[0])
        header, body = [], rows  # no header line
    except ValueError:
        pass
    cols = (header.index("x"), header.index("y")) if {"x", "y"} <= set(header) else (0, 1)
    try:
        return np.array([[float(r[cols[0]]), float(r[cols[1]])] for r in body if r])
    except (ValueError, IndexError) as exc:
        raise UsageError(f"{path}: bad data row ({exc})") from exc


def _kv_pairs(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"expected NAME=VALUE, got {item!r}")
        try:
            out[key] = float(val)
        except ValueError:
            out[key] = val  # expression-valued parameter such as phi
    return out


def cmd_fit(args) -> int:
    data = _read_pairs(args.data)
    template = FamilyParams(args.family, _kv_pairs(args.param))
    try:
        result = fit_rho_inversion(data, template)
    except FamilyDomainError as exc:
        if "outside the attainable range" in str(exc):
            return _fail(str(exc), EXIT_NEGATIVE)
        raise
    _emit(result.to_dict())
    return EXIT_OK


_DEFAULT_PARAM = {"fgm": "theta", "constant-theta": "theta", "ca": "alpha", "b11": "sigma",
                  "gpd": "alpha", "uniform-k": "alpha"}
_COLUMNS = ("rho", "lambda", "beta", "mass")


def _param_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--param-range must be a:b:steps, got {text!r}")
    try:
        a, b, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad --param-range {text!r}: {exc}") from exc
    if steps < 1 or not (math.isfinite(a) and math.isfinite(b)) or (steps > 1 and a == b):
        raise UsageError(f"--param-range {text!r} is empty")
    return np.linspace(a, b, steps)


def cmd_table(args) -> int:
    values = _param_range(args.param_range)
    columns = [c.strip() for c in args.columns.split(",") if c.strip()]
    bad = [c for c in columns if c not in _COLUMNS]
    if bad or not columns:
        raise UsageError(f"unknown columns {bad}; choose from {', '.join(_COLUMNS)}")
    name = args.param or _DEFAULT_PARAM.get(args.family)
    if name is None:
        raise UsageError(f"family {args.family!r} has no default parameter; pass --param")
    fixed = _kv_pairs(args.fixed)
    cfg = _quad()
    calc = {"rho": lambda s: spearman_rho(s, cfg), "lambda": upper_tail_dep,
            "beta": blomqvist_beta, "mass": lambda s: diagonal_mass(s, cfg)}
    out = csv.writer(sys.stdout, lineterminator="\n")
    rows = []
    for x in values:
        spec = make_named(FamilyParams(args.family, {**fixed, name: float(x)}))
        rows.append([float(x)] + [calc[c](spec) for c in columns])
    out.writerow([name] + columns)
    for r in rows:
        out.writerow([f"{v:.17g}" for v in r])
    return EXIT_OK


# ------------------------------------------------------------------ parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fgmx", description="Extended FGM copula toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check the copula conditions for a spec file")
    v.add_argument("spec")
    v.add_argument("--grid", type=int, default=512)
    v.add_argument("--eps", type=float, default=1e-4)
    v.set_defaults(func=cmd_validate)

    m = sub.add_parser("measures", help="rho, tail dependence, beta, diagonal mass")
    m.add_argument("spec")
    m.set_defaults(func=cmd_measures)

    d = sub.add_parser("depcheck", help="PQD/LTD/RTI/LCSD/RCSI certification")
    d.add_argument("spec")
    d.set_defaults(func=cmd_depcheck)

    s = sub.add_parser("sample", help="simulate pairs to CSV")
    s.add_argument("spec")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None)
    s.add_argument("--margin-x", default=None, help="quantile function of x as an expression in t")
    s.add_argument("--margin-y", default=None, help="quantile function of y as an expression in t")
    s.add_argument("--summary", action="store_true", help="print a JSON summary when --out is a file")
    s.set_defaults(func=cmd_sample)

    f = sub.add_parser("family", help="list, show, or invert named families")
    f.add_argument("action", choices=("list", "show", "from-rho-lambda"))
    f.add_argument("values", nargs="*")
    f.set_defaults(func=cmd_family)

    ft = sub.add_parser("fit", help="rho-inversion fit of a family to CSV data")
    ft.add_argument("data")
    ft.add_argument("--family", required=True)
    ft.add_argument("--param", action="append", metavar="NAME=VALUE",
                    help="fixed template parameter, e.g. phi=t*(1-t)^2")
    ft.set_defaults(func=cmd_fit)

    t = sub.add_parser("table", help="measures over a parameter range, as CSV")
    t.add_argument("--family", required=True)
    t.add_argument("--param-range", required=True, metavar="A:B:STEPS")
    t.add_argument("--param", default=None, help="parameter to sweep (default per family)")
    t.add_argument("--columns", default="rho,lambda,beta,mass")
    t.add_argument("--fixed", action="append", metavar="NAME=VALUE")
    t.set_defaults(func=cmd_table)
    return p


_EXPR_OPTIONS = ("--margin-x", "--margin-y")


def _glue_expr_options(argv: Sequence[str]) -> list[str]:
    # argparse refuses option values that start with "-", e.g. "-ln(1-t)"
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _EXPR_OPTIONS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = _glue_expr_options(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except exprlang.ExprSyntaxError as exc:
        return _fail(str(exc), EXIT_USAGE, offset=exc.offset)
    except exprlang.UnknownIdentifierError as exc:
        return _fail(str(exc), EXIT_USAGE, offset=exc.offset)
    except InvalidSpecError as exc:
        report = exc.report.to_dict() if exc.report is not None else None
        return _fail(str(exc), EXIT_NEGATIVE, report=report)
    except (SpecFileError, FamilyDomainError, UsageError, ValueError, OSError) as exc:
        return _fail(str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
