"""Command-line front end.

Exit codes: 0 success or test passed, 1 mathematical negative (test
failed, no square root, infeasible back step), 2 usage or input error.
Measures and shifts travel as JSON on stdin/stdout so commands pipe.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import mpmath
import numpy as np

from .algebra import (
    OutsideSymbolicFamily,
    catalog_measure,
    catalog_sqrt,
    sqrt_atomic,
    sqrt_geometric,
    square_measure,
)
from .measure import Measure, measure_moment
from .oracle import halfline_density, verify_square
from .quadrature import integrate_halfline
from .scalar import as_scalar, format_scalar, scalar_from_json, set_precision, to_mpf, working_dps
from .shift import (
    MomentSequence,
    WeightSequence,
    aluthge_transform,
    backstep_extension,
    backstep_shift,
    moments_from_weights,
    pth_power_shift,
    restriction_shift,
    schur_product,
)
from .subnormality import complete_monotonicity_scan, is_k_hyponormal


class UsageError(Exception):
    pass


# --- I/O --------------------------------------------------------------------------

def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load(path: str) -> dict:
    try:
        obj = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise UsageError(f"{path}: expected a JSON object")
    return obj


def _kind(obj: dict) -> str:
    if {"atoms", "terms", "zero_mass"} & set(obj):
        return "measure"
    if {"weights", "weights_sq", "rule"} & set(obj):
        return "shift"
    if "moments" in obj:
        return "moments"
    raise UsageError("input is neither a measure, a shift, nor a moment list")


def _parse(obj: dict, want: str):
    kind = _kind(obj)
    if kind != want:
        raise UsageError(f"expected a {want} file, got a {kind} file")
    try:
        if kind == "measure":
            return Measure.from_dict(obj)
        if kind == "shift":
            return WeightSequence.from_dict(obj)
        return MomentSequence(tuple(scalar_from_json(v) for v in obj["moments"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed {kind}: {exc}") from exc


def _load_measure(path: str) -> Measure:
    return _parse(_load(path), "measure")


def _write(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    with open(path, "w") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")


def _fmt(x, args) -> str:
    return format_scalar(x, decimal=args.decimal, digits=args.digits)


def _precision_note() -> str:
    return f"# working precision {working_dps()} digits; rationals exact"


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# --- shift ----------------------------------------------------------------------

def cmd_shift_show(args) -> int:
    w = _parse(_load(args.inp), "shift")
    count = args.n if w.rule is not None else min(args.n, len(w.prefix_sq))
    print(_precision_note())
    if w.rule is not None:
        print(f"# tail rule: {json.dumps(w.rule.to_dict())}")
    gam = moments_from_weights(w, count + 1)
    print("n\talpha_n^2\talpha_n\tgamma_n")
    for n in range(count):
        print(f"{n}\t{_fmt(w.square(n), args)}\t{_fmt(w.weight(n), args)}\t{_fmt(gam[n], args)}")
    return 0


def cmd_shift_transform(args) -> int:
    obj = _load(args.inp)
    op = args.op
    if op == "backstep":
        if args.x is None:
            raise UsageError("--op backstep needs --x")
        x = as_scalar(args.x)
        if _kind(obj) == "measure":
            res = backstep_extension(_parse(obj, "measure"), x)
            if not res.feasible:
                _note(f"infeasible: {res.reason}")
                return 1
            _note(f"feasible: integral of 1/t = {_fmt(res.reciprocal_integral, args)}")
            _write(res.measure.to_json(), args.out)
            return 0
        out = backstep_shift(_parse(obj, "shift"), x)
    else:
        w = _parse(obj, "shift")
        if op == "pow":
            if args.p is None:
                raise UsageError("--op pow needs --p")
            out = pth_power_shift(w, as_scalar(args.p))
        elif op == "aluthge":
            out = w
            for _ in range(args.iterate):
                out = aluthge_transform(out)
        elif op == "schur":
            if args.other is None:
                raise UsageError("--op schur needs --with FILE")
            out = schur_product(w, _parse(_load(args.other), "shift"))
        elif op == "restrict":
            if args.n is None:
                raise UsageError("--op restrict needs --n")
            out = restriction_shift(w, args.n)
        else:  # pragma: no cover - argparse restricts choices
            raise UsageError(f"unknown op {op}")
    _write(out.to_json(), args.out)
    return 0


def _moment_source(obj: dict):
    kind = _kind(obj)
    if kind == "measure":
        mu = _parse(obj, "measure")
        return MomentSequence.from_rule(lambda n: measure_moment(mu, n))
    return _parse(obj, kind)


def cmd_shift_test(args) -> int:
    if args.khypo is None and args.ncontr is None:
        raise UsageError("give --khypo K and/or --ncontr N")
    source = _moment_source(_load(args.inp))
    reports = []
    try:
        if args.khypo is not None:
            reports += [is_k_hyponormal(source, k, args.mmax, args.tol, args.method)
                        for k in range(1, args.khypo + 1)]
        if args.ncontr is not None:
            reports += complete_monotonicity_scan(source, args.ncontr, args.mmax).reports
    except (ValueError, IndexError) as exc:
        raise UsageError(str(exc)) from exc
    ok = all(r.passed for r in reports)
    if args.json:
        print(json.dumps({
            "pass": ok,
            "tests": [{"test": r.test, "order": r.order, "pass": r.passed,
                       "first_failure": r.first_failure,
                       "witness": _witness_json(r.witness)} for r in reports],
        }, indent=2))
    else:
        print(_precision_note())
        for r in reports:
            print(r.summary())
            if r.witness is not None:
                print(f"  witness: {_witness_text(r.witness, args)}")
        print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def _witness_json(w):
    if w is None:
        return None
    return {k: ([str(x) for x in v] if isinstance(v, list) else str(v)) for k, v in w.items()}


def _witness_text(w, args) -> str:
    parts = []
    for k, v in w.items():
        if isinstance(v, list):
            parts.append(f"{k}=[" + ", ".join(_fmt(x, args) for x in v) + "]")
        elif v is not None and not isinstance(v, int):
            parts.append(f"{k}={_fmt(v, args)}")
        else:
            parts.append(f"{k}={v}")
    return " ".join(parts)


# --- measure --------------------------------------------------------------------

def cmd_measure_moments(args) -> int:
    mu = _load_measure(args.inp)
    print(_precision_note())
    print("n\tgamma_n")
    for n in range(args.n + 1):
        print(f"{n}\t{_fmt(measure_moment(mu, n), args)}")
    return 0


def cmd_measure_square(args) -> int:
    mu = _load_measure(args.inp)
    try:
        sq = square_measure(mu, self_check=args.check)
    except OutsideSymbolicFamily as exc:
        print(json.dumps({"error": str(exc), "numeric_only": True}), file=sys.stderr)
        return 1
    _write(sq.to_json(), args.out)
    return 0


def _sqrt_result(res, args) -> int:
    if not res.ok:
        print(json.dumps({"ok": False, "reason": res.reason, "detail": res.detail}), file=sys.stderr)
        return 1
    _note(f"method {res.method}; max residual {mpmath.nstr(to_mpf(res.max_residual), 5)}; "
          f"verified {res.verified}"
          + ("" if res.paths_agree is None else f"; paths agree {res.paths_agree}"))
    _write(res.measure.to_json(), args.out)
    return 0 if res.verified else 1


def cmd_measure_sqrt_atomic(args) -> int:
    return _sqrt_result(sqrt_atomic(_load_measure(args.inp), tol=as_scalar(args.tol)), args)


def cmd_measure_sqrt_geometric(args) -> int:
    if args.rho:
        rho = [as_scalar(v) for v in args.rho.split(",")]
    else:
        obj = _load(args.inp)
        if "rho" not in obj:
            raise UsageError("geometric input needs a 'rho' list")
        rho = [scalar_from_json(v) for v in obj["rho"]]
    try:
        res = sqrt_geometric(rho, r=as_scalar(args.r) if args.r else None)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if res.ok:
        _note("coefficients: " + ", ".join(_fmt(c, args) for c in res.coefficients))
    return _sqrt_result(res, args)


def cmd_measure_catalog(args) -> int:
    params = {}
    if args.q is not None:
        params["q"] = as_scalar(args.q)
    if args.j is not None:
        params["j"] = args.j
    if args.M is not None:
        params["M"] = args.M
    try:
        if args.name == "sqrtA3":
            mu, bound = catalog_sqrt("sqrtA3", args.M)
            _note(f"truncated series; moment error bound {mpmath.nstr(to_mpf(bound), 5)}")
        else:
            mu = catalog_measure(args.name, **params)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    _write(mu.to_json(), args.out)
    return 0


def cmd_measure_verify_square(args) -> int:
    mu, nu = _load_measure(args.mu), _load_measure(args.nu)
    report = verify_square(mu, nu, args.N, args.tol, args.method)
    if args.report:
        _write(report.to_json(indent=2), args.report)
    print(_precision_note())
    print(report.table())
    return 0 if report.passed else 1


# --- plotdata -------------------------------------------------------------------

def plot_rows(mu: Measure, samples: int, tol: float = 1e-10) -> list:
    """``(t, density, cumulative)`` at ``t = i/(S+1)``; cumulative is the
    density mass on ``(0, t]`` by quadrature."""
    if samples < 2:
        raise UsageError("need at least 2 samples")
    h, marks = halfline_density(mu)
    rows = []
    for i in range(1, samples + 1):
        t = i / (samples + 1)
        x0 = -np.log(t)
        dens = float(h(np.array([x0]))[0]) if mu.terms else 0.0
        if mu.terms:
            def g(y, x0=x0):
                x = x0 + np.asarray(y, dtype=float)
                return h(x) * np.exp(-x)
            cum = integrate_halfline(g, tol, [m - x0 for m in marks if m > x0]).value
        else:
            cum = 0.0
        rows.append((t, dens, cum))
    return rows


def cmd_plotdata(args) -> int:
    mu = _load_measure(args.inp)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "density", "cumulative"])
    for t, d, c in plot_rows(mu, args.samples):
        writer.writerow([f"{t:.12g}", f"{d:.15g}" if mu.terms else "", f"{c:.15g}"])
    buf.write("# atoms\n# position,mass\n")
    if mu.zero_mass:
        buf.write(f"# 0,{_fmt(mu.zero_mass, args)}\n")
    for a in mu.atoms:
        buf.write(f"# {_fmt(a.position, args)},{_fmt(a.mass, args)}\n")
    _write(buf.getvalue(), args.out)
    return 0


# --- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def common(default):
        # accepted both before and after the subcommand
        c = argparse.ArgumentParser(add_help=False)
        c.add_argument("--decimal", action="store_true",
                       default=False if default else argparse.SUPPRESS,
                       help="print rationals as decimals")
        c.add_argument("--digits", type=int, default=20 if default else argparse.SUPPRESS,
                       help="significant digits for decimal output")
        c.add_argument("--precision", type=int, default=None if default else argparse.SUPPRESS,
                       help="working precision in decimal digits")
        return c

    shared = common(False)
    p = argparse.ArgumentParser(prog="bergerkit", description="Weighted shifts and Berger measures.",
                                parents=[common(True)])
    top = p.add_subparsers(dest="group", required=True)

    def add_parser(sub, name, **kw):
        return sub.add_parser(name, parents=[shared], **kw)

    def io_args(sp, out=True):
        sp.add_argument("--in", dest="inp", default="-", help="input JSON file ('-' for stdin)")
        if out:
            sp.add_argument("--out", default="-", help="output file ('-' for stdout)")

    shift = add_parser(top, "shift", help="weighted shift operations").add_subparsers(dest="cmd", required=True)
    sp = add_parser(shift, "show", help="print weights and moments")
    io_args(sp, out=False)
    sp.add_argument("-n", type=int, default=10)
    sp.set_defaults(func=cmd_shift_show)

    sp = add_parser(shift, "transform", help="derive a new shift")
    io_args(sp)
    sp.add_argument("--op", required=True, choices=["pow", "aluthge", "schur", "restrict", "backstep"])
    sp.add_argument("--p", help="power for --op pow")
    sp.add_argument("--with", dest="other", help="second shift for --op schur")
    sp.add_argument("--n", type=int, help="restriction index")
    sp.add_argument("--x", help="prefixed weight for --op backstep")
    sp.add_argument("--iterate", type=int, default=1, help="Aluthge iterations")
    sp.set_defaults(func=cmd_shift_transform)

    sp = add_parser(shift, "test", help="k-hyponormality and n-contractivity")
    io_args(sp, out=False)
    sp.add_argument("--khypo", type=int)
    sp.add_argument("--ncontr", type=int)
    sp.add_argument("--mmax", type=int, default=50)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--method", default="auto", choices=["auto", "exact", "float", "mp"])
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_shift_test)

    meas = add_parser(top, "measure", help="measure operations").add_subparsers(dest="cmd", required=True)
    sp = add_parser(meas, "moments", help="moment table")
    io_args(sp, out=False)
    sp.add_argument("-n", type=int, default=10)
    sp.set_defaults(func=cmd_measure_moments)

    sp = add_parser(meas, "square", help="exact square in the density family")
    io_args(sp)
    sp.add_argument("--check", type=int, default=0, help="self-check this many moments")
    sp.set_defaults(func=cmd_measure_square)

    sp = add_parser(meas, "sqrt-atomic", help="square root of an atomic measure")
    io_args(sp)
    sp.add_argument("--tol", default="1e-10")
    sp.set_defaults(func=cmd_measure_sqrt_atomic)

    sp = add_parser(meas, "sqrt-geometric", help="square root of masses on a geometric grid")
    io_args(sp)
    sp.add_argument("--rho", help="comma separated masses rho_0,rho_1,...")
    sp.add_argument("--r", help="grid ratio for atom positions (default 1/2)")
    sp.set_defaults(func=cmd_measure_sqrt_geometric)

    sp = add_parser(meas, "catalog", help="named measures")
    sp.add_argument("name")
    sp.add_argument("--q")
    sp.add_argument("--j", type=int)
    sp.add_argument("--M", type=int)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_measure_catalog)

    sp = add_parser(meas, "verify-square", help="check gamma_n(MU) = gamma_n(NU)^2")
    sp.add_argument("mu")
    sp.add_argument("nu")
    sp.add_argument("-N", type=int, default=20)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--method", default="auto", choices=["auto", "quad"])
    sp.add_argument("--report", help="write the JSON report here")
    sp.set_defaults(func=cmd_measure_verify_square)

    sp = add_parser(top, "plotdata", help="CSV of density samples")
    io_args(sp)
    sp.add_argument("--samples", type=int, default=100)
    sp.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.precision is not None:
        set_precision(args.precision)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        _note(f"bergerkit: error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
