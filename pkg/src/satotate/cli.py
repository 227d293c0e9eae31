"""Batch command-line interface.

Exit codes: 0 success, 2 invalid input, 3 numeric failure, 4 insufficient
data. Data goes to stdout (or ``--out``), diagnostics to stderr. Floats are
printed with 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import analytics as an
from . import frobenius as fr
from . import lie_core as lc
from . import st_group as st
from . import vinogradov as vg
from .errors import InvalidInputError, SatoTateError

__all__ = ["main", "run", "build_parser"]


def _num(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _ints(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip() != "")
    except ValueError:
        raise InvalidInputError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip() != "")
    except ValueError:
        raise InvalidInputError(f"expected comma-separated numbers, got {text!r}") from None


def _interval(text: str) -> st.IntervalQuery:
    vals = _floats(text)
    if len(vals) != 2:
        raise InvalidInputError("interval must be 'lower,upper'")
    return st.IntervalQuery(*vals)


def _x(text: str) -> int:
    try:
        x = float(text)
    except ValueError:
        raise InvalidInputError(f"x must be a number, got {text!r}") from None
    if x < 2:
        raise InvalidInputError("x must be at least 2")
    return int(x)


def _weight(rs, text: str) -> lc.Weight:
    coords = _ints(text)
    if len(coords) != rs.q:
        raise InvalidInputError(f"weight needs {rs.q} coordinates")
    return lc.Weight.of(rs, coords)


def _group(name: str, catalog: str | None):
    if catalog:
        with open(catalog, encoding="utf-8") as fh:
            groups = st.load_catalog(fh)
        if name in groups:
            return groups[name]
    return st.catalog_lookup(name)


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _report(args, rep: an.AnalysisReport) -> None:
    _emit(args, rep.to_json() if args.format == "json" else rep.to_csv())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_lie(args) -> None:
    desc = _group(args.group, args.catalog)
    rs = desc.root_system
    lam = _weight(rs, args.weight)
    if args.action == "dim":
        print(lc.weyl_dimension(rs, lam))
    elif args.action == "mult":
        print(lc.weight_multiplicity(rs, lam, _weight(rs, args.mu)))
    elif args.action == "inverse":
        d = lc.gupta_inverse_entry(rs, lam, _weight(rs, args.mu))
        print(d.numerator if d.denominator == 1 else d)
    elif args.action == "char":
        angles = _floats(args.angles) if args.angles else (0.0,) * rs.q
        print(_num(lc.character_value(rs, lam, angles)))
    elif args.action == "orbit":
        orbit, t = lc.weyl_orbit(rs, lam)
        for w in sorted(orbit, key=lambda w: w.coords):
            print(",".join(map(str, w.coords)))
        print(f"stabilizer {t}", file=sys.stderr)


def cmd_measure(args) -> None:
    desc = _group(args.group, args.catalog)
    if args.moment is not None:
        print(_num(st.moment(desc, args.moment)))
        return
    if args.interval is None:
        raise InvalidInputError("measure needs --interval or --moment")
    print(_num(st.measure_interval(desc, _interval(args.interval), args.tol)))


def cmd_vinogradov(args) -> None:
    desc = _group(args.group, args.catalog)
    I = _interval(args.interval)
    if args.delta is not None:
        r = args.r if args.r is not None else max(1, desc.q + desc.phi - 1 if desc.phi else desc.q)
        M = args.M if args.M is not None else 64
        params = vg.make_params(desc, args.delta, r, M)
    else:
        params = vg.default_parameters(desc, float(args.x), args.N, I)
        if args.M is not None:
            params = vg.make_params(desc, params.Delta, params.r, args.M)
    series = vg.smooth(vg.indicator_fourier(desc, I, params.M), params)
    F = vg.weyl_average(desc, series)
    dec = vg.character_decomposition(desc, F)
    mu = st.measure_interval(desc, I)
    info = {
        "Delta": params.Delta, "r": params.r, "delta": params.delta, "M": params.M,
        "trivial_component": dec.delta, "measure": mu, "virtual_dimension": dec.virtual_dimension,
    }
    for k, v in info.items():
        print(f"{k},{_num(v)}")
    if args.coefficients:
        with open(args.coefficients, "w", encoding="utf-8", newline="\n") as fh:
            F.to_csv(fh)


def cmd_traces(args) -> None:
    curve = fr.parse_curve(args.curve, args.label or "")
    if args.bad:
        curve = fr.CurveSpec(*curve.coefficients, label=curve.label,
                             bad_norms=frozenset(_ints(args.bad)) | curve.bad_norms,
                             cm_discriminant=curve.cm_discriminant)
    seq = fr.trace_sequence(curve, _x(args.x), args.strategy, threads=args.threads, seed=args.seed)
    if args.out:
        fr.save_traces(args.out, seq)
        print(f"wrote {len(seq)} records to {args.out}", file=sys.stderr)
    else:
        for n, a in zip(seq.norms.tolist(), seq.a.tolist()):
            print(f"{n},{a}")


def _seq(path):
    return fr.load_traces(path)


def cmd_analyze(args) -> None:
    kind = args.kind
    if kind == "sign":
        norm, bound = an.sign_search(_seq(args.a), _seq(args.b), args.constant)
        print(norm if norm is not None else "exhausted")
        print(f"bound {_num(bound)}", file=sys.stderr)
        return
    seq = _seq(args.a)
    grid = [float(v) for v in _floats(args.x)] if args.x else [float(seq.max_norm)]
    if kind == "st":
        desc = _group(args.group, args.catalog)
        rep = an.effective_st_report(seq, desc, _interval(args.interval), grid, args.N, args.constant)
    elif kind == "linnik":
        desc = _group(args.group, args.catalog)
        norm, bound = an.linnik_interval_search(seq, _interval(args.interval), desc, args.constant, args.N)
        print(norm if norm is not None else "exhausted")
        print(f"bound {_num(bound)}", file=sys.stderr)
        return
    elif kind == "maxtrace":
        rep = an.max_trace_stats(seq, grid)
    elif kind == "moment":
        rep = an.AnalysisReport("moment", {"curve": seq.label, "n": args.n})
        desc = _group(args.group, args.catalog) if args.group else None
        for x in grid:
            target = st.moment(desc, args.n) if desc else float("nan")
            rep.add_row(x, an.empirical_moment(seq, args.n, x), target, 1.0)
    elif kind in ("charsum", "bach"):
        char = _character(args)
        other = _seq(args.b) if args.b else None
        if kind == "charsum":
            rep = an.character_report(seq, char, grid, args.N, args.constant, other)
        else:
            d = char.delta()
            rep = an.AnalysisReport("bach_sum", {"curve": seq.label, "character": char.kind, "delta": d,
                                                  "a": an.BACH_A, "squares": args.squares})
            for x in grid:
                val = an.bach_sum(seq, char, x, other, include_squares=args.squares)
                rep.add_row(x, val, 16 / 25 * d * x, x, ratio=val / x)
    else:  # pragma: no cover - argparse restricts choices
        raise InvalidInputError(f"unknown analysis {kind!r}")
    _report(args, rep)


def _character(args) -> an.CharacterSpec:
    if args.character == "trivial":
        return an.CharacterSpec("trivial")
    desc = _group(args.group, args.catalog)
    if args.character == "psi":
        other = _group(args.group2 or args.group, args.catalog)
        return an.CharacterSpec("psi_pair", desc, desc2=other)
    lam = _weight(desc.root_system, args.weight)
    return an.CharacterSpec(args.character, desc, lam)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="satotate", description="Effective Sato-Tate toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--catalog", help="JSON file with extra group descriptors")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized internals")

    lie = sub.add_parser("lie", help="representation theory of a catalog group")
    lie.add_argument("action", choices=["dim", "mult", "inverse", "char", "orbit"])
    lie.add_argument("--group", required=True)
    lie.add_argument("--weight", required=True, help="fundamental-weight coordinates, e.g. 1,0")
    lie.add_argument("--mu", default=None, help="second weight for mult/inverse")
    lie.add_argument("--angles", default=None)
    common(lie)
    lie.set_defaults(func=cmd_lie)

    ms = sub.add_parser("measure", help="trace-measure mass of an interval or a moment")
    ms.add_argument("--group", required=True)
    ms.add_argument("--interval")
    ms.add_argument("--tol", type=float, default=None)
    ms.add_argument("--moment", type=int, default=None)
    common(ms)
    ms.set_defaults(func=cmd_measure)

    vn = sub.add_parser("vinogradov", help="smoothed indicator and its trivial component")
    vn.add_argument("--group", required=True)
    vn.add_argument("--interval", required=True)
    vn.add_argument("--delta", type=float, default=None, help="smoothing width Delta")
    vn.add_argument("--r", type=int, default=None)
    vn.add_argument("--M", type=int, default=None)
    vn.add_argument("--x", type=float, default=None)
    vn.add_argument("--N", type=int, default=1)
    vn.add_argument("--coefficients", help="write Weyl-averaged coefficients to this CSV")
    common(vn)
    vn.set_defaults(func=cmd_vinogradov)

    tr = sub.add_parser("traces", help="compute Frobenius traces of an elliptic curve")
    tr.add_argument("--curve", required=True, help="a1,a2,a3,a4,a6 or a catalog name")
    tr.add_argument("--x", required=True)
    tr.add_argument("--strategy", choices=["auto", "naive", "bsgs", "cm"], default="auto")
    tr.add_argument("--label", default=None)
    tr.add_argument("--bad", default=None, help="extra bad primes")
    tr.add_argument("--threads", type=int, default=None)
    tr.add_argument("--out")
    common(tr)
    tr.set_defaults(func=cmd_traces)

    az = sub.add_parser("analyze", help="experiments on trace files")
    az.add_argument("kind", choices=["st", "linnik", "sign", "maxtrace", "moment", "charsum", "bach"])
    az.add_argument("--a", required=True, help="trace file")
    az.add_argument("--b", help="second trace file")
    az.add_argument("--group")
    az.add_argument("--group2")
    az.add_argument("--interval")
    az.add_argument("--x", help="comma-separated x grid (default: max norm)")
    az.add_argument("--N", type=int, default=None)
    az.add_argument("--constant", type=float, default=1.0)
    az.add_argument("--n", type=int, default=2)
    az.add_argument("--character", choices=["trivial", "irreducible", "squared", "psi"], default="trivial")
    az.add_argument("--weight", default="1")
    az.add_argument("--squares", action="store_true")
    az.add_argument("--format", choices=["csv", "json"], default="csv")
    az.add_argument("--out")
    common(az)
    az.set_defaults(func=cmd_analyze)
    return p


_VALUE_FLAGS = {"--interval", "--weight", "--mu", "--angles", "--curve", "--bad"}


def _join_negative_values(argv):
    """Attach values such as ``-1,1`` to their flag so argparse keeps them."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        args.func(args)
    except SatoTateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
