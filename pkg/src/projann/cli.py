"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 input or format error,
3 resource ceiling exceeded. Data goes to files or standard output,
diagnostics to standard error. Reports are flat `key=value` lines.
"""

from __future__ import annotations

import argparse
import random
import sys
from fractions import Fraction
from typing import Dict, List, Sequence

from .algebra.matrix import ExactMatrix, exact_det
from .algebra.poly import PolyFormatError, format_poly
from .algebra.scalars import MERSENNE_61, format_rational, parse_rational
from .circuit.evaluate import ResourceLimitError, UnboundVariableError, evaluate, evaluate_mod, expand
from .circuit.ir import CircuitError, validate
from .circuit.textfmt import CircuitFormatError, format_circuit, parse_circuit
from .config import ceiling

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


class VerificationFailure(Exception):
    pass


class InputError(Exception):
    pass


# ------------------------------------------------------------------ io helpers

def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _circuit_text(c) -> str:
    """Format and re-parse before writing: every emitted circuit file must validate."""
    text = format_circuit(c)
    validate(parse_circuit(text))
    return text


def format_report(report: Dict[str, object]) -> str:
    return "".join(f"{k}={_report_value(v)}\n" for k, v in report.items())


def _report_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return format_rational(v)
    return str(v)


def _emit_report(path: str | None, report: Dict[str, object]):
    """Timing entries go to stderr only so that report files stay reproducible."""
    stable = {k: v for k, v in report.items() if not k.startswith("time_")}
    timing = {k: v for k, v in report.items() if k.startswith("time_")}
    if path:
        _write(path, format_report(stable))
    else:
        sys.stdout.write(format_report(stable))
    if timing:
        sys.stderr.write(format_report(timing))


def _report_or_stderr(path: str | None, report: Dict[str, object]):
    if path:
        _emit_report(path, report)
    else:
        sys.stderr.write(format_report(report))


def _parse_values(text: str) -> List[Fraction]:
    toks = [t for t in text.replace(",", " ").split() if t]
    try:
        return [parse_rational(t) for t in toks]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad value list {text!r}: {exc}") from None


def parse_matrix_text(text: str) -> List[List[Fraction]]:
    rows = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([parse_rational(t) for t in line.split()])
        except (ValueError, ZeroDivisionError) as exc:
            raise CircuitFormatError(no, f"bad matrix entry: {exc}") from None
        if len(rows[-1]) != len(rows[0]):
            raise CircuitFormatError(no, "rows have different lengths")
    if not rows or len(rows) != len(rows[0]):
        raise CircuitFormatError(max(1, len(rows)), "matrix must be square and nonempty")
    return rows


# ------------------------------------------------------------------ subcommands

def cmd_annihilate(args) -> int:
    from .annihilator import annihilate, parse_map
    G = parse_map(_read(args.map))
    res = annihilate(G, D=args.D, multilinear=args.multilinear, verify=args.verify,
                     build_circuit=args.out_circuit is not None, seed=args.seed)
    _write(args.out_poly, format_poly(res.A))
    if args.out_circuit:
        _write(args.out_circuit, _circuit_text(res.circuit))
    _report_or_stderr(args.report, res.report)
    return EXIT_OK


def _looks_like_circuit(text: str) -> bool:
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            return line.startswith("vars")
    return False


def cmd_det_compile(args) -> int:
    from .detcompiler import det_circuit, encoder_from_matrix
    if (args.matrix is None) == (args.encoder is None):
        raise InputError("give exactly one of --matrix or --encoder")
    text = _read(args.matrix if args.matrix is not None else args.encoder)
    M = None
    if args.encoder is not None or _looks_like_circuit(text):
        # an encoder circuit C(x, row bits, column bits)
        if args.n is None:
            raise InputError("an encoder circuit needs --n")
        enc = parse_circuit(text)
        N = args.n
    else:
        M = parse_matrix_text(text)
        N = len(M)
        if args.n is not None and args.n != N:
            raise InputError(f"--n {args.n} disagrees with the {N}x{N} matrix")
        enc = encoder_from_matrix(M)
    C = det_circuit(enc, N)
    _write(args.out, _circuit_text(C))
    report = {"N": N, "size_encoder": enc.size, "size_det_circuit": C.size, "nvars": C.nvars}
    if M is not None:
        report["det_exact"] = exact_det(ExactMatrix(M))
        value = evaluate(C, {})[0]
        report["det_circuit_value"] = value
        if value != report["det_exact"]:
            sys.stderr.write("error: compiled circuit disagrees with the exact determinant\n")
            _report_or_stderr(args.report, report)
            return EXIT_VERIFY
    _report_or_stderr(args.report, report)
    return EXIT_OK


def cmd_eval(args) -> int:
    c = parse_circuit(_read(args.circuit))
    vals = _parse_values(args.point) if args.point else []
    if len(vals) > c.nvars:
        raise InputError(f"point has {len(vals)} values, circuit has {c.nvars} variables")
    env = {k + 1: v for k, v in enumerate(vals)}
    if args.prime:
        if any(v.denominator != 1 for v in vals):
            raise InputError("modular evaluation needs integer inputs")
        out = evaluate_mod(c, {k: int(v) for k, v in env.items()}, args.prime)
    else:
        out = evaluate(c, env)
    _write(args.out, "".join(f"{format_rational(Fraction(v))}\n" for v in out))
    return EXIT_OK


def cmd_expand(args) -> int:
    c = parse_circuit(_read(args.circuit))
    polys = expand(c, max_terms=args.max_terms or ceiling())
    if args.output >= len(polys):
        raise InputError(f"circuit has {len(polys)} outputs")
    _write(args.out, format_poly(polys[args.output]))
    return EXIT_OK


def cmd_coeff(args) -> int:
    from .coeff.coefffn import coeff_fn_of_circuit
    c = parse_circuit(_read(args.circuit))
    cf = coeff_fn_of_circuit(c)
    try:
        e = [int(t) for t in args.exponent.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"bad exponent {args.exponent!r}") from None
    if len(e) != c.nvars:
        raise InputError(f"exponent has {len(e)} entries, circuit has {c.nvars} variables")
    if args.bit is None:
        value = cf.coefficient(e)
        sys.stdout.write(f"{value}\n")
    else:
        if not 0 <= args.bit < cf.bits:
            raise InputError(f"bit index must lie in 0..{cf.bits - 1}")
        sys.stdout.write(f"{cf.query(e, args.bit)}\n")
    sys.stderr.write(format_report({"b": cf.b, "d": cf.d, "peak_workspace": cf.meter.peak,
                                    "queries": cf.meter.queries}))
    return EXIT_OK


def cmd_from_coeff(args) -> int:
    from .coeff.coefffn import circuit_from_coeff_fn
    cf = parse_circuit(_read(args.cf_circuit))
    F = circuit_from_coeff_fn(cf, args.n, args.dbits, args.cbits, degree=args.degree)
    _write(args.out, _circuit_text(F))
    return EXIT_OK


def cmd_coeff_table(args) -> int:
    from .coeff.coefffn import cf_table_circuit, coeff_fn_of_circuit
    c = parse_circuit(_read(args.circuit))
    T, dbits, cbits = cf_table_circuit(coeff_fn_of_circuit(c), args.dbits, args.cbits)
    _write(args.out, _circuit_text(T))
    sys.stderr.write(format_report({"n": c.nvars, "dbits": dbits, "cbits": cbits}))
    return EXIT_OK


def cmd_qbf(args) -> int:
    from .coeff.qbf import arithmetize_qbf, evaluate_qbf, parse_qbf
    from .coeff.qbf import all_assignments
    q = parse_qbf(_read(args.formula))
    C, index = arithmetize_qbf(q)
    _write(args.out, _circuit_text(C))
    if len(q.free) + len(q.prefix) <= 16:
        for env in all_assignments(q.free):
            got = evaluate(C, {index[v]: x for v, x in env.items()})[0]
            if got != evaluate_qbf(q, env):
                sys.stderr.write(f"error: arithmetization disagrees at {env}\n")
                return EXIT_VERIFY
    report = {"variables": " ".join(f"{v}=x{i}" for v, i in index.items()),
              "size": C.size}
    if not q.free:
        report["value"] = evaluate_qbf(q)
    sys.stderr.write(format_report(report))
    return EXIT_OK


_GADGET_PARAMS = ("width", "n", "dbits", "d", "s")


def cmd_gadget(args) -> int:
    from . import gadgets as gd
    if args.params:
        for item in args.params.replace(",", " ").split():
            key, sep, val = item.partition("=")
            if not sep or key not in _GADGET_PARAMS:
                raise InputError(f"bad gadget parameter {item!r}; keys: {', '.join(_GADGET_PARAMS)}")
            try:
                setattr(args, key, int(val))
            except ValueError:
                raise InputError(f"gadget parameter {key} needs an integer") from None
    kind, w = args.kind.lower(), args.width
    if kind in ("eq", "gt", "lt", "inc") and w is None:
        raise InputError(f"{kind} needs a width")
    if kind == "eq":
        C = gd.build_EQ(w)
    elif kind == "gt":
        C = gd.build_GT(w)
    elif kind == "lt":
        C = gd.build_LT(w)
    elif kind == "inc":
        C = gd.build_INC(w)
    elif kind == "mon":
        C = gd.build_mon(args.n, args.dbits)
    elif kind == "check":
        C = gd.build_check(args.n, args.dbits, args.d)
    else:
        C = gd.build_universal(args.n, args.d, args.s).circuit
    _write(args.out, _circuit_text(C))
    return EXIT_OK


def cmd_equation(args) -> int:
    from .annihilator import build_equation
    res = build_equation(args.n, args.d, args.s, free=args.free, seed=args.seed,
                         build_circuit=args.out_circuit is not None)
    _write(args.out_poly, format_poly(res.A))
    rng = random.Random(args.seed)
    for _ in range(args.check):
        vals = [rng.randint(-5, 5) for _ in res.free_params]
        if res.A.evaluate(res.instance_vector(vals)) != 0:
            sys.stderr.write(f"error: equation is nonzero on instance {vals}\n")
            return EXIT_VERIFY
    report = dict(res.report)
    report["instances_checked"] = args.check
    report["free_param_ids"] = " ".join(map(str, res.free_params))
    _report_or_stderr(args.report, report)
    return EXIT_OK


def cmd_abp_eval(args) -> int:
    from .detcompiler import abp_file_path_sum, parse_abp
    A, labels = parse_abp(_read(args.abp))
    vals = _parse_values(args.point) if args.point else []
    if len(vals) != labels.nvars:
        raise InputError(f"point has {len(vals)} values, ABP has {labels.nvars} variables")
    value = abp_file_path_sum(A, labels, vals)
    _write(args.out, f"{format_rational(Fraction(value))}\n")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest
    failures = run_selftest(sys.stderr if args.verbose else None)
    for name in failures:
        sys.stderr.write(f"FAIL {name}\n")
    sys.stdout.write(f"selftest failures={len(failures)}\n")
    return EXIT_OK if not failures else EXIT_VERIFY


# ------------------------------------------------------------------ parser

def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="projann", description="Annihilators, determinant circuits with "
                "projection gates, and coefficient-function conversions.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="seed for every random choice (default 0)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)
    sub.add_parser = add_parser

    s = sub.add_parser("annihilate", help="annihilator of an explicit map")
    s.add_argument("--map", required=True, help="map file: encoder circuit plus assignments")
    s.add_argument("--D", type=_positive, help="degree parameter override")
    s.add_argument("--multilinear", action="store_true", help="search for a multilinear A (D=2)")
    s.add_argument("--verify", choices=["symbolic", "random", "both", "none"],
                   default="symbolic", help="how to check A(G) = 0")
    s.add_argument("--out-poly", help="polynomial file for A (default stdout)")
    s.add_argument("--out-circuit", help="write the projection circuit for det(M~)")
    s.add_argument("--report", help="key=value report file")
    s.set_defaults(func=cmd_annihilate)

    s = sub.add_parser("det-compile", help="projection circuit for a succinct determinant")
    s.add_argument("--matrix", help="encoder circuit C(x, row bits, column bits), "
                   "or a numeric matrix with one row per line")
    s.add_argument("--encoder", help="encoder circuit file (same as a circuit --matrix)")
    s.add_argument("--n", type=_positive, help="matrix dimension (required for encoders)")
    s.add_argument("--out", help="output circuit file (default stdout)")
    s.add_argument("--report", help="key=value report file")
    s.set_defaults(func=cmd_det_compile)

    s = sub.add_parser("eval", help="evaluate a circuit at a point")
    s.add_argument("--circuit", required=True)
    s.add_argument("--point", default="", help="comma-separated values for x1, x2, ...")
    s.add_argument("--prime", type=_positive, help="evaluate modulo this prime")
    s.add_argument("--out", help="output file (default stdout)")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("expand", help="expand a circuit output into a polynomial file")
    s.add_argument("--circuit", required=True)
    s.add_argument("--output", type=_nonneg, default=0, help="output index (default 0)")
    s.add_argument("--max-terms", type=_positive, help="term ceiling (default from environment)")
    s.add_argument("--out", help="polynomial file (default stdout)")
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("coeff", help="query the coefficient function of a circuit")
    s.add_argument("--circuit", required=True)
    s.add_argument("--exponent", required=True, help="comma-separated exponent vector")
    s.add_argument("--bit", type=_nonneg, help="bit index (0 = sign); omit for the whole value")
    s.set_defaults(func=cmd_coeff)

    s = sub.add_parser("coeff-table", help="tabulate a coefficient function as a circuit")
    s.add_argument("--circuit", required=True)
    s.add_argument("--dbits", type=_positive, help="bits per exponent")
    s.add_argument("--cbits", type=_positive, help="bits of the coefficient bit index")
    s.add_argument("--out", help="output circuit file (default stdout)")
    s.set_defaults(func=cmd_coeff_table)

    s = sub.add_parser("from-coeff", help="rebuild a polynomial from a coefficient-function circuit")
    s.add_argument("--cf-circuit", required=True, help="circuit over (y bits, i bits)")
    s.add_argument("--n", type=_positive, required=True, help="number of polynomial variables")
    s.add_argument("--dbits", type=_positive, required=True, help="bits per exponent")
    s.add_argument("--cbits", type=_positive, required=True, help="bits of the bit index")
    s.add_argument("--degree", type=_nonneg, help="optional total degree bound")
    s.add_argument("--out", help="output circuit file (default stdout)")
    s.set_defaults(func=cmd_from_coeff)

    s = sub.add_parser("qbf", help="arithmetize a quantified Boolean formula")
    s.add_argument("--formula", required=True)
    s.add_argument("--out", help="output circuit file (default stdout)")
    s.set_defaults(func=cmd_qbf)

    s = sub.add_parser("gadget", help="emit a Boolean or monomial gadget circuit")
    s.add_argument("--kind", "--name", dest="kind", required=True, type=str.lower,
                   choices=["eq", "gt", "lt", "inc", "mon", "check", "universal"])
    s.add_argument("--params", help="comma-separated key=value list, e.g. width=3")
    s.add_argument("--width", type=_positive, help="bit width (EQ, GT, LT, INC)")
    s.add_argument("--n", type=_positive, default=1, help="variables (mon, check, universal)")
    s.add_argument("--dbits", type=_positive, default=1, help="exponent bits (mon, check)")
    s.add_argument("--d", type=_nonneg, default=1, help="degree (check, universal)")
    s.add_argument("--s", type=_positive, default=2, help="size (universal)")
    s.add_argument("--out", help="output circuit file (default stdout)")
    s.set_defaults(func=cmd_gadget)

    s = sub.add_parser("equation", help="multilinear equation for a restricted universal template")
    s.add_argument("--n", type=_positive, default=2)
    s.add_argument("--d", type=_positive, default=2)
    s.add_argument("--s", type=_positive, default=2)
    s.add_argument("--free", type=_positive, default=2, help="parameters left free")
    s.add_argument("--check", type=_nonneg, default=20, help="random instances to check")
    s.add_argument("--out-poly", help="polynomial file (default stdout)")
    s.add_argument("--out-circuit", help="also build the determinant circuit")
    s.add_argument("--report", help="key=value report file")
    s.set_defaults(func=cmd_equation)

    s = sub.add_parser("abp-eval", help="path sum of an ABP file at a point")
    s.add_argument("--abp", required=True)
    s.add_argument("--point", default="", help="comma-separated values")
    s.add_argument("--out", help="output file (default stdout)")
    s.set_defaults(func=cmd_abp_eval)

    s = sub.add_parser("selftest", help="run the built-in example suite")
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(func=cmd_selftest)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    from .annihilator import AnnihilatorError
    from .coeff.qbf import QBFError
    from .coeff.streaming import MagnitudeBoundError
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (CircuitFormatError, PolyFormatError, QBFError, InputError, CircuitError,
            UnboundVariableError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (ResourceLimitError, MemoryError) as exc:
        sys.stderr.write(f"error: resource ceiling: {exc}\n")
        return EXIT_RESOURCE
    except (AnnihilatorError, VerificationFailure, MagnitudeBoundError) as exc:
        sys.stderr.write(f"error: verification failed: {exc}\n")
        return EXIT_VERIFY
    except (ValueError, ZeroDivisionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


def main(argv: Sequence[str] | None = None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
