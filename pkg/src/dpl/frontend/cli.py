"""Command-line driver.

Exit codes: 0 success, 1 type error, 2 undefined (a primitive applied
outside its domain), 3 fuel exhausted, 4 syntax or usage error, 5 property
check failure (including internal invariant violations).
"""

from __future__ import annotations

import argparse
import sys
import threading
from typing import Optional, Sequence

from dpl.errors import FuelExhausted, InternalError, Stuck
from dpl.frontend.lexer import ParseError
from dpl.frontend.parser import SourceFile, parse, parse_term
from dpl.frontend.printer import print_term, print_trace, print_type
from dpl.machine import DEFAULT_FUEL, Machine
from dpl.syntax import Const, Rd, Real, is_closed_value, type_size, unflatten_value
from dpl.typecheck import TypeCheckError, decorate_value, infer_term, type_of_closed_value

EXIT_OK, EXIT_TYPE, EXIT_STUCK, EXIT_FUEL, EXIT_SYNTAX, EXIT_PROPERTY = range(6)


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _ArgumentParser(prog="dpl", description="Run, trace and differentiate .dpl programs.")
    sub = p.add_subparsers(dest="command", required=True)

    def program_command(name: str, help: str):
        c = sub.add_parser(name, help=help)
        c.add_argument("file", help="program file ('-' for standard input)")
        c.add_argument("--env", action="append", default=[], metavar="x=v,...",
                       help="values for free variables (reals and tuples)")
        c.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="evaluation step budget")
        return c

    program_command("check", "type-check and print the program's type")
    program_command("run", "evaluate and print the value")
    program_command("trace", "print the trace produced by symbolic evaluation")
    g = program_command("grad", "gradient of a real-valued program with respect to a variable")
    g.add_argument("--wrt", required=True, help="variable to differentiate with respect to")
    g.add_argument("--at", required=True, help="point (value of the --wrt variable)")
    f = program_command("fdcheck", "compare the reverse derivative with finite differences")
    f.add_argument("--wrt", required=True, help="variable to differentiate with respect to")
    f.add_argument("--at", required=True, help="point (value of the --wrt variable)")
    f.add_argument("--cotangent", default=None, help="output cotangent (default: all ones)")

    z = sub.add_parser("fuzz", help="run the randomised property suites")
    z.add_argument("--seeds", type=int, default=100, help="cases per suite")
    z.add_argument("--depth", type=int, default=None, help="generator depth (default: per suite)")
    z.add_argument("--seed", type=int, default=0, help="base seed")
    z.add_argument("--suite", choices=["all", "vjp", "interpolation", "adjoint"], default="all", help="which suite to run")
    z.add_argument("--jobs", type=int, default=1, help="worker processes")
    z.add_argument("--fuel", type=int, default=None, help="step budget per evaluation (default: suite budget)")
    z.add_argument("--report", default=None, help="write the per-case report to this file")
    return p


def _split_top(text: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in "<(":
            depth += 1
        elif ch in ">)":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return [p for p in (s.strip() for s in parts) if p]


def parse_value(text: str):
    try:
        v = parse_term(text)
    except ParseError as exc:
        raise UsageError(f"bad value {text!r}: {exc}") from None
    if not is_closed_value(v):
        raise UsageError(f"{text!r} is not a closed value (reals and tuples only)")
    return decorate_value(v)


def parse_env(items: Sequence[str]) -> dict:
    rho = {}
    for item in items:
        for binding in _split_top(item):
            name, sep, value = binding.partition("=")
            if not sep or not name.strip():
                raise UsageError(f"bad --env binding {binding!r}; expected x=v")
            rho[name.strip()] = parse_value(value.strip())
    return rho


def _read(path: str) -> SourceFile:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    src = parse(text)
    src.path = "<stdin>" if path == "-" else path
    return src


def _where(src: SourceFile, node) -> str:
    span = src.span_of(node) if node is not None else None
    return f"{src.path}:{span[0]}:{span[1]}" if span else f"{src.path}"


def _format(v) -> str:
    return print_term(v)


def _run_command(args) -> int:
    out = sys.stdout
    if args.command == "fuzz":
        return _fuzz(args)
    src = _read(args.file)
    rho = parse_env(args.env)
    gamma = {k: type_of_closed_value(v) for k, v in rho.items()}
    m = src.parsed
    if args.command in ("grad", "fdcheck"):
        at = parse_value(args.at)
        t = type_of_closed_value(at)
        gamma[args.wrt] = t
    try:
        ty, m = infer_term({}, gamma, m)
    except TypeCheckError as exc:
        print(f"{_where(src, exc.node)}: type error: {exc}", file=sys.stderr)
        return EXIT_TYPE

    match args.command:
        case "check":
            print(print_type(ty), file=out)
        case "run":
            print(_format(Machine(args.fuel).eval({}, rho, m)), file=out)
        case "trace":
            print(print_trace(Machine(args.fuel).sym_eval({}, rho, m)), file=out)
        case "grad":
            if not isinstance(ty, Real):
                print(f"{src.path}: type error: grad needs a real-valued program, found {print_type(ty)}",
                      file=sys.stderr)
                return EXIT_TYPE
            gamma.pop(args.wrt)
            _, g = infer_term({}, gamma, Rd(args.wrt, t, m, at, Const(1.0)))
            print(_format(Machine(args.fuel).eval({}, rho, g)), file=out)
        case "fdcheck":
            return _fdcheck(args, m, ty, t, at, rho)
    return EXIT_OK


def _fdcheck(args, m, ty, t, at, rho) -> int:
    from dpl.oracle.fd import ProbeUndefined, check_program_vjp

    if args.cotangent is None:
        w = unflatten_value(ty, [1.0] * type_size(ty))
    else:
        w = parse_value(args.cotangent)
        if type_of_closed_value(w) != ty:
            print(f"type error: cotangent has type {print_type(type_of_closed_value(w))}, "
                  f"program has type {print_type(ty)}", file=sys.stderr)
            return EXIT_TYPE
    name = f"fdcheck {args.file} wrt {args.wrt}"
    try:
        report = check_program_vjp(m, args.wrt, t, at, w, rho, name=name, fuel=args.fuel)
    except ProbeUndefined as exc:
        print(f"{name} verdict=skip ({exc})")
        return EXIT_OK
    print(report.describe())
    return EXIT_OK if report.passed else EXIT_PROPERTY


def _fuzz(args) -> int:
    from dpl.oracle.suites import SUITE_FUEL, run_suite

    names = ["vjp", "interpolation", "adjoint"] if args.suite == "all" else [args.suite]
    failed = False
    texts = []
    for name in names:
        report = run_suite(name, args.seeds, seed=args.seed, depth=args.depth,
                           fuel=args.fuel or SUITE_FUEL, jobs=args.jobs)
        counts = report.counts()
        failed |= bool(counts.get("fail") or counts.get("violation"))
        texts.append(report.text())
        print(report.summary())
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write("".join(texts))
    return EXIT_PROPERTY if failed else EXIT_OK


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"dpl: usage error: {exc}", file=sys.stderr)
        return EXIT_SYNTAX
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _run_command(args)
    except ParseError as exc:
        print(f"{getattr(args, 'file', '')}:{exc.line}:{exc.col}: syntax error: {exc.message}", file=sys.stderr)
        return EXIT_SYNTAX
    except UsageError as exc:
        print(f"dpl: {exc}", file=sys.stderr)
        return EXIT_SYNTAX
    except Stuck as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_STUCK
    except FuelExhausted as exc:
        print(f"fuel exhausted: {exc}", file=sys.stderr)
        return EXIT_FUEL
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_PROPERTY


def run_with_big_stack(fn, *args, stack_mb: int = 512):
    """Call ``fn`` in a thread with a large stack (structural passes recurse on term depth)."""
    result = []
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 200_000))
    old_size = threading.stack_size()
    threading.stack_size(stack_mb * 1024 * 1024)
    try:
        worker = threading.Thread(target=lambda: result.append(fn(*args)))
        worker.start()
        worker.join()
    finally:
        threading.stack_size(old_size)
        sys.setrecursionlimit(old_limit)
    return result[0] if result else EXIT_PROPERTY


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run_with_big_stack(cli_main, argv))


if __name__ == "__main__":
    main()
