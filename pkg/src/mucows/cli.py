"""Command-line front end: ``mucows <command> ...``.

Exit status: 0 success, 1 an assertion failed, 2 bad input or usage.
Data goes to stdout (or ``--out``), diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .assertions import AssertionSyntaxError, CheckUnsupported, Report, TruncatedInput, check, format_assertions, parse_assertions
from .ast import canonicalize
from .explorer import Stepper, explore, random_run, repl_loop
from .parser import ParseError, SourceUnit, parse, pretty
from .scenario import ScenarioSpec, SpecInvalid, parse_players, reference_assertions, render
from .semantics import State

DEFAULT_MAX_STEPS = 1000
DEFAULT_MAX_DEPTH = 64
DEFAULT_MAX_STATES = 100_000


class UsageError(Exception):
    pass


def _count(minimum: int):
    def conv(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {v}")
        return v
    return conv


def _seed(text: str) -> int:
    v = _count(0)(text)
    if v >= 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mucows", description="Interpreter and state-space explorer for muCOWS.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a file and print the canonical main term")
    p.add_argument("file")
    p = sub.add_parser("fmt", help="pretty-print a source file")
    p.add_argument("file")
    p.add_argument("--out")

    p = sub.add_parser("run", help="seeded random run; writes the trace as JSON lines")
    p.add_argument("file")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--max-steps", type=_count(0), default=DEFAULT_MAX_STEPS)
    p.add_argument("--out")

    p = sub.add_parser("explore", help="exhaustive exploration; writes the LTS as JSON lines")
    p.add_argument("file")
    p.add_argument("--max-depth", type=_count(1), default=DEFAULT_MAX_DEPTH)
    p.add_argument("--max-states", type=_count(1), default=DEFAULT_MAX_STATES)
    p.add_argument("--out")

    p = sub.add_parser("step", help="interactive stepping (reads commands from stdin)")
    p.add_argument("file")
    p.add_argument("--out", help="write the resulting trace here")

    p = sub.add_parser("scenario", help="generate the table-manager scenario and its assertions")
    p.add_argument("table_size", type=_count(2))
    p.add_argument("players", help="comma-separated partner:game pairs")
    p.add_argument("--out", help="path prefix; writes PREFIX.cows and PREFIX.assert")

    p = sub.add_parser("check", help="check assertions over the LTS (all/some) or a seeded run (this)")
    p.add_argument("file")
    p.add_argument("assert_file")
    p.add_argument("--max-depth", type=_count(1), default=DEFAULT_MAX_DEPTH)
    p.add_argument("--max-states", type=_count(1), default=DEFAULT_MAX_STATES)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--max-steps", type=_count(0), default=DEFAULT_MAX_STEPS)
    p.add_argument("--json", action="store_true", help="machine-readable verdicts")
    return ap


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}") from None


def _load(path: str) -> SourceUnit:
    text = _read(path)
    try:
        return parse(text)
    except ParseError as e:
        raise UsageError(f"{path}:{e}") from None


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_parse(a) -> int:
    _write(None, pretty(canonicalize(_load(a.file).main)) + "\n")
    return 0


def cmd_fmt(a) -> int:
    _write(a.out, pretty(_load(a.file)) + "\n")
    return 0


def cmd_run(a) -> int:
    trace = random_run(State.initial(_load(a.file).main), a.seed, a.max_steps)
    _write(a.out, trace.to_jsonl())
    for w in trace.warnings:
        print(f"warning: {w}", file=sys.stderr)
    status = "stuck" if trace.stuck else f"stopped after {len(trace.steps)} steps"
    print(f"{len(trace.steps)} steps, {status}; final state:\n{pretty(trace.final.term)}", file=sys.stderr)
    return 0


def cmd_explore(a) -> int:
    lts = explore(State.initial(_load(a.file).main), a.max_depth, a.max_states)
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            lts.write_jsonl(fh)
    print(json.dumps(lts.summary()))
    if lts.truncated:
        print(f"warning: {lts.report}", file=sys.stderr)
    return 0


def cmd_step(a) -> int:
    stepper = Stepper(State.initial(_load(a.file).main))
    interactive = sys.stdin.isatty()
    trace = repl_loop(stepper, sys.stdin, sys.stdout, prompt="> " if interactive else "")
    if a.out:
        Path(a.out).write_text(trace.to_jsonl(), encoding="utf-8")
    return 0


def cmd_scenario(a) -> int:
    try:
        spec = ScenarioSpec(a.table_size, parse_players(a.players))
        source = render(spec)
        asserts = format_assertions(reference_assertions(spec))
    except SpecInvalid as e:
        raise UsageError(str(e)) from None
    if a.out:
        Path(a.out + ".cows").write_text(source, encoding="utf-8")
        Path(a.out + ".assert").write_text(asserts, encoding="utf-8")
    else:
        sys.stdout.write(source)
    return 0


def _emit(report: Report, as_json: bool) -> None:
    for v in report.verdicts:
        if as_json:
            print(json.dumps({"assertion": str(v.assertion), "passed": v.passed,
                              "trace": [s.to_json(n) for n, s in enumerate(v.witness)] if not v.passed else []}))
            continue
        print(v.line())
        if not v.passed and v.witness:
            for n, s in enumerate(v.witness):
                print(json.dumps(s.to_json(n), ensure_ascii=False))


def cmd_check(a) -> int:
    unit = _load(a.file)
    try:
        assertions = parse_assertions(_read(a.assert_file))
    except AssertionSyntaxError as e:
        raise UsageError(f"{a.assert_file}: {e}") from None
    initial = State.initial(unit.main)
    over_lts = [x for x in assertions if x.quantifier != "this"]
    over_run = [x for x in assertions if x.quantifier == "this"]
    verdicts = []
    try:
        if over_lts:
            lts = explore(initial, a.max_depth, a.max_states)
            verdicts += check(lts, over_lts).verdicts
        if over_run:
            verdicts += check(random_run(initial, a.seed, a.max_steps), over_run).verdicts
    except (TruncatedInput, CheckUnsupported) as e:
        raise UsageError(str(e)) from None
    order = {id(x): i for i, x in enumerate(assertions)}
    report = Report(sorted(verdicts, key=lambda v: order[id(v.assertion)]))
    _emit(report, a.json)
    return 0 if report.passed else 1


COMMANDS = {"parse": cmd_parse, "fmt": cmd_fmt, "run": cmd_run, "explore": cmd_explore,
            "step": cmd_step, "scenario": cmd_scenario, "check": cmd_check}


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[a.command](a)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
