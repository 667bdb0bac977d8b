"""Trace assertions: the ``.assert`` file format and their evaluation.

One assertion per line, ``quantifier: body``::

    all: count(op=join, domain=2) == 2
    all: never(op=start, partner=p_R)
    some: eventually(op=start, arg0=burraco)
    all: all_equal(op=start, partner=p_L|p_F, arg=0)
    all: distinct(op=start, arg=0) == 2
    all: group_size(op=start, arg=0) == 4

Quantifiers are ``all`` and ``some`` (over the maximal traces of a complete
LTS) and ``this`` (over one recorded trace). Filter keys are ``partner``,
``op``, ``domain`` and ``argN``; values may be alternatives separated by
``|``, and ``*`` matches anything. ``arg=N`` selects the payload position
for ``all_equal``, ``distinct`` and ``group_size``.

Over an LTS, values of bound names are only meaningful relative to a state,
so each transition first updates the accumulator with tokens in the source
state's ids and then renames it into the target's; a name that no longer
occurs in the target state can never be sent again and is kept only as a
count.
"""
from __future__ import annotations

import operator
import re
import sys
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .explorer import Lts, Step, Token, Trace, is_bound_token, is_dead_token

QUANTIFIERS = {"all": "all_maximal_traces", "some": "some_maximal_trace", "this": "this_trace"}
COMPARATORS = {"==": operator.eq, "!=": operator.ne, "<": operator.lt, "<=": operator.le,
               ">": operator.gt, ">=": operator.ge}
KINDS = ("count", "all_equal", "distinct", "group_size", "eventually", "never")


class AssertionSyntaxError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CheckUnsupported(ValueError):
    """Trace quantifiers over a cyclic LTS, or an LTS quantifier over a trace."""


class TruncatedInput(ValueError):
    """Trace quantifiers need a complete (non-truncated) LTS."""


@dataclass(frozen=True)
class Filter:
    partner: frozenset[str] | None = None
    op: frozenset[str] | None = None
    args: tuple[tuple[int, frozenset[str]], ...] = ()
    domain: int | None = None

    def matches(self, s: Step) -> bool:
        if self.domain is not None and s.domain != self.domain:
            return False
        if self.partner is not None and str(s.partner) not in self.partner:
            return False
        if self.op is not None and str(s.op) not in self.op:
            return False
        for i, allowed in self.args:
            if i >= len(s.payload) or str(s.payload[i]) not in allowed:
                return False
        return True

    def __str__(self) -> str:
        parts = []
        if self.partner is not None:
            parts.append("partner=" + "|".join(sorted(self.partner)))
        if self.op is not None:
            parts.append("op=" + "|".join(sorted(self.op)))
        for i, allowed in self.args:
            parts.append(f"arg{i}=" + "|".join(sorted(allowed)))
        if self.domain is not None:
            parts.append(f"domain={self.domain}")
        return ", ".join(parts)


@dataclass(frozen=True)
class Assertion:
    quantifier: str
    kind: str
    filter: Filter = Filter()
    cmp: str | None = None
    n: int | None = None
    arg: int | None = None

    def __post_init__(self):
        if self.quantifier not in QUANTIFIERS:
            raise ValueError(f"unknown quantifier {self.quantifier!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown assertion {self.kind!r}")
        if self.kind in ("count", "distinct", "group_size") and (self.cmp not in COMPARATORS or self.n is None):
            raise ValueError(f"{self.kind} needs a comparison")
        if self.kind in ("all_equal", "distinct", "group_size") and (self.arg is None or self.arg < 0):
            raise ValueError(f"{self.kind} needs arg=N")

    def __str__(self) -> str:
        inner = str(self.filter)
        if self.arg is not None:
            inner = f"{inner}, arg={self.arg}" if inner else f"arg={self.arg}"
        text = f"{self.quantifier}: {self.kind}({inner})"
        if self.cmp is not None:
            text += f" {self.cmp} {self.n}"
        return text

    # accumulator protocol; accumulators are hashable
    def init(self):
        if self.kind == "count":
            return 0
        if self.kind in ("eventually", "never"):
            return False
        if self.kind == "all_equal":
            return None
        if self.kind == "distinct":
            return (0, frozenset())
        return (False, ())

    def rename(self, acc, m: dict[str, str] | None):
        if m is None or self.kind in ("count", "eventually", "never"):
            return acc
        if self.kind == "all_equal":
            if isinstance(acc, tuple) and acc[0] == "val" and is_bound_token(acc[1]):
                return ("val", m.get(acc[1], "#~"))
            return acc
        if self.kind == "distinct":
            dead, live = acc
            kept = set()
            for t in live:
                if is_bound_token(t):
                    if t in m:
                        kept.add(m[t])
                    else:
                        dead += 1
                else:
                    kept.add(t)
            return (dead, frozenset(kept))
        failed, groups = acc
        kept = []
        check = COMPARATORS[self.cmp]
        for t, k in groups:
            if is_bound_token(t) and t not in m:
                failed = failed or not check(k, self.n)
            else:
                kept.append((m.get(t, t) if is_bound_token(t) else t, k))
        return (failed, tuple(sorted(kept, key=repr)))

    def update(self, acc, s: Step):
        if not self.filter.matches(s):
            return acc
        if self.kind == "count":
            return min(acc + 1, self.n + 1)
        if self.kind in ("eventually", "never"):
            return True
        if self.arg >= len(s.payload):
            v: Token = "#~missing"
        else:
            v = s.payload[self.arg]
        if self.kind == "all_equal":
            if acc is None:
                return ("val", v)
            if acc == "fail" or acc[1] != v or is_dead_token(v):
                return "fail"
            return acc
        if self.kind == "distinct":
            dead, live = acc
            if is_dead_token(v):
                return (min(dead + 1, self.n + 1), live)
            if v in live or dead + len(live) > self.n:
                return acc
            return (dead, live | {v})
        failed, groups = acc
        if is_dead_token(v):
            return (failed or not COMPARATORS[self.cmp](1, self.n), groups)
        counts = dict(groups)
        counts[v] = counts.get(v, 0) + 1
        return (failed, tuple(sorted(counts.items(), key=repr)))

    def verdict(self, acc) -> bool:
        if self.kind == "count":
            return COMPARATORS[self.cmp](acc, self.n)
        if self.kind == "eventually":
            return acc
        if self.kind == "never":
            return not acc
        if self.kind == "all_equal":
            return acc != "fail"
        if self.kind == "distinct":
            dead, live = acc
            return COMPARATORS[self.cmp](dead + len(live), self.n)
        failed, groups = acc
        return not failed and all(COMPARATORS[self.cmp](k, self.n) for _, k in groups)


# -- parsing ------------------------------------------------------------------


_LINE_RE = re.compile(
    r"^\s*(?P<q>\w+)\s*:\s*(?P<kind>\w+)\s*\((?P<args>[^)]*)\)\s*(?:(?P<cmp>==|!=|<=|>=|<|>)\s*(?P<n>-?\d+))?\s*$"
)


def parse_assertion(text: str, line: int = 1) -> Assertion:
    m = _LINE_RE.match(text)
    if not m:
        raise AssertionSyntaxError(line, f"cannot parse {text.strip()!r}")
    q, kind = m["q"], m["kind"]
    if q not in QUANTIFIERS:
        raise AssertionSyntaxError(line, f"unknown quantifier {q!r} (use all, some or this)")
    if kind not in KINDS:
        raise AssertionSyntaxError(line, f"unknown assertion {kind!r}")
    fields: dict = {}
    args: dict[int, frozenset[str]] = {}
    arg = None
    for part in filter(None, (p.strip() for p in m["args"].split(","))):
        if "=" not in part:
            raise AssertionSyntaxError(line, f"expected key=value, found {part!r}")
        key, value = (s.strip() for s in part.split("=", 1))
        if value == "*":
            continue
        alts = frozenset(v.strip() for v in value.split("|"))
        if key in ("partner", "op"):
            fields[key] = alts
        elif key == "domain":
            try:
                fields["domain"] = int(value)
            except ValueError:
                raise AssertionSyntaxError(line, f"domain must be an integer, found {value!r}") from None
        elif key == "arg":
            if not value.isdigit():
                raise AssertionSyntaxError(line, f"arg must be a payload index, found {value!r}")
            arg = int(value)
        elif re.fullmatch(r"arg\d+", key):
            args[int(key[3:])] = alts
        else:
            raise AssertionSyntaxError(line, f"unknown filter key {key!r}")
    flt = Filter(fields.get("partner"), fields.get("op"), tuple(sorted(args.items())), fields.get("domain"))
    try:
        return Assertion(q, kind, flt, m["cmp"], int(m["n"]) if m["n"] is not None else None, arg)
    except ValueError as e:
        raise AssertionSyntaxError(line, str(e)) from None


def parse_assertions(text: str) -> list[Assertion]:
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip() if not raw.lstrip().startswith("#") else ""
        if line:
            out.append(parse_assertion(line, i))
    return out


def format_assertions(assertions: Iterable[Assertion]) -> str:
    return "".join(str(a) + "\n" for a in assertions)


# -- evaluation ---------------------------------------------------------------


@dataclass
class Verdict:
    assertion: Assertion
    passed: bool
    witness: list[Step] = field(default_factory=list)  # counterexample for all, example for some/this
    explored: int = 0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.assertion}"


@dataclass
class Report:
    verdicts: list[Verdict]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def lines(self) -> list[str]:
        return [v.line() for v in self.verdicts]


def _acyclic(lts: Lts, succ: dict) -> bool:
    color = [0] * len(lts.states)
    for root in range(len(lts.states)):
        if color[root]:
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            t = next(it, None)
            if t is None:
                color[node] = 2
                stack.pop()
            elif color[t.dst] == 1:
                return False
            elif color[t.dst] == 0:
                color[t.dst] = 1
                stack.append((t.dst, iter(succ[t.dst])))
    return True


def _search(a: Assertion, lts: Lts, succ: dict, target: bool) -> tuple[list[Step] | None, int]:
    """A maximal path whose verdict equals ``target``, or None; plus nodes visited."""
    renames = {id(t): dict(t.rename) for ts in succ.values() for t in ts}
    dead_end: set = set()
    start = (lts.initial, a.init())
    path: list = []
    stack = [(start, iter(succ[start[0]]))]
    on_path = {start}
    if not succ[start[0]]:
        return ([] if a.verdict(start[1]) == target else None), 1
    while stack:
        (state, acc), it = stack[-1]
        t = next(it, None)
        if t is None:
            dead_end.add((state, acc))
            stack.pop()
            on_path.discard((state, acc))
            if path:
                path.pop()
            continue
        nxt_acc = a.rename(a.update(acc, t.step), renames[id(t)])
        node = (t.dst, nxt_acc)
        if node in dead_end or node in on_path:
            continue
        path.append(t)
        if not succ[t.dst]:
            if a.verdict(nxt_acc) == target:
                return [p.step for p in path], len(dead_end) + len(on_path)
            dead_end.add(node)
            path.pop()
            continue
        on_path.add(node)
        stack.append((node, iter(succ[t.dst])))
    return None, len(dead_end)


def check_lts(lts: Lts, assertions: Sequence[Assertion]) -> Report:
    if lts.truncated:
        raise TruncatedInput(f"exploration was truncated ({lts.report}); raise the bounds")
    succ = lts.successors()
    if not _acyclic(lts, succ):
        raise CheckUnsupported("the LTS has a cycle; trace quantifiers need an acyclic LTS")
    verdicts = []
    for a in assertions:
        if a.quantifier == "this":
            raise CheckUnsupported(f"{a}: 'this' applies to a recorded trace, not an LTS")
        want = a.quantifier == "some"
        path, n = _search(a, lts, succ, target=want)
        passed = (path is not None) if want else (path is None)
        verdicts.append(Verdict(a, passed, path or [], n))
    return Report(verdicts)


def check_trace(trace: Trace, assertions: Sequence[Assertion]) -> Report:
    verdicts = []
    for a in assertions:
        if a.quantifier != "this":
            raise CheckUnsupported(f"{a}: '{a.quantifier}' needs an explored LTS, not a single trace")
        acc = a.init()
        for s in trace.steps:
            acc = a.update(acc, s)
        verdicts.append(Verdict(a, a.verdict(acc), list(trace.steps), 1))
    return Report(verdicts)


def check(subject: Lts | Trace, assertions: Sequence[Assertion]) -> Report:
    """Evaluate ``assertions`` over an LTS (all/some) or a trace (this)."""
    if isinstance(subject, Lts):
        return check_lts(subject, assertions)
    return check_trace(subject, assertions)


def print_report(report: Report, out=sys.stdout) -> None:
    for line in report.lines():
        out.write(line + "\n")
