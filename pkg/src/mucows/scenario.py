"""The table-manager case study as a parameterized scenario.

A replicated manager collects ``table_size`` join requests that agree on the
game (the shared ``$game`` variable is the correlation datum), then creates a
fresh table identifier and sends it to every collected player. Each player
sends one join request and waits for its start message.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

from .assertions import Assertion, Filter
from .parser import SourceUnit, parse

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


class SpecInvalid(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    table_size: int = 4
    players: tuple[tuple[str, str], ...] = ()
    manager_partner: str = "manager"
    join_op: str = "join"
    start_op: str = "start"
    allow_duplicates: bool = False

    def __post_init__(self):
        object.__setattr__(self, "players", tuple((str(p), str(g)) for p, g in self.players))

    def validate(self) -> None:
        if not isinstance(self.table_size, int) or self.table_size < 2:
            raise SpecInvalid(f"table_size must be an integer >= 2, got {self.table_size!r}")
        texts = [self.manager_partner, self.join_op, self.start_op]
        for p, g in self.players:
            texts += [p, g]
        for t in texts:
            if not _IDENT.match(t) or t == "let":
                raise SpecInvalid(f"{t!r} is not a valid name")
        partners = [p for p, _ in self.players]
        if self.manager_partner in partners:
            raise SpecInvalid("a player cannot use the manager's partner name")
        if not self.allow_duplicates:
            dup = [p for p, n in Counter(partners).items() if n > 1]
            if dup:
                raise SpecInvalid(f"partner names must be distinct, repeated: {', '.join(dup)}")

    def games(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for p, g in self.players:
            out.setdefault(g, []).append(p)
        return out


def parse_players(text: str) -> tuple[tuple[str, str], ...]:
    """``p_L:burraco,p_R:canasta`` -> pairs."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        if item.count(":") != 1:
            raise SpecInvalid(f"expected partner:game, found {item!r}")
        p, g = (s.strip() for s in item.split(":"))
        out.append((p, g))
    return tuple(out)


def manager_source(spec: ScenarioSpec) -> str:
    n = spec.table_size
    vars_ = ", ".join(["$game"] + [f"$player{i}" for i in range(1, n + 1)])
    lines = [f"*[{vars_}]"]
    for i in range(1, n + 1):
        lines.append(f"  {spec.manager_partner} ? {spec.join_op}<$game, $player{i}>.")
    starts = "\n   | ".join(f"$player{i} ! {spec.start_op}<tableId>" for i in range(1, n + 1))
    lines.append(f"  [tableId] ( {starts} )")
    return "\n".join(lines)


def player_source(spec: ScenarioSpec, partner: str, game: str) -> str:
    return f"{spec.manager_partner} ! {spec.join_op}<{game}, {partner}> | [$id] {partner} ? {spec.start_op}<$id>"


def render(spec: ScenarioSpec) -> str:
    """``.cows`` source text for ``spec``."""
    spec.validate()
    out = [f"// table manager scenario: table size {spec.table_size}, {len(spec.players)} players", ""]
    out.append("let TableManagerProcess =\n" + manager_source(spec))
    out.append("")
    names = []
    for idx, (p, g) in enumerate(spec.players):
        d = f"Player_{p}" if not spec.allow_duplicates else f"Player_{p}_{idx}"
        names.append(d)
        out.append(f"let {d} = {player_source(spec, p, g)}")
    out.append("")
    out.append(" | ".join(names + ["TableManagerProcess"]))
    return "\n".join(out) + "\n"


def generate(spec: ScenarioSpec) -> SourceUnit:
    return parse(render(spec))


def reference_assertions(spec: ScenarioSpec) -> list[Assertion]:
    """Properties every maximal trace of ``spec`` should satisfy.

    For a game with k players: ceil(k/T) instances are created (joins with a
    two-variable substitution), the rest join existing instances, floor(k/T)
    tables are completed with T start messages each carrying one fresh
    identifier. Nothing is emitted in duplicate mode, where a player may be
    seated twice at one table.
    """
    spec.validate()
    if spec.allow_duplicates or not spec.players:
        return []
    T = spec.table_size
    games = spec.games()
    mgr, join, start = frozenset({spec.manager_partner}), frozenset({spec.join_op}), frozenset({spec.start_op})
    created = sum(math.ceil(len(ps) / T) for ps in games.values())
    joined = sum(len(ps) - math.ceil(len(ps) / T) for ps in games.values())
    tables = sum(len(ps) // T for ps in games.values())
    out = [
        Assertion("all", "count", Filter(partner=mgr, op=join, domain=2), "==", created),
        Assertion("all", "count", Filter(partner=mgr, op=join, domain=1), "==", joined),
        Assertion("all", "count", Filter(op=start), "==", T * tables),
        Assertion("all", "distinct", Filter(op=start), "==", tables, arg=0),
        Assertion("all", "group_size", Filter(op=start), "==", T, arg=0),
    ]
    for g, ps in games.items():
        who = frozenset(ps)
        if len(ps) < T:
            out.append(Assertion("all", "never", Filter(partner=who, op=start)))
        else:
            out.append(Assertion("all", "count", Filter(partner=who, op=start), "==", T * (len(ps) // T)))
        if len(ps) == T:
            out.append(Assertion("all", "all_equal", Filter(partner=who, op=start), arg=0))
    return out


NAMED_PLAYERS = (("p_L", "burraco"), ("p_R", "canasta"), ("p_F", "burraco"))


def case_study_spec(extra_burraco: int = 0) -> ScenarioSpec:
    """The three named players, plus ``extra_burraco`` anonymous burraco players."""
    extra = tuple((f"p_{i + 1}", "burraco") for i in range(extra_burraco))
    return ScenarioSpec(4, NAMED_PLAYERS + extra)
