"""Driving the semantics: exhaustive LTS construction, seeded runs, stepping.

Communications are recorded as :class:`Step` summaries whose values are
plain tokens: free names by their text, integers as ints, string literals
JSON-quoted, and bound names as ``display#id``. In a :class:`Trace` the ids
are the concrete ids of the run. In an :class:`Lts` they are the canonical
ids of the transition's target state (``display#~k`` when the name no longer
occurs there), and each transition carries the renaming of the source's
canonical bound names into the target's.
"""
from __future__ import annotations

import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, TextIO

from .ast import Identifier, IntLit, StrLit, Value, canonical_ids
from .parser import pretty
from .semantics import Communication, Realized, State, enabled, step_detail, warnings

log = logging.getLogger(__name__)

Token = str | int


class InvalidChoice(IndexError):
    """An interactive choice does not index an enabled communication."""


def token(v: Value, ids: Mapping[Identifier, str] | None = None, dead: list | None = None) -> Token:
    if isinstance(v, IntLit):
        return v.value
    if isinstance(v, StrLit):
        return json.dumps(v.value, ensure_ascii=False)
    ident = v.ident
    if ident.is_free_name:
        return ident.display
    if ids is None:
        return f"{ident.display}#{ident.id}"
    if ident in ids:
        return ids[ident]
    if dead is not None:
        if ident not in dead:
            dead.append(ident)
        return f"{ident.display}#~{dead.index(ident) + 1}"
    return f"{ident.display}#~"


def is_bound_token(tok: Token) -> bool:
    return isinstance(tok, str) and "#" in tok and not tok.startswith('"')


def is_dead_token(tok: Token) -> bool:
    return isinstance(tok, str) and "#~" in tok and not tok.startswith('"')


@dataclass(frozen=True)
class Step:
    """Summary of one communication."""

    partner: Token
    op: Token
    payload: tuple[Token, ...]
    bound: tuple[tuple[str, Token], ...]
    domain: int
    unfolded: bool

    @classmethod
    def of(cls, r: Realized, ids: Mapping[Identifier, str] | None = None) -> "Step":
        dead: list = []
        payload = tuple(token(v, ids, dead) for v in r.payload)
        bound = tuple((x.display, token(v, ids, dead)) for x, v in r.sigma)
        return cls(token(r.endpoint[0], ids, dead), token(r.endpoint[1], ids, dead), payload, bound,
                   r.domain_size, r.via_unfolding)

    def to_json(self, n: int | None = None) -> dict:
        d = {} if n is None else {"step": n}
        d.update(partner=self.partner, op=self.op, payload=list(self.payload),
                 bound={k: v for k, v in self.bound}, domain=self.domain, unfolded=self.unfolded)
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> "Step":
        return cls(d["partner"], d["op"], tuple(d["payload"]), tuple(d["bound"].items()),
                   int(d["domain"]), bool(d["unfolded"]))


@dataclass(frozen=True)
class Transition:
    src: int
    dst: int
    step: Step
    rename: tuple[tuple[str, str], ...] = ()


@dataclass
class Lts:
    states: list[State]
    transitions: list[Transition]
    initial: int = 0
    maximal: frozenset[int] = frozenset()
    truncated: bool = False
    report: str = ""
    index: dict[str, int] = field(default_factory=dict, repr=False)

    def successors(self) -> dict[int, list[Transition]]:
        out: dict[int, list[Transition]] = {i: [] for i in range(len(self.states))}
        for t in self.transitions:
            out[t.src].append(t)
        return out

    def summary(self) -> dict:
        return {"states": len(self.states), "transitions": len(self.transitions),
                "maximal": len(self.maximal), "truncated": self.truncated}

    def write_jsonl(self, fh: TextIO) -> None:
        fh.write(json.dumps(self.summary()) + "\n")
        for n, t in enumerate(self.transitions):
            d = t.step.to_json(n)
            d["from"], d["to"] = t.src, t.dst
            fh.write(json.dumps(d, ensure_ascii=False) + "\n")


def _expand(s: State) -> list[tuple[State, Step, tuple[tuple[str, str], ...]]]:
    src_tok = {x: f"{x.display}#{cx.id}" for x, cx in canonical_ids(s.term).items() if x.is_name}
    out = []
    for c in enabled(s):
        t, real = step_detail(s, c)
        tokens = dict(src_tok)
        rename = []
        for x, cx in canonical_ids(t.term).items():
            if not x.is_name:
                continue
            dst = f"{x.display}#{cx.id}"
            if x not in tokens:
                tokens[x] = f"{x.display}#+{cx.id}"
            rename.append((tokens[x], dst))
        out.append((t, Step.of(real, tokens), tuple(rename)))
    return out


def explore(initial: State, max_depth: int = 64, max_states: int = 100_000, workers: int = 1) -> Lts:
    """Breadth-first construction of the reachable LTS over canonical states.

    Level-synchronous, so the result does not depend on ``workers``. Hitting a
    bound sets ``truncated`` and explains it in ``report``.
    """
    if max_depth < 1 or max_states < 1:
        raise ValueError("bounds must be >= 1")
    lts = Lts([initial], [], index={initial.key: 0})
    expanded: set[int] = set()
    frontier = [0]
    depth = 0
    reasons = []
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while frontier:
            if depth >= max_depth:
                pending = [i for i in frontier if enabled(lts.states[i])]
                if pending:
                    lts.truncated = True
                    reasons.append(f"max_depth {max_depth} reached with {len(pending)} unexpanded states")
                    frontier = [i for i in frontier if i not in pending]
                for i in frontier:
                    expanded.add(i)
                break
            states = [lts.states[i] for i in frontier]
            results = list(pool.map(_expand, states)) if pool else [_expand(s) for s in states]
            nxt = []
            for src, succ in zip(frontier, results):
                complete = True
                for tgt, summary, rename in succ:
                    j = lts.index.get(tgt.key)
                    if j is None:
                        if len(lts.states) >= max_states:
                            complete = False
                            continue
                        j = len(lts.states)
                        lts.states.append(tgt)
                        lts.index[tgt.key] = j
                        nxt.append(j)
                    lts.transitions.append(Transition(src, j, summary, rename))
                if complete:
                    expanded.add(src)
                else:
                    lts.truncated = True
            if lts.truncated and not reasons:
                reasons.append(f"max_states {max_states} reached")
            frontier = nxt
            depth += 1
    finally:
        if pool:
            pool.shutdown()
    sources = {t.src for t in lts.transitions}
    lts.maximal = frozenset(i for i in expanded if i not in sources)
    lts.report = "; ".join(reasons) or "complete"
    if lts.truncated:
        log.warning("exploration truncated: %s", lts.report)
    return lts


# -- traces -------------------------------------------------------------------


@dataclass
class Trace:
    initial: State
    steps: list[Step]
    final: State
    stuck: bool
    seed: int | None = None
    choices: list[int] = field(default_factory=list)
    states: list[State] = field(default_factory=list, repr=False)
    realized: list[Realized] = field(default_factory=list, repr=False)
    warnings: list[str] = field(default_factory=list)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_json(n), ensure_ascii=False) + "\n" for n, s in enumerate(self.steps))

    def replay(self) -> State:
        """Fold :func:`step` over the recorded choices from ``initial``."""
        s = self.initial
        for i in self.choices:
            s = step_detail(s, enabled(s)[i])[0]
        return s


def random_run(initial: State, seed: int, max_steps: int) -> Trace:
    """Uniformly random walk from ``initial``; identical for identical seeds."""
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    rng = random.Random(seed)
    s = initial
    trace = Trace(initial, [], initial, stuck=False, seed=seed, states=[initial])
    seen_warnings: set[str] = set()
    for _ in range(max_steps):
        options = enabled(s)
        for w in warnings(s):
            if w not in seen_warnings:
                seen_warnings.add(w)
                trace.warnings.append(w)
        if not options:
            break
        i = rng.randrange(len(options))
        s, real = step_detail(s, options[i])
        trace.choices.append(i)
        trace.steps.append(Step.of(real))
        trace.realized.append(real)
        trace.states.append(s)
    trace.final = s
    trace.stuck = not enabled(s)
    return trace


# -- interactive stepping -----------------------------------------------------


def describe(c: Communication) -> str:
    payload = ", ".join(str(token(v)) for v in c.payload)
    tag = " (unfolding)" if c.via_unfolding else ""
    return f"{token(c.partner)} ! {token(c.operation)}<{payload}>  domain={c.domain_size}{tag}"


class Stepper:
    """Interactive walk over the reduction relation with unbounded undo."""

    def __init__(self, initial: State):
        self.state = initial
        self.history: list[State] = []
        self.trace = Trace(initial, [], initial, stuck=False, states=[initial])

    def options(self) -> list[Communication]:
        return enabled(self.state)

    def choose(self, index: int) -> State:
        options = self.options()
        if not 0 <= index < len(options):
            raise InvalidChoice(f"choice {index} out of range 0..{len(options) - 1}")
        new, real = step_detail(self.state, options[index])
        self.history.append(self.state)
        self.state = new
        self.trace.choices.append(index)
        self.trace.steps.append(Step.of(real))
        self.trace.realized.append(real)
        self.trace.states.append(new)
        return new

    def undo(self) -> bool:
        if not self.history:
            return False
        self.state = self.history.pop()
        for seq in (self.trace.choices, self.trace.steps, self.trace.realized, self.trace.states):
            seq.pop()
        return True

    def finish(self) -> Trace:
        self.trace.final = self.state
        self.trace.stuck = not self.options()
        return self.trace


def step_interactive(s: State) -> list[str]:
    """Numbered menu lines for the communications enabled in ``s``."""
    return [f"[{i}] {describe(c)}" for i, c in enumerate(enabled(s))]


def repl_loop(stepper: Stepper, lines: Iterable[str], out: TextIO, prompt: str = "> ") -> Trace:
    """Drive ``stepper`` from ``lines``: an index, ``u`` undo, ``p`` print, ``q`` quit."""
    it = iter(lines)

    def menu() -> None:
        opts = step_interactive(stepper.state)
        if not opts:
            out.write("no enabled communications (stuck)\n")
        for line in opts:
            out.write(line + "\n")

    menu()
    while True:
        out.write(prompt)
        try:
            raw = next(it)
        except StopIteration:
            out.write("\n")
            break
        cmd = raw.strip()
        if cmd in ("q", "quit"):
            break
        if cmd == "p":
            out.write(pretty(stepper.state.term) + "\n")
        elif cmd == "u":
            if stepper.undo():
                menu()
            else:
                out.write("nothing to undo\n")
        elif cmd.isdigit():
            try:
                stepper.choose(int(cmd))
            except InvalidChoice as e:
                out.write(f"invalid choice: {e}\n")
                continue
            menu()
        elif cmd:
            out.write(f"unrecognised input {cmd!r}; enter an index, u, p or q\n")
    return stepper.finish()
