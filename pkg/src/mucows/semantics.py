"""Reduction semantics: matching, enabled communications, single steps.

A state term is kept in normal form (see :func:`mucows.ast.normalize`) with
globally unique binder ids. Replication is unfolded lazily: when computing
what is enabled, each ``*s`` contributes the active activities of one
speculative copy of ``s``; the copy is only built (with fresh binder ids)
when :func:`step` commits a communication that uses it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

from .ast import (
    NIL,
    Choice,
    Delim,
    Endpoint,
    Identifier,
    Invoke,
    Name,
    Parallel,
    Receive,
    Repl,
    Substitution,
    Term,
    TemplateElement,
    Value,
    Var,
    apply_substitution,
    bound_identifiers,
    delim,
    freshen,
    is_value,
    normalize,
    renumber,
)

Position = tuple[int, ...]


class StaleCommunication(ValueError):
    """The communication was computed from a different state."""


@dataclass(frozen=True)
class State:
    term: Term
    fresh_counter: int
    key: str

    @classmethod
    def of(cls, term: Term, fresh_counter: int) -> "State":
        norm, key = normalize(term)
        return cls(norm, fresh_counter, key)

    @classmethod
    def initial(cls, term: Term) -> "State":
        """Start state for ``term``: normal form with binders numbered 1..k."""
        norm, key = normalize(term)
        norm, m = renumber(norm)
        return cls(norm, len(m) + 1, key)

    def __str__(self) -> str:
        return str(self.term)


# -- matching -----------------------------------------------------------------


def match(template: Sequence[TemplateElement], payload: Sequence[Value]) -> Substitution | None:
    """Substitution making ``template`` equal to ``payload``, or None (no match)."""
    if len(template) != len(payload):
        return None
    binds = []
    for u, v in zip(template, payload):
        if isinstance(u, Var):
            binds.append((u.ident, v))
        elif u != v:
            return None
    return Substitution(tuple(binds))


# -- active view --------------------------------------------------------------


class ReadyInvoke(NamedTuple):
    position: Position
    endpoint: tuple[Value, Value]
    payload: tuple[Value, ...]
    via_unfolding: bool


class ActiveReceive(NamedTuple):
    position: Position
    branch: int
    receive: Receive
    via_unfolding: bool


class Candidate(NamedTuple):
    position: Position
    branch: int
    sigma: Substitution
    via_unfolding: bool


@dataclass(frozen=True)
class ActiveView:
    """Unguarded activities of a state, one speculative copy per replication."""

    invokes: tuple[tuple[Position, Invoke, bool], ...]
    receives: tuple[ActiveReceive, ...]


def _walk(t: Term, path: Position, unfolded: bool) -> Iterator[tuple[Position, Term, bool]]:
    if isinstance(t, (Invoke, Choice)):
        yield path, t, unfolded
    elif isinstance(t, Parallel):
        for i, c in enumerate(t.children):
            yield from _walk(c, path + (i,), unfolded)
    elif isinstance(t, Delim):
        yield from _walk(t.body, path + (0,), unfolded)
    elif isinstance(t, Repl):
        yield from _walk(t.body, path + (0,), True)


def unfold(s: State | Term) -> ActiveView:
    term = s.term if isinstance(s, State) else s
    invokes, receives = [], []
    for path, node, unfolded in _walk(term, (), False):
        if isinstance(node, Invoke):
            invokes.append((path, node, unfolded))
        else:
            for i, b in enumerate(node.branches):
                receives.append(ActiveReceive(path, i, b, unfolded))
    return ActiveView(tuple(invokes), tuple(receives))


def ready_invokes(s: State | Term) -> list[ReadyInvoke]:
    """Active invokes whose endpoint and arguments are all values."""
    out = []
    for path, inv, unfolded in unfold(s).invokes:
        if all(is_value(e) for e in (*inv.endpoint, *inv.args)):
            out.append(ReadyInvoke(path, (inv.endpoint.partner, inv.endpoint.operation), inv.args, unfolded))
    return out


def candidate_receives(s: State | Term, endpoint: tuple[Value, Value], payload: Sequence[Value]) -> list[Candidate]:
    """Active receive branches on ``endpoint`` whose template matches ``payload``."""
    out = []
    for r in unfold(s).receives:
        ep = r.receive.endpoint
        if (ep.partner, ep.operation) != tuple(endpoint):
            continue
        sigma = match(r.receive.template, payload)
        if sigma is not None:
            out.append(Candidate(r.position, r.branch, sigma, r.via_unfolding))
    return out


def warnings(s: State | Term) -> list[str]:
    """Ready invokes that can never synchronise because an endpoint is not a name."""
    out = []
    for r in ready_invokes(s):
        if not all(isinstance(v, Name) for v in r.endpoint):
            out.append(f"invoke at {list(r.position)} has non-name endpoint {r.endpoint!r}")
    return out


# -- communications -----------------------------------------------------------


@dataclass(frozen=True)
class Communication:
    endpoint: tuple[Value, Value]
    payload: tuple[Value, ...]
    sigma: Substitution
    invoker: Position
    receiver: Position
    receiver_branch: int
    via_unfolding: bool
    domain_size: int
    source: Term | None = field(default=None, compare=False, repr=False)

    @property
    def partner(self) -> Value:
        return self.endpoint[0]

    @property
    def operation(self) -> Value:
        return self.endpoint[1]


def enabled(s: State) -> list[Communication]:
    """Communications allowed by the smallest-domain priority rule.

    Each ready invoke is paired with every matching receive whose substitution
    has minimal domain among all receives matching that invoke. Ties stay as
    separate alternatives.
    """
    view = unfold(s)
    out = []
    for path, inv, inv_unfolded in view.invokes:
        if not all(is_value(e) for e in (*inv.endpoint, *inv.args)):
            continue
        endpoint = (inv.endpoint.partner, inv.endpoint.operation)
        cands = []
        for r in view.receives:
            ep = r.receive.endpoint
            if (ep.partner, ep.operation) != endpoint:
                continue
            sigma = match(r.receive.template, inv.args)
            if sigma is not None:
                cands.append((r, sigma))
        if not cands:
            continue
        least = min(len(sigma) for _, sigma in cands)
        for r, sigma in cands:
            if len(sigma) == least:
                out.append(Communication(
                    endpoint, inv.args, sigma, path, r.position, r.branch,
                    inv_unfolded or r.via_unfolding, least, s.term,
                ))
    return out


@dataclass(frozen=True)
class Realized:
    """What a committed step actually exchanged, in the target state's ids."""

    endpoint: tuple[Value, Value]
    payload: tuple[Value, ...]
    sigma: Substitution
    domain_size: int
    via_unfolding: bool
    fresh: tuple[Identifier, ...]


def _trie(paths: dict[Position, object]) -> dict:
    root: dict = {}
    for path, leaf in paths.items():
        node = root
        for i in path:
            node = node.setdefault(i, {})
        node[None] = leaf
    return root


def step_detail(s: State, c: Communication) -> tuple[State, Realized]:
    if c.source is not s.term and c.source != s.term:
        raise StaleCommunication("communication does not belong to this state")
    counter = itertools.count(s.fresh_counter)
    view: dict[Identifier, Identifier] = {}
    produced: set[Identifier] = set()
    fresh: list[Identifier] = []

    def rewrite(t: Term, trie: dict) -> Term:
        if None in trie:
            leaf = trie[None]
            if leaf == "invoke":
                if not isinstance(t, Invoke):
                    raise StaleCommunication("invoker position does not hold an invoke")
                return NIL
            if not isinstance(t, Choice) or leaf >= len(t.branches):
                raise StaleCommunication("receiver position does not hold the receive")
            return t.branches[leaf].continuation
        if isinstance(t, Parallel):
            kids = list(t.children)
            for i, sub in trie.items():
                kids[i] = rewrite(kids[i], sub)
            return Parallel(tuple(kids))
        if isinstance(t, Delim):
            return Delim(t.binders, rewrite(t.body, trie[0]))
        if isinstance(t, Repl):
            copy, m = freshen(t.body, lambda: next(counter))
            for k, v in list(view.items()):
                if v in m:
                    view[k] = m[v]
            for k, v in m.items():
                if k not in produced:
                    view.setdefault(k, v)
            produced.update(m.values())
            fresh.extend(m.values())
            return Parallel((t, rewrite(copy, trie[0])))
        raise StaleCommunication(f"position leads into a {type(t).__name__}")

    term = rewrite(s.term, _trie({c.invoker: "invoke", c.receiver: c.receiver_branch}))

    def tr(v: Value) -> Value:
        return Name(view.get(v.ident, v.ident)) if isinstance(v, Name) else v

    payload = tuple(tr(v) for v in c.payload)
    sigma = Substitution(tuple((view.get(x, x), tr(v)) for x, v in c.sigma))
    bound = set(bound_identifiers(term))
    escaping = tuple(dict.fromkeys(v.ident for v in payload if isinstance(v, Name) and v.ident in bound))
    if escaping:
        term = _strip(term, set(escaping))
    term = delim(escaping, apply_substitution(term, sigma))
    new = State.of(term, next(counter))
    return new, Realized((tr(c.endpoint[0]), tr(c.endpoint[1])), payload, sigma, c.domain_size, c.via_unfolding, tuple(fresh))


def step(s: State, c: Communication) -> State:
    """Fire ``c`` (which must come from ``enabled(s)``) and return the successor."""
    return step_detail(s, c)[0]


def _strip(t: Term, names: set[Identifier]) -> Term:
    if not (t.all_ids & names):
        return t
    if isinstance(t, Delim):
        return delim(tuple(b for b in t.binders if b not in names), _strip(t.body, names))
    if isinstance(t, Parallel):
        return Parallel(tuple(_strip(c, names) for c in t.children))
    if isinstance(t, Repl):
        return Repl(_strip(t.body, names))
    if isinstance(t, Choice):
        return Choice(tuple(Receive(b.endpoint, b.template, _strip(b.continuation, names)) for b in t.branches))
    return t


def is_stuck(s: State) -> bool:
    return not enabled(s)


def describe_stuck(s: State) -> dict[str, list[str]]:
    """Pending activities of a state, for reporting; no verdict is implied."""
    from .parser import pretty

    view = unfold(s)
    inv = [pretty(i) for _, i, u in view.invokes if not u]
    rec = [pretty(Choice((Receive(r.receive.endpoint, r.receive.template),)))
           for r in view.receives if not r.via_unfolding]
    return {"pending_invokes": inv, "pending_receives": rec}


__all__ = [
    "ActiveReceive", "ActiveView", "Candidate", "Communication", "Endpoint", "Position", "ReadyInvoke",
    "Realized", "StaleCommunication", "State", "candidate_receives", "describe_stuck", "enabled",
    "is_stuck", "match", "ready_invokes", "step", "step_detail", "unfold", "warnings",
]
