"""Term language of the calculus and structural utilities.

Bound identifiers carry globally unique integer ids; free names are interned
by their text and get negative ids. Equality of identifiers ignores the
display text, so two terms that differ only in how binders are spelled are
equal once their ids agree (see :func:`canonicalize`).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

NAME = "name"
VARIABLE = "variable"


class ShapeError(ValueError):
    """A term constructor was given arguments violating the term grammar."""


class CaptureError(RuntimeError):
    """A substituted name would be captured by a binder inside the term."""


@dataclass(frozen=True, eq=False)
class Identifier:
    id: int
    display: str
    kind: str

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Identifier):
            return NotImplemented
        return self.id == other.id and self.kind == other.kind

    def __hash__(self) -> int:
        return self.id

    @property
    def is_name(self) -> bool:
        return self.kind == NAME

    @property
    def is_free_name(self) -> bool:
        return self.id < 0

    def __repr__(self) -> str:
        sigil = "$" if self.kind == VARIABLE else ""
        return f"{sigil}{self.display}#{self.id}"


_ids = itertools.count(1)
_free_names: dict[str, Identifier] = {}


def fresh_identifier(display: str, kind: str, ident: int | None = None) -> Identifier:
    if kind not in (NAME, VARIABLE):
        raise ValueError(f"unknown identifier kind {kind!r}")
    return Identifier(next(_ids) if ident is None else ident, display, kind)


def next_identifier() -> int:
    return next(_ids)


def name(text: str) -> Identifier:
    """The free name spelled ``text`` (interned)."""
    ident = _free_names.get(text)
    if ident is None:
        ident = Identifier(-(len(_free_names) + 1), text, NAME)
        _free_names[text] = ident
    return ident


# -- values and expressions ---------------------------------------------------


@dataclass(frozen=True)
class Name:
    ident: Identifier

    def __post_init__(self):
        if self.ident.kind != NAME:
            raise ShapeError(f"{self.ident!r} is a variable, not a name")

    def __repr__(self) -> str:
        return repr(self.ident)


@dataclass(frozen=True)
class IntLit:
    value: int

    def __repr__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class StrLit:
    value: str

    def __repr__(self) -> str:
        return json.dumps(self.value)


@dataclass(frozen=True)
class Var:
    ident: Identifier

    def __post_init__(self):
        if self.ident.kind != VARIABLE:
            raise ShapeError(f"{self.ident!r} is a name, not a variable")

    def __repr__(self) -> str:
        return repr(self.ident)


Value = Union[Name, IntLit, StrLit]
Expression = Union[Name, IntLit, StrLit, Var]
TemplateElement = Expression
VALUE_TYPES = (Name, IntLit, StrLit)


def is_value(e: Expression) -> bool:
    return isinstance(e, VALUE_TYPES)


def _expr_ids(e: Expression) -> Iterator[Identifier]:
    if isinstance(e, (Name, Var)):
        yield e.ident


@dataclass(frozen=True)
class Endpoint:
    partner: Expression
    operation: Expression

    def __iter__(self):
        yield self.partner
        yield self.operation

    @property
    def is_static(self) -> bool:
        return isinstance(self.partner, Name) and isinstance(self.operation, Name)


# -- terms --------------------------------------------------------------------


class cached_property:
    """Lock-free variant of functools.cached_property (terms are immutable)."""

    def __init__(self, func):
        self.func = func
        self.name = func.__name__
        self.__doc__ = func.__doc__

    def __get__(self, obj, cls=None):
        if obj is None:
            return self
        value = obj.__dict__[self.name] = self.func(obj)
        return value


class Term:
    """Base class of all terms. Subclasses are immutable dataclasses."""

    __slots__ = ()

    @cached_property
    def free_ids(self) -> frozenset[Identifier]:
        return frozenset(_free(self))

    @cached_property
    def binder_list(self) -> tuple[Identifier, ...]:
        return _binders(self)

    @cached_property
    def all_ids(self) -> frozenset[Identifier]:
        """Every identifier mentioned, binders included."""
        return self.free_ids | frozenset(self.binder_list)

    def __str__(self) -> str:
        from .parser import pretty

        return pretty(self)


@dataclass(frozen=True, eq=True)
class Nil(Term):
    pass


NIL = Nil()


@dataclass(frozen=True)
class Invoke(Term):
    endpoint: Endpoint
    args: tuple[Expression, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        for e in (*self.endpoint, *self.args):
            if not isinstance(e, (Name, IntLit, StrLit, Var)):
                raise ShapeError(f"invoke argument {e!r} is not an expression")


@dataclass(frozen=True)
class Receive:
    """One receive-guarded branch ``p ? o<template>. continuation``."""

    endpoint: Endpoint
    template: tuple[TemplateElement, ...] = ()
    continuation: Term = NIL

    def __post_init__(self):
        object.__setattr__(self, "template", tuple(self.template))
        if not self.endpoint.is_static:
            raise ShapeError("receive endpoints must be names")
        seen = set()
        for u in self.template:
            if isinstance(u, Var):
                if u.ident in seen:
                    raise ShapeError(f"variable {u.ident.display} repeated in template")
                seen.add(u.ident)
            elif not isinstance(u, VALUE_TYPES):
                raise ShapeError(f"template element {u!r} is not a value or variable")
        if not isinstance(self.continuation, Term):
            raise ShapeError("receive continuation must be a term")

    @property
    def variables(self) -> tuple[Identifier, ...]:
        return tuple(u.ident for u in self.template if isinstance(u, Var))


@dataclass(frozen=True)
class Choice(Term):
    branches: tuple[Receive, ...]

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.branches:
            raise ShapeError("choice needs at least one branch")
        for b in self.branches:
            if not isinstance(b, Receive):
                raise ShapeError("choice branches must be receives")


@dataclass(frozen=True)
class Parallel(Term):
    children: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ShapeError("parallel composition needs at least two children")
        for c in self.children:
            if not isinstance(c, Term):
                raise ShapeError(f"{c!r} is not a term")


@dataclass(frozen=True)
class Delim(Term):
    binders: tuple[Identifier, ...]
    body: Term

    def __post_init__(self):
        object.__setattr__(self, "binders", tuple(self.binders))
        if not self.binders:
            raise ShapeError("delimitation needs at least one binder")
        if len(set(self.binders)) != len(self.binders):
            raise ShapeError("duplicate binder in delimitation")
        if not isinstance(self.body, Term):
            raise ShapeError("delimitation body must be a term")


@dataclass(frozen=True)
class Repl(Term):
    body: Term

    def __post_init__(self):
        if not isinstance(self.body, Term):
            raise ShapeError("replication body must be a term")


def receive(endpoint: Endpoint, template: Iterable[TemplateElement] = (), continuation: Term = NIL) -> Choice:
    """A single-branch choice, i.e. a plain receive prefix."""
    return Choice((Receive(endpoint, tuple(template), continuation),))


def par(*terms: Term) -> Term:
    """Parallel composition tolerant of zero or one argument."""
    kids = [t for t in terms if not isinstance(t, Nil)]
    if not kids:
        return NIL
    if len(kids) == 1:
        return kids[0]
    return Parallel(tuple(kids))


def delim(binders: Iterable[Identifier], body: Term) -> Term:
    binders = tuple(binders)
    return Delim(binders, body) if binders else body


# -- free identifiers ---------------------------------------------------------


def _free(t: Term) -> set[Identifier]:
    if isinstance(t, Nil):
        return set()
    if isinstance(t, Invoke):
        return {e.ident for e in (*t.endpoint, *t.args) if isinstance(e, (Name, Var))}
    if isinstance(t, Choice):
        out = set()
        for b in t.branches:
            out.update(e.ident for e in (*b.endpoint, *b.template) if isinstance(e, (Name, Var)))
            out |= b.continuation.free_ids
        return out
    if isinstance(t, Parallel):
        out = set()
        for c in t.children:
            out |= c.free_ids
        return out
    if isinstance(t, Delim):
        return set(t.body.free_ids) - set(t.binders)
    if isinstance(t, Repl):
        return set(t.body.free_ids)
    raise TypeError(f"not a term: {t!r}")


def free_identifiers(t: Term) -> set[Identifier]:
    """Identifiers occurring in ``t`` outside the scope of any binder in ``t``."""
    return set(t.free_ids)


def bound_identifiers(t: Term) -> list[Identifier]:
    """All binders of ``t`` in depth-first order."""
    return list(t.binder_list)


def _binders(t: Term) -> tuple[Identifier, ...]:
    if isinstance(t, Delim):
        return t.binders + t.body.binder_list
    if isinstance(t, Parallel):
        return tuple(b for c in t.children for b in c.binder_list)
    if isinstance(t, Repl):
        return t.body.binder_list
    if isinstance(t, Choice):
        return tuple(b for r in t.branches for b in r.continuation.binder_list)
    return ()


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Parallel):
        for c in t.children:
            yield from subterms(c)
    elif isinstance(t, (Delim, Repl)):
        yield from subterms(t.body)
    elif isinstance(t, Choice):
        for b in t.branches:
            yield from subterms(b.continuation)


# -- substitution -------------------------------------------------------------


@dataclass(frozen=True)
class Substitution:
    """Finite map from variables to values. Built once by matching."""

    bindings: tuple[tuple[Identifier, Value], ...] = ()

    @classmethod
    def of(cls, mapping: Mapping[Identifier, Value]) -> "Substitution":
        return cls(tuple(mapping.items()))

    def as_dict(self) -> dict[Identifier, Value]:
        return dict(self.bindings)

    @property
    def domain(self) -> frozenset[Identifier]:
        return frozenset(k for k, _ in self.bindings)

    @property
    def domain_size(self) -> int:
        return len(self.bindings)

    def __len__(self) -> int:
        return len(self.bindings)

    def __iter__(self):
        return iter(self.bindings)


EMPTY = Substitution()


def _subst_expr(e: Expression, m: Mapping[Identifier, Value]) -> Expression:
    if isinstance(e, Var):
        return m.get(e.ident, e)
    return e


def _subst(t: Term, m: Mapping[Identifier, Value]) -> Term:
    if not (t.all_ids & m.keys()):
        return t
    if isinstance(t, Invoke):
        ep = Endpoint(_subst_expr(t.endpoint.partner, m), _subst_expr(t.endpoint.operation, m))
        return Invoke(ep, tuple(_subst_expr(e, m) for e in t.args))
    if isinstance(t, Choice):
        return Choice(tuple(
            Receive(b.endpoint, tuple(_subst_expr(u, m) for u in b.template), _subst(b.continuation, m))
            for b in t.branches
        ))
    if isinstance(t, Parallel):
        return Parallel(tuple(_subst(c, m) for c in t.children))
    if isinstance(t, Delim):
        kept = tuple(b for b in t.binders if b not in m)
        body = _subst(t.body, m)
        if kept == t.binders and body is t.body:
            return t
        return delim(kept, body)
    if isinstance(t, Repl):
        return Repl(_subst(t.body, m))
    return t


def apply_substitution(t: Term, sigma: Substitution | Mapping[Identifier, Value]) -> Term:
    """Replace every occurrence of each variable in ``sigma`` and drop its binder."""
    m = sigma.as_dict() if isinstance(sigma, Substitution) else dict(sigma)
    if not m:
        return t
    bound = set(bound_identifiers(t))
    for v in m.values():
        if isinstance(v, Name) and v.ident in bound:
            raise CaptureError(f"name {v.ident!r} is bound inside the target term")
    return _subst(t, m)


def rename(t: Term, m: Mapping[Identifier, Identifier]) -> Term:
    """Consistently rename identifiers (binders and occurrences)."""
    if not m:
        return t

    def ex(e: Expression) -> Expression:
        if isinstance(e, Name) and e.ident in m:
            return Name(m[e.ident])
        if isinstance(e, Var) and e.ident in m:
            return Var(m[e.ident])
        return e

    def go(u: Term) -> Term:
        if isinstance(u, Nil):
            return u
        if isinstance(u, Invoke):
            return Invoke(Endpoint(ex(u.endpoint.partner), ex(u.endpoint.operation)), tuple(map(ex, u.args)))
        if isinstance(u, Choice):
            return Choice(tuple(
                Receive(Endpoint(ex(b.endpoint.partner), ex(b.endpoint.operation)),
                        tuple(map(ex, b.template)), go(b.continuation))
                for b in u.branches
            ))
        if isinstance(u, Parallel):
            return Parallel(tuple(go(c) for c in u.children))
        if isinstance(u, Delim):
            return Delim(tuple(m.get(b, b) for b in u.binders), go(u.body))
        if isinstance(u, Repl):
            return Repl(go(u.body))
        raise TypeError(u)

    return go(t)


def freshen(t: Term, next_id) -> tuple[Term, dict[Identifier, Identifier]]:
    """Give every binder in ``t`` a new id drawn from ``next_id()``."""
    m = {b: Identifier(next_id(), b.display, b.kind) for b in bound_identifiers(t)}
    return rename(t, m), m


# -- normal form --------------------------------------------------------------


def _scope(binders: tuple[Identifier, ...], body: Term) -> Term:
    """Place ``binders`` over ``body`` with each scope shrunk to where it is used."""
    while isinstance(body, Delim):
        binders = binders + body.binders
        body = body.body
    live = tuple(b for b in binders if b in body.free_ids)
    if not live:
        return body
    if not isinstance(body, Parallel):
        return Delim(live, body)
    kids = body.children
    occ = {b: [i for i, c in enumerate(kids) if b in c.free_ids] for b in live}
    parent = list(range(len(kids)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    shared = [b for b in live if len(occ[b]) > 1]
    for b in shared:
        first = find(occ[b][0])
        for i in occ[b][1:]:
            parent[find(i)] = first
    pushed = [tuple(b for b in live if occ[b] == [i]) for i in range(len(kids))]
    new_kids = [_scope(pushed[i], c) if pushed[i] else c for i, c in enumerate(kids)]
    groups: dict[int, list[int]] = {}
    for b in shared:
        groups.setdefault(find(occ[b][0]), [])
    pieces: list[Term] = []
    members: dict[int, list[int]] = {}
    for i in range(len(kids)):
        r = find(i)
        if r in groups:
            members.setdefault(r, []).append(i)
        else:
            pieces.append(new_kids[i])
    for r, idx in members.items():
        bs = tuple(b for b in shared if find(occ[b][0]) == r)
        pieces.append(Delim(bs, Parallel(tuple(new_kids[i] for i in idx))))
    return _flatten(pieces)


def _flatten(kids: Iterable[Term]) -> Term:
    out: list[Term] = []
    for c in kids:
        if isinstance(c, Parallel):
            out.extend(c.children)
        elif not isinstance(c, Nil):
            out.append(c)
    return par(*out)


def _structure(t: Term) -> Term:
    done = t.__dict__.get("_struct")
    if done is not None:
        return done
    if isinstance(t, (Nil, Invoke)):
        out = t
    elif isinstance(t, Choice):
        conts = [_structure(b.continuation) for b in t.branches]
        if all(c is b.continuation for c, b in zip(conts, t.branches)):
            out = t
        else:
            out = Choice(tuple(Receive(b.endpoint, b.template, c) for b, c in zip(t.branches, conts)))
    elif isinstance(t, Repl):
        body = _structure(t.body)
        out = NIL if isinstance(body, Nil) else t if body is t.body else Repl(body)
    elif isinstance(t, Parallel):
        kids = [_structure(c) for c in t.children]
        if all(k is c and not isinstance(k, (Parallel, Nil)) for k, c in zip(kids, t.children)):
            out = t
        else:
            out = _flatten(kids)
    elif isinstance(t, Delim):
        out = _scope(t.binders, _structure(t.body))
    else:
        raise TypeError(f"not a term: {t!r}")
    t.__dict__["_struct"] = out
    out.__dict__["_struct"] = out
    return out


def _vtok(e: Expression, env: Mapping[Identifier, str]) -> str:
    if isinstance(e, (Name, Var)):
        tok = env.get(e.ident)
        if tok is not None:
            return tok
        if e.ident.is_free_name:
            return "n:" + e.ident.display
        return f"f{e.ident.kind[0]}{e.ident.id}"
    if isinstance(e, IntLit):
        return f"i:{e.value}"
    return "s:" + json.dumps(e.value)


def _sort(t: Term, env: dict[Identifier, str]) -> tuple[Term, str]:
    # Subterms not mentioning outer binders are keyed as if at the root, so
    # their key and sorted form can be cached on the object.
    if t.free_ids.isdisjoint(env):
        done = t.__dict__.get("_sorted")
        if done is None:
            done = _sort_in(t, {})
            t.__dict__["_sorted"] = done
            done[0].__dict__["_sorted"] = done
            if t.__dict__.get("_struct") is t:
                done[0].__dict__["_struct"] = done[0]
        return done
    return _sort_in(t, env)


def _sort_in(t: Term, env: dict[Identifier, str]) -> tuple[Term, str]:
    if isinstance(t, Nil):
        return t, "0"
    if isinstance(t, Invoke):
        toks = ",".join(_vtok(e, env) for e in t.args)
        return t, f"I({_vtok(t.endpoint.partner, env)},{_vtok(t.endpoint.operation, env)})<{toks}>"
    if isinstance(t, Choice):
        keyed = []
        for b in t.branches:
            cont, ck = _sort(b.continuation, env)
            toks = ",".join(_vtok(u, env) for u in b.template)
            k = f"R({_vtok(b.endpoint.partner, env)},{_vtok(b.endpoint.operation, env)})<{toks}>.{ck}"
            keyed.append((k, Receive(b.endpoint, b.template, cont)))
        keyed.sort(key=lambda kv: kv[0])
        return Choice(tuple(r for _, r in keyed)), "C[" + "+".join(k for k, _ in keyed) + "]"
    if isinstance(t, Parallel):
        keyed = sorted((_sort(c, env) for c in t.children), key=lambda tk: tk[1])
        return Parallel(tuple(c for c, _ in keyed)), "P[" + "|".join(k for _, k in keyed) + "]"
    if isinstance(t, Delim):
        best = None
        for order in _binder_orders(t, env):
            inner = dict(env)
            toks = []
            for b in order:
                tok = f"{b.kind[0]}{len(inner)}"
                inner[b] = tok
                toks.append(tok)
            body, bk = _sort(t.body, inner)
            key = "D(" + ",".join(toks) + ")" + bk
            if best is None or key < best[1]:
                best = (Delim(order, body), key)
        return best
    if isinstance(t, Repl):
        body, bk = _sort(t.body, env)
        return Repl(body), "*" + bk
    raise TypeError(f"not a term: {t!r}")


MAX_TIE_ORDERS = 720


def _binder_orders(t: Delim, env: dict[Identifier, str]) -> list[tuple[Identifier, ...]]:
    """Candidate canonical orders for the binders of one delimitation.

    Binders are ranked by the body's key with that binder marked and its
    siblings anonymous. Binders that still tie are permuted and the caller
    keeps the smallest key; past MAX_TIE_ORDERS candidates only the first
    order is tried.
    """
    if len(t.binders) == 1:
        return [t.binders]
    sig = {}
    for b in t.binders:
        inner = dict(env)
        for c in t.binders:
            inner[c] = f"{c.kind[0]}?"
        inner[b] = f"{b.kind[0]}*"
        sig[b] = (b.kind, _sort(t.body, inner)[1])
    groups: dict[tuple, list[Identifier]] = {}
    for b in t.binders:
        groups.setdefault(sig[b], []).append(b)
    ranked = [groups[k] for k in sorted(groups)]
    total = 1
    for g in ranked:
        total *= math.factorial(len(g))
    if total == 1 or total > MAX_TIE_ORDERS:
        return [tuple(b for g in ranked for b in g)]
    return [tuple(b for g in combo for b in g)
            for combo in itertools.product(*(itertools.permutations(g) for g in ranked))]


def normalize(t: Term) -> tuple[Term, str]:
    """Normal form keeping identifier ids, together with its alpha-invariant key.

    Parallel is flattened and stripped of ``0``; unused binders are dropped and
    the remaining ones pushed to the smallest subterm covering their
    occurrences; parallel children and choice branches are sorted by key.
    """
    return _sort(_structure(t), {})


def term_key(t: Term) -> str:
    return normalize(t)[1]


def canonical_ids(t: Term) -> dict[Identifier, Identifier]:
    """Binder renaming to 1..k in depth-first order."""
    return {b: Identifier(i, b.display, b.kind) for i, b in enumerate(t.binder_list, start=1)}


def renumber(t: Term) -> tuple[Term, dict[Identifier, Identifier]]:
    m = canonical_ids(t)
    return rename(t, m), m


def canonicalize(t: Term) -> Term:
    """Normal form with binders renumbered; alpha-equivalent terms coincide."""
    return renumber(normalize(t)[0])[0]


def alpha_equal(a: Term, b: Term) -> bool:
    return term_key(a) == term_key(b)
