"""Concrete syntax: ``.cows`` source files, parsing and pretty-printing.

Grammar (``$`` marks variables, bare identifiers are names)::

    unit    := ("let" IDENT "=" term)* term?
    term    := unary ("|" unary)*
    unary   := "0" | "*" unary | "[" binder ("," binder)* "]" unary
             | "(" term ")" | IDENT                     -- definition reference
             | invoke | receive ("+" receive)*
    invoke  := expr "!" expr "<" exprs? ">"
    receive := NAME "?" NAME "<" exprs? ">" ("." unary)?

A receive continuation cannot be an unparenthesised choice, so
``a?o<>. b?o<> + c?o<>`` reads as ``(a?o<>. b?o<>) + c?o<>``.
``⟨`` and ``⟩`` are accepted for ``<`` and ``>``; ``//`` starts a comment.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .ast import (
    NAME,
    NIL,
    VARIABLE,
    Choice,
    Delim,
    Endpoint,
    Expression,
    Identifier,
    IntLit,
    Invoke,
    Name,
    Nil,
    Parallel,
    Receive,
    Repl,
    StrLit,
    Term,
    Var,
    fresh_identifier,
    free_identifiers,
    freshen,
    name,
    next_identifier,
)

KEYWORDS = {"let"}
IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


class ParseError(Exception):
    """Syntax, scope or shape error at a source position (1-based)."""

    def __init__(self, line: int, column: int, message: str, kind: str = "syntax"):
        super().__init__(f"{line}:{column}: {kind} error: {message}")
        self.line = line
        self.column = column
        self.message = message
        self.kind = kind


@dataclass(frozen=True)
class SourceUnit:
    definitions: tuple[tuple[str, Term], ...]
    main: Term

    def definition(self, key: str) -> Term:
        for k, t in self.definitions:
            if k == key:
                return t
        raise KeyError(key)


# -- lexer --------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # ident, var, int, str, sym, eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<var>\$[A-Za-z_][A-Za-z0-9_']*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<int>-?[0-9]+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<sym>[!?<>⟨⟩.|+*\[\](),=;])
    """,
    re.VERBOSE,
)
_SYM_ALIASES = {"⟨": "<", "⟩": ">"}


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(line, col, f"unexpected character {source[pos]!r}", "lexical")
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "sym":
            tokens.append(Token("sym", _SYM_ALIASES.get(text, text), line, col))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.i = 0
        self.defs: dict[str, Term] = {}
        self.scope: list[dict[tuple[str, str], Identifier]] = []

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind == "sym" and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.describe(self.tok)}")
        return self.advance()

    def fail(self, message: str, tok: Token | None = None, kind: str = "syntax"):
        tok = tok or self.tok
        raise ParseError(tok.line, tok.col, message, kind)

    @staticmethod
    def describe(tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    # scoping
    def lookup(self, text: str, kind: str) -> Identifier | None:
        for frame in reversed(self.scope):
            ident = frame.get((kind, text))
            if ident is not None:
                return ident
        return None

    # grammar
    def unit(self) -> SourceUnit:
        defs: list[tuple[str, Term]] = []
        main: Term | None = None
        while self.tok.kind == "ident" and self.tok.text == "let":
            self.advance()
            tok = self.tok
            if tok.kind != "ident" or tok.text in KEYWORDS:
                self.fail(f"expected a definition name, found {self.describe(tok)}")
            self.advance()
            if tok.text in self.defs:
                self.fail(f"definition {tok.text!r} is repeated", tok, "scope")
            self.expect("=")
            body = self.term()
            if self.at(";"):
                self.advance()
            self.defs[tok.text] = body
            defs.append((tok.text, body))
        if self.tok.kind != "eof":
            main = self.term()
            if self.at(";"):
                self.advance()
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.describe(self.tok)}")
        if main is None:
            if not defs:
                self.fail("empty source: expected a term")
            main = self.defs.get("main", defs[-1][1])
        return SourceUnit(tuple(defs), main)

    def term(self) -> Term:
        kids = [self.unary(True)]
        while self.at("|"):
            self.advance()
            kids.append(self.unary(True))
        return kids[0] if len(kids) == 1 else Parallel(tuple(kids))

    def unary(self, allow_choice: bool) -> Term:
        tok = self.tok
        if tok.kind in ("int", "str") and self.peek().kind == "sym" and self.peek().text == "!":
            return self.invoke()
        if tok.kind == "int" and tok.text == "0":
            self.advance()
            return NIL
        if self.at("*"):
            self.advance()
            return Repl(self.unary(allow_choice))
        if self.at("["):
            return self.delimitation(allow_choice)
        if self.at("("):
            self.advance()
            t = self.term()
            self.expect(")")
            return t
        if tok.kind in ("ident", "var"):
            nxt = self.peek()
            if nxt.kind == "sym" and nxt.text == "!":
                return self.invoke()
            if nxt.kind == "sym" and nxt.text == "?":
                if tok.kind == "var":
                    self.fail("receive endpoints must be names, not variables", tok, "shape")
                return self.choice(allow_choice)
            if tok.kind == "ident" and tok.text not in KEYWORDS:
                self.advance()
                if tok.text not in self.defs:
                    self.fail(f"undefined process {tok.text!r}", tok, "scope")
                return freshen(self.defs[tok.text], next_identifier)[0]
        self.fail(f"expected a term, found {self.describe(tok)}")

    def delimitation(self, allow_choice: bool) -> Term:
        self.expect("[")
        binders: list[Identifier] = []
        frame: dict[tuple[str, str], Identifier] = {}
        while True:
            tok = self.tok
            if tok.kind == "var":
                key, ident = (VARIABLE, tok.text[1:]), fresh_identifier(tok.text[1:], VARIABLE)
            elif tok.kind == "ident" and tok.text not in KEYWORDS:
                key, ident = (NAME, tok.text), fresh_identifier(tok.text, NAME)
            else:
                self.fail(f"expected a name or variable to bind, found {self.describe(tok)}")
            if key in frame:
                self.fail(f"{tok.text} is bound twice in one delimitation", tok, "shape")
            self.advance()
            frame[key] = ident
            binders.append(ident)
            if not self.at(","):
                break
            self.advance()
        self.expect("]")
        self.scope.append(frame)
        try:
            body = self.unary(allow_choice)
        finally:
            self.scope.pop()
        return Delim(tuple(binders), body)

    def atom(self, what: str) -> Expression:
        tok = self.tok
        if tok.kind == "var":
            ident = self.lookup(tok.text[1:], VARIABLE)
            if ident is None:
                self.fail(f"variable {tok.text} is not bound", tok, "scope")
            self.advance()
            return Var(ident)
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.advance()
            return Name(self.lookup(tok.text, NAME) or name(tok.text))
        if what == "value" and tok.kind == "int":
            self.advance()
            return IntLit(int(tok.text))
        if what == "value" and tok.kind == "str":
            self.advance()
            return StrLit(json.loads(tok.text))
        self.fail(f"expected a {what}, found {self.describe(tok)}")

    def tuple_(self) -> tuple[list[Expression], list[Token]]:
        self.expect("<")
        items, toks = [], []
        if not self.at(">"):
            while True:
                toks.append(self.tok)
                items.append(self.atom("value"))
                if not self.at(","):
                    break
                self.advance()
        self.expect(">")
        return items, toks

    def invoke(self) -> Term:
        # literal endpoints never synchronise, but substitution can produce them
        partner = self.atom("value")
        self.expect("!")
        op = self.atom("value")
        args, _ = self.tuple_()
        return Invoke(Endpoint(partner, op), tuple(args))

    def receive(self) -> Receive:
        tok = self.tok
        if tok.kind == "var":
            self.fail("receive endpoints must be names, not variables", tok, "shape")
        partner = self.atom("name")
        self.expect("?")
        if self.tok.kind == "var":
            self.fail("receive endpoints must be names, not variables", kind="shape")
        op = self.atom("name")
        template, toks = self.tuple_()
        seen = set()
        for u, t in zip(template, toks):
            if isinstance(u, Var):
                if u.ident in seen:
                    self.fail(f"variable {t.text} repeated in one template", t, "shape")
                seen.add(u.ident)
        cont: Term = NIL
        if self.at("."):
            self.advance()
            cont = self.unary(False)
        return Receive(Endpoint(partner, op), tuple(template), cont)

    def choice(self, allow_choice: bool) -> Term:
        branches = [self.receive()]
        while allow_choice and self.at("+"):
            self.advance()
            branches.append(self.receive())
        return Choice(tuple(branches))


def parse(source: str) -> SourceUnit:
    """Parse a ``.cows`` source text. Raises :class:`ParseError`."""
    return _Parser(source).unit()


def parse_term(source: str) -> Term:
    return parse(source).main


def parse_file(path: str | Path) -> SourceUnit:
    return parse(Path(path).read_text(encoding="utf-8"))


# -- pretty printer -----------------------------------------------------------


class _Printer:
    def __init__(self, taken: set[str]):
        self.taken = taken  # free name texts, never reused for binders
        self.names: dict[Identifier, str] = {}

    def pick(self, ident: Identifier, in_scope: set[str]) -> str:
        base = ident.display if IDENT_RE.match(ident.display) and ident.display not in KEYWORDS else "n"
        text, k = base, 1
        while text in in_scope or (ident.kind == NAME and text in self.taken):
            k += 1
            text = f"{base}_{k}"
        return text

    def expr(self, e: Expression) -> str:
        if isinstance(e, Var):
            return "$" + self.names.get(e.ident, e.ident.display)
        if isinstance(e, Name):
            return self.names.get(e.ident, e.ident.display)
        if isinstance(e, IntLit):
            return str(e.value)
        return json.dumps(e.value, ensure_ascii=False)

    def tuple_(self, items) -> str:
        return "<" + ", ".join(self.expr(e) for e in items) + ">"

    def term(self, t: Term, unary: bool, allow_choice: bool, scope: frozenset) -> str:
        if isinstance(t, Nil):
            return "0"
        if isinstance(t, Invoke):
            p, o = t.endpoint
            return f"{self.expr(p)} ! {self.expr(o)}{self.tuple_(t.args)}"
        if isinstance(t, Choice):
            text = " + ".join(self.branch(b, scope) for b in t.branches)
            return f"({text})" if len(t.branches) > 1 and not allow_choice else text
        if isinstance(t, Parallel):
            text = " | ".join(self.term(c, True, True, scope) for c in t.children)
            return f"({text})" if unary else text
        if isinstance(t, Delim):
            shown = []
            inner = set(scope)
            for b in t.binders:
                text = self.pick(b, {s for k, s in inner if k == b.kind})
                self.names[b] = text
                inner.add((b.kind, text))
                shown.append(("$" if b.kind == VARIABLE else "") + text)
            body = self.term(t.body, True, allow_choice, frozenset(inner))
            return f"[{', '.join(shown)}] {body}"
        if isinstance(t, Repl):
            return "*" + self.term(t.body, True, allow_choice, scope)
        raise TypeError(f"not a term: {t!r}")

    def branch(self, b: Receive, scope: frozenset) -> str:
        p, o = b.endpoint
        head = f"{self.expr(p)} ? {self.expr(o)}{self.tuple_(b.template)}"
        if isinstance(b.continuation, Nil):
            return head
        return f"{head}. {self.term(b.continuation, True, False, scope)}"


def _free_texts(t: Term) -> set[str]:
    return {i.display for i in free_identifiers(t) if i.kind == NAME}


def pretty(u: SourceUnit | Term) -> str:
    """Render a term or source unit in the concrete syntax; reparses alpha-equally."""
    if isinstance(u, Term):
        return _Printer(_free_texts(u)).term(u, False, True, frozenset())
    lines = []
    for key, t in u.definitions:
        if key != "main":
            lines.append(f"let {key} = " + _Printer(_free_texts(t)).term(t, False, True, frozenset()))
    lines.append(pretty(u.main))
    return "\n".join(lines)


__all__ = ["ParseError", "SourceUnit", "Token", "parse", "parse_file", "parse_term", "pretty", "tokenize"]
