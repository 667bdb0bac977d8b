import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mucows.ast import (
    NAME,
    NIL,
    VARIABLE,
    CaptureError,
    Choice,
    Delim,
    Endpoint,
    IntLit,
    Invoke,
    Name,
    Parallel,
    Receive,
    Repl,
    ShapeError,
    Substitution,
    Var,
    alpha_equal,
    apply_substitution,
    canonicalize,
    fresh_identifier,
    free_identifiers,
    name,
    receive,
)
from mucows.parser import parse_term, pretty
from mucows.scenario import generate, case_study_spec

from oracles import all_identifiers, alpha_variant, naive_free, random_term

seeds = st.integers(min_value=0, max_value=10 ** 6)


def n(text):
    return Name(name(text))


def test_free_identifiers_trivial():
    assert free_identifiers(NIL) == set()
    x = fresh_identifier("x", VARIABLE)
    t = Delim((x,), receive(Endpoint(n("manager"), n("join")), (Var(x),)))
    assert free_identifiers(t) == {name("manager"), name("join")}


def test_free_identifiers_of_case_study():
    main = generate(case_study_spec()).main
    expected = {name(s) for s in ["manager", "join", "start", "burraco", "canasta", "p_L", "p_R", "p_F"]}
    assert naive_free(main) == expected
    assert free_identifiers(main) == expected


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_free_identifiers_agree_with_naive_collector(seed):
    t = random_term(seed)
    assert free_identifiers(t) == naive_free(t)


def test_canonicalize_unit_and_commutativity():
    s = parse_term("p ! o<1> | [$x] a ? b<$x>. $x ! c<>")
    assert canonicalize(Parallel((NIL, s))) == canonicalize(s)
    a, b = parse_term("a ! b<>"), parse_term("[n] n ! c<n>")
    assert canonicalize(Parallel((a, b))) == canonicalize(Parallel((b, a)))


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_canonicalize_idempotent(seed):
    c = canonicalize(random_term(seed))
    assert canonicalize(c) == c


def test_two_hundred_alpha_variants():
    for seed in range(200):
        t = random_term(seed)
        v = alpha_variant(t, random.Random(seed))
        assert canonicalize(v) == canonicalize(t), pretty(t)


def test_symmetric_binders_canonical():
    # the two children tie without binder identities; ordering must not leak in
    a = parse_term("[x, y, z] (x ! a<y> | y ! a<z>)")
    b = parse_term("[z, y, x] (y ! a<z> | x ! a<y>)")
    c = parse_term("[u, v, w] (v ! a<w> | u ! a<v>)")
    assert canonicalize(a) == canonicalize(b) == canonicalize(c)
    assert not alpha_equal(a, parse_term("[x, y, z] (x ! a<y> | z ! a<y>)"))


def test_alpha_inequivalent_terms_differ():
    assert not alpha_equal(parse_term("[n] (n ! a<> | n ! a<>)"), parse_term("[n, m] (n ! a<> | m ! a<>)"))
    assert not alpha_equal(parse_term("[$x] p ? o<$x>. $x ! a<>"), parse_term("[$x] p ? o<$x>. a ! a<>"))


def test_apply_substitution_partner():
    x, tid = fresh_identifier("x", VARIABLE), fresh_identifier("tid", NAME)
    t = Invoke(Endpoint(Var(x), n("start")), (Name(tid),))
    out = apply_substitution(t, Substitution(((x, n("p_F")),)))
    assert out == Invoke(Endpoint(n("p_F"), n("start")), (Name(tid),))
    assert apply_substitution(t, Substitution()) is t


def test_apply_substitution_first_instance():
    unit = generate(case_study_spec())
    tmp = unit.definition("TableManagerProcess")
    body = tmp.body
    assert isinstance(tmp, Repl) and isinstance(body, Delim)
    game, p1 = body.binders[0], body.binders[1]
    first = body.body.branches[0]
    inst = Delim(tuple(b for b in body.binders if b not in (game, p1)), first.continuation)
    out = apply_substitution(inst, Substitution(((game, n("burraco")), (p1, n("p_L")))))
    assert pretty(out) == (
        "[$player2, $player3, $player4] manager ? join<burraco, $player2>. manager ? join<burraco, $player3>. "
        "manager ? join<burraco, $player4>. [tableId] (p_L ! start<tableId> | $player2 ! start<tableId> "
        "| $player3 ! start<tableId> | $player4 ! start<tableId>)"
    )
    assert game not in all_identifiers(out) and p1 not in all_identifiers(out)


def test_apply_substitution_strips_binders_and_occurrences():
    t = parse_term("[$x, $y] a ? b<$x>. ($x ! c<$y> | [$z] e ? d<$z, $x>)")
    x = t.binders[0]
    out = apply_substitution(t, {x: n("q")})
    assert x not in all_identifiers(out)
    assert naive_free(out) == naive_free(t) | {name("q")}


def test_capture_is_detected():
    t = parse_term("[$x] [m] $x ! a<m>")
    x, m = t.binders[0], t.body.binders[0]
    with pytest.raises(CaptureError):
        apply_substitution(t, {x: Name(m)})


@settings(max_examples=200, deadline=None)
@given(seeds, st.sampled_from(["p_F", "burraco", "fresh_v"]))
def test_substitution_free_identifier_law(seed, value):
    t = random_term(seed)
    vars_ = sorted((b for b in all_identifiers(t) if b.kind == VARIABLE), key=lambda i: i.id)
    if not vars_:
        return
    x = vars_[0]
    used = x in all_identifiers(t, binders=False)
    out = apply_substitution(t, {x: n(value)})
    assert x not in all_identifiers(out)
    assert naive_free(out) == naive_free(t) | ({name(value)} if used else set())


def test_shape_violations():
    x = fresh_identifier("x", VARIABLE)
    m = fresh_identifier("m", NAME)
    inv = Invoke(Endpoint(n("a"), n("b")))
    with pytest.raises(ShapeError):
        Choice((inv,))  # choice must be receive-guarded
    with pytest.raises(ShapeError):
        Choice(())
    with pytest.raises(ShapeError):
        Receive(Endpoint(Var(x), n("b")))  # static endpoints only
    with pytest.raises(ShapeError):
        Receive(Endpoint(n("a"), n("b")), (Var(x), Var(x)))
    with pytest.raises(ShapeError):
        Parallel((inv,))
    with pytest.raises(ShapeError):
        Delim((), inv)
    with pytest.raises(ShapeError):
        Delim((m, m), inv)
    with pytest.raises(ShapeError):
        Name(x)
    with pytest.raises(ShapeError):
        Var(m)
    with pytest.raises(TypeError):
        Invoke(Endpoint(n("a"), n("b")), (), NIL)  # an invoke has no continuation
    with pytest.raises(ShapeError):
        Repl(inv.endpoint)


def test_identifier_equality_ignores_display():
    i = fresh_identifier("x", NAME)
    j = type(i)(i.id, "other", NAME)
    assert i == j and hash(i) == hash(j)
    assert type(i)(i.id, "x", VARIABLE) != i
    assert IntLit(1) != IntLit(2)
