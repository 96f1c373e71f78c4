from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sizeterm import corpus_path, load_system
from sizeterm.parser import parse_system, parse_term
from sizeterm.rewrite import (
    BETA,
    FuelExhausted,
    TermGenerator,
    is_normal,
    loop_search,
    match,
    normalize,
    reduction_sequence,
    replace_at,
    step,
    subterm_at,
)
from sizeterm.syntax import Cons, Fun, Sort, Var, app, split_type, type_check

from oracles import peano

N, L = Sort("N"), Sort("L")


def test_match(div, corpus):
    x = Var("x")
    assert match(parse_term("s x", div, {"x": N}), parse_term("s zero", div)) == {"x": Cons("zero")}
    assert match(parse_term("s x", div, {"x": N}), Cons("zero")) is None
    qs = corpus("quicksort")
    pat = parse_term("cons l x", qs, {"l": L, "x": N})
    assert match(pat, parse_term("cons nil zero", qs)) == {"l": Cons("nil"), "x": Cons("zero")}
    assert match(x, peano(3)) == {"x": peano(3)}


def test_match_non_linear(div):
    pat = parse_term("sub x x", div, {"x": N})
    assert match(pat, parse_term("sub zero zero", div)) == {"x": Cons("zero")}
    assert match(pat, parse_term("sub zero (s zero)", div)) is None


def test_step(div):
    t = parse_term("(\\x:N. x) zero", div)
    [(r, u)] = step(div, t)
    assert r.rule is BETA and u == Cons("zero")
    both = step(div, parse_term("sub zero zero", div))
    assert len(both) == 2 and {u for _, u in both} == {Cons("zero")}
    assert {r.rule.name for r, _ in both} == {"r1", "r2"}
    assert step(div, Cons("zero")) == []


def test_redex_replay(div):
    t = parse_term("s (sub (s zero) (s zero))", div)
    for r, u in step(div, t):
        assert replace_at(t, r.position, r.contract(subterm_at(t, r.position))) == u


def test_normalize(div):
    assert normalize(div, parse_term("div (s zero) (s zero)", div)) == peano(1)
    assert normalize(div, parse_term("sub (s zero) (s zero)", div)) == peano(0)
    assert normalize(div, Cons("zero")) == Cons("zero")
    assert normalize(div, parse_term("div (s (s (s (s zero)))) (s (s zero))", div)) == peano(2)


def test_fuel(corpus):
    loop = corpus("loop")
    with pytest.raises(FuelExhausted):
        normalize(loop, parse_term("f zero", loop), fuel=50)
    with pytest.raises(FuelExhausted):
        list(reduction_sequence(loop, parse_term("f zero", loop), fuel=50))


def test_loop_search(div, corpus):
    loop = corpus("loop")
    w = loop_search(loop, parse_term("f zero", loop))
    assert w is not None and w.length == 1
    assert loop_search(div, parse_term("div (s zero) (s zero)", div), depth=20) is None
    assert loop_search(div, Cons("zero")) is None


def test_loop_search_finds_longer_cycle():
    sys_ = parse_system("""
sort N
cons zero : N
cons s : N -> N
fun sub : N(a) -> N -> N(a) { args = 1 }
fun f : N(a) -> N { args = 1 }
rule sub x zero -> x
rule sub (s x) (s y) -> sub x y
rule f (s x) -> f (sub (s x) x)
""")
    w = loop_search(sys_, parse_term("f (s zero)", sys_))
    assert w is not None and w.length >= 2


@pytest.mark.parametrize("name", ["div", "map-filter-cond", "quicksort"])
def test_no_loops_in_accepted_systems(name):
    system = load_system(corpus_path(f"{name}.hrs"))
    gen = TermGenerator(system, random.Random(3))
    for f, sig in system.functions.items():
        doms, _ = split_type(sig.plain_type)
        for _ in range(5):
            t = app(Fun(f), *(gen.term(d, depth=2) for d in doms))
            assert loop_search(system, t, depth=12, limit=3000) is None


@settings(max_examples=80)
@given(st.integers(0, 10**6), st.sampled_from(["div", "map-filter-cond", "quicksort", "goedel-T", "howard-V"]))
def test_sequence_agrees_with_normalize(seed, name):
    system = load_system(corpus_path(f"{name}.hrs"))
    gen = TermGenerator(system, random.Random(seed))
    sort = random.Random(seed).choice(sorted(system.sorts.values(), key=str))
    try:
        t = gen.term(sort, depth=3)
    except ValueError:
        return
    seq = list(reduction_sequence(system, t, fuel=10_000))
    assert is_normal(system, seq[-1])
    assert seq[-1] == normalize(system, t)
    ty = type_check({}, t, system.symbols)
    for u in seq:
        assert type_check({}, u, system.symbols) == ty
