from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sizeterm.annotations import AArrow, ASort, subst_type
from sizeterm.sizes import INF, NExpr, Size, SizeConst, SizeVar, apply_subst, const, leq_inf, var
from sizeterm.solver import (
    BOTTOM,
    ConstraintGraph,
    IConstraint,
    Unsat,
    build_graph,
    has_positive_cycle,
    incompatible_triples,
    integer_problem,
    lift_affine_solution,
    longest_path_smallest,
    maxplus_smallest,
    mgs,
    mgs_detail,
    normalize_configuration,
    reduce_subtyping,
    satisfiable,
    satisfies,
    subtype,
)
from sizeterm.syntax import Sort

from oracles import brute_satisfiable, random_problem, simple_cycle_max_weight

N, L = Sort("N"), Sort("L")
a, b = SizeVar("alpha"), SizeVar("beta")
c, d = SizeConst("c"), SizeConst("d")
A, B = var("alpha"), var("beta")
C, D = const("c"), const("d")


def test_reduce_subtyping():
    x = const("x")
    assert reduce_subtyping([(ASort(N, x), ASort(N, A)), (ASort(N), ASort(N))]) == [(x, A), (INF, INF)]
    arrow = reduce_subtyping([(AArrow(ASort(N, A), ASort(N)), AArrow(ASort(N, B), ASort(N)))])
    assert arrow == [(B, A), (INF, INF)]
    assert reduce_subtyping([(ASort(N), ASort(L))]) is BOTTOM
    assert reduce_subtyping([(ASort(N), AArrow(ASort(N), ASort(N)))]) is BOTTOM


def test_subtype():
    assert subtype(ASort(N, A), ASort(N, var("alpha", 1)))
    assert subtype(ASort(N, A), ASort(N))
    assert subtype(AArrow(ASort(N, var("alpha", 1)), ASort(N)), AArrow(ASort(N, A), ASort(N)))
    assert not subtype(ASort(N, var("alpha", 1)), ASort(N, A))


def test_graph_cycle_and_triples():
    p = [(C, A), (var("alpha", 1), B), (B, A)]
    g = build_graph(p)
    assert (a, b, 1) in g.edges and (b, a, 0) in g.edges
    assert has_positive_cycle(g) and has_positive_cycle(g, "maxplus")
    p2 = [(C, A), (D, B), (var("alpha", 1), B), (B, A)]
    assert (a, c, d) in incompatible_triples(p2)
    assert not has_positive_cycle(build_graph([]))
    assert incompatible_triples([]) == set()


def test_normalize_affine_with_constant():
    res = normalize_configuration([(A, const("c", 1)), (B, A)])
    assert not res.is_bottom
    cfg = res.config
    assert cfg.c2 == {a: c, b: c}
    assert cfg.c3 == {IConstraint(NExpr(0, ("alpha",)), NExpr(1)), IConstraint(NExpr(0, ("beta",)), NExpr(0, ("alpha",)))}
    assert not cfg.c0 and not cfg.c1 and not cfg.c4
    cfg.check_invariants()


def test_normalize_drop_infinite_rhs():
    res = normalize_configuration([(A, INF)])
    assert res.config.c0 == {a}
    assert not (res.config.c1 or res.config.c2 or res.config.c3 or res.config.c4)


def test_satisfiable_examples():
    assert satisfiable([(C, A), (var("alpha", 1), B), (B, A)])
    assert satisfiable([(A, const("c", 1)), (B, A)])
    assert not satisfiable([(var("alpha", 1), A), (A, C)])
    assert not satisfiable(BOTTOM)


def test_integer_problem():
    assert integer_problem([(var("alpha", 1), B)]) == [IConstraint(NExpr(1, ("alpha",)), NExpr(0, ("beta",)))]
    assert integer_problem([(const("c", 2), var("beta", 1))]) == [IConstraint(NExpr(2), NExpr(1, ("beta",)))]
    assert integer_problem([]) == []
    with pytest.raises(ValueError):
        integer_problem([(A, C)])


def test_maxplus_worked_example():
    prob = [IConstraint(NExpr(0, ("alpha",)), NExpr(1)), IConstraint(NExpr(0, ("beta",)), NExpr(0, ("alpha",)))]
    r = maxplus_smallest(prob, ["alpha", "beta"])
    ninf = -math.inf
    assert np.array_equal(r.a, np.array([[ninf, 0], [ninf, ninf]]))
    assert np.array_equal(r.b, np.array([0, 0]))
    assert np.array_equal(r.c, np.array([1, math.inf]))
    assert np.array_equal(r.astar_b, np.array([0, 0]))
    assert r.solution == {"alpha": 0, "beta": 0}
    assert longest_path_smallest(prob, ["alpha", "beta"]) == r.solution


def test_maxplus_trivial():
    assert maxplus_smallest([], ["x"]).solution == {"x": 0}
    r = maxplus_smallest([IConstraint(NExpr(1, ("x",)), NExpr(0, ("x",)))])
    assert r.solution is None and r.reason == "positive cycle"


def test_lift_affine_solution():
    g = SizeVar("gamma")
    out = lift_affine_solution([(var("alpha", 1), B)], {"alpha": 0, "beta": 1})
    rep = out[a].head
    assert out == {a: Size(0, rep), b: Size(1, rep)}
    assert satisfies(out, [(var("alpha", 1), B)])
    assert lift_affine_solution([(C, A)], {"alpha": 0}) == {a: C}
    assert lift_affine_solution([], {}) == {}
    assert g not in out


def test_mgs_examples():
    x = const("x")
    assert mgs(reduce_subtyping([(ASort(N, x), ASort(N, A)), (ASort(N), ASort(N))])) == {a: x}
    assert mgs([(INF, A)]) == {a: INF}
    assert mgs([(A, const("c", 1)), (B, A)]) == {a: C, b: C}
    with pytest.raises(Unsat):
        mgs([(var("alpha", 1), A), (A, C)])


def test_mgs_repair_forces_two_constant_class_to_infinity():
    # alpha sits above two distinct constants: only infinity is left for it
    r = mgs_detail([(C, A), (D, B), (B, A)])
    assert r.subst[a] is INF
    assert satisfies(r.subst, [(C, A), (D, B), (B, A)])


def test_mgs_of_claimed_bottom_problem_is_a_solution():
    p = [(C, A), (var("alpha", 1), B), (B, A), (D, B)]
    phi = mgs(p)
    assert phi == {a: INF, b: INF}
    assert satisfies(phi, p)


# ---------------------------------------------------------------- properties

@settings(max_examples=300)
@given(st.integers(0, 10**9))
def test_mgs_is_a_solution_and_agrees_with_brute_force(seed):
    p = random_problem(random.Random(seed))
    sat = satisfiable(p)
    assert sat == brute_satisfiable(p)
    if sat:
        phi = mgs(p)
        assert satisfies(phi, p)
    else:
        with pytest.raises(Unsat):
            mgs(p)


@settings(max_examples=300)
@given(st.integers(0, 10**9))
def test_cycle_detectors_agree_with_enumeration(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 5)
    g = ConstraintGraph()
    g.nodes.update(range(n))
    for _ in range(rng.randint(0, 2 * n)):
        g.add(rng.randrange(n), rng.randrange(n), rng.randint(-3, 2))
    truth = simple_cycle_max_weight(g.nodes, g.edges) > 0
    assert has_positive_cycle(g) == truth
    assert has_positive_cycle(g, "maxplus") == truth


@settings(max_examples=200)
@given(st.integers(0, 10**9))
def test_maxplus_and_bellman_ford_agree(seed):
    rng = random.Random(seed)
    names = ["u", "v", "w"]
    prob = []
    for _ in range(rng.randint(0, 5)):
        lhs = NExpr(rng.randint(0, 2), (rng.choice(names),) if rng.random() < 0.8 else ())
        rhs = NExpr(rng.randint(0, 2), (rng.choice(names),) if rng.random() < 0.8 else ())
        prob.append(IConstraint(lhs, rhs))
    mp = maxplus_smallest(prob, names).solution
    assert mp == longest_path_smallest(prob, names)
    if mp is not None:
        for ic in prob:
            assert ic.lhs.evaluate(mp) <= ic.rhs.evaluate(mp)


def test_solution_soundness_of_reduce_subtyping():
    rng = random.Random(7)
    sizes = [A, B, C, var("alpha", 1), INF]
    for _ in range(200):
        t = AArrow(ASort(N, rng.choice(sizes)), ASort(N, rng.choice(sizes)))
        u = AArrow(ASort(N, rng.choice(sizes)), ASort(N, rng.choice(sizes)))
        p = reduce_subtyping([(t, u)])
        for phi in ({a: C, b: C}, {a: INF, b: C}, {a: const("c", 2), b: INF}):
            ok = all(leq_inf(apply_subst(x, phi), apply_subst(y, phi)) for x, y in p)
            assert ok == subtype(subst_type(t, phi), subst_type(u, phi))
