from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from sizeterm.annotations import (
    AArrow,
    ASort,
    annotate,
    canonical_constructor_signature,
    constructor_from_annotated,
    function_from_annotated,
    lift,
    strip,
    validate_constructor_signature,
    validate_function_signature,
)
from sizeterm.sizes import INF, var
from sizeterm.syntax import Arrow, Sort, SortOrder

N, T, L, B, C, P = (Sort(n) for n in ("N", "T", "L", "B", "C", "P"))
a = var("a")


def test_strip_and_annotate():
    t = AArrow(ASort(N, a), AArrow(ASort(N), ASort(N, a)))
    assert strip(t) == Arrow(N, Arrow(N, N))
    assert annotate(Arrow(N, Arrow(B, N)), N, a) == AArrow(ASort(N, a), AArrow(ASort(B), ASort(N, a)))
    assert lift(Arrow(N, N)) == AArrow(ASort(N), ASort(N))


def test_canonical_signatures():
    order = SortOrder([(N, T)])
    node = canonical_constructor_signature("node", [T, T, N], T, order)
    assert node.args == (ASort(T, a), ASort(T, a), ASort(N))
    assert node.sigma == var("a", 1)
    s = canonical_constructor_signature("s", [N], N, SortOrder())
    assert s.annotated_type == AArrow(ASort(N, a), ASort(N, var("a", 1)))
    zero = canonical_constructor_signature("zero", [], N, SortOrder())
    assert zero.sigma == a and zero.size_function([]) == 0
    assert not validate_constructor_signature(node)


def test_invalid_constructor_signatures():
    _, diags = constructor_from_annotated("c", AArrow(ASort(T, a), ASort(T, var("b"))), SortOrder())
    assert any(d.kind == "strict-extensive" for d in diags)
    # recursive argument equal to the output instead of strictly below it
    _, diags = constructor_from_annotated("c", AArrow(ASort(T, a), ASort(T, a)), SortOrder())
    assert any(d.kind == "strict-extensive" for d in diags)


def test_cond_with_no_recursive_argument():
    order = SortOrder([(L, C), (B, C)])
    t = AArrow(ASort(L, a), AArrow(ASort(L, a), AArrow(ASort(B), ASort(C, a))))
    sig, diags = constructor_from_annotated("cond", t, order)
    assert sig.p == 0 and not diags
    assert sig.contributing() == [0, 1]
    assert sig.size_function([3, 5, 0]) == 5


def test_function_signatures():
    sub = function_from_annotated("sub", AArrow(ASort(N, a), AArrow(ASort(N), ASort(N, a))), 1)
    assert not validate_function_signature(sub)
    assert function_from_annotated("sub", sub.annotated_type).q == 1
    si = function_from_annotated("si", AArrow(ASort(L, a), AArrow(ASort(L, a), AArrow(ASort(B), ASort(L, a)))), 2)
    assert any(d.kind == "distinct" for d in validate_function_signature(si))
    step = AArrow(ASort(N), AArrow(ASort(T), ASort(T)))
    rec = function_from_annotated("rec", AArrow(ASort(N, a), AArrow(ASort(T), AArrow(step, ASort(T)))), 1)
    assert not validate_function_signature(rec)


simple_types = st.recursive(st.sampled_from([N, B, T]), lambda inner: st.builds(Arrow, inner, inner), max_leaves=6)


@given(simple_types, st.sampled_from([N, B, T]), st.sampled_from([INF, a, var("b", 2)]))
def test_strip_annotate_inverse(t, b, size):
    assert strip(annotate(t, b, size)) == t
    assert strip(lift(t)) == t
    assert annotate(t, b, INF) == lift(t)
