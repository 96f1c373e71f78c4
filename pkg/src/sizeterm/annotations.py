"""Size-annotated types and constructor/function signatures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

from .sizes import (
    INF,
    Size,
    SizeConst,
    SizeExpr,
    SizeVar,
    apply_subst,
    lt_inf,
    size_vars,
    succ,
)
from .syntax import (
    ArgClassification,
    Arrow,
    Diagnostic,
    SimpleType,
    Sort,
    SortOrder,
    classify_args,
    occurs_only_positively,
    sort_positions,
)


@dataclass(frozen=True)
class ASort:
    sort: Sort
    size: SizeExpr = INF

    def __str__(self) -> str:
        return str(self.sort) if self.size is INF else f"{self.sort}({self.size})"


@dataclass(frozen=True)
class AArrow:
    dom: "AnnotatedType"
    cod: "AnnotatedType"

    def __str__(self) -> str:
        d = f"({self.dom})" if isinstance(self.dom, AArrow) else str(self.dom)
        return f"{d} -> {self.cod}"


AnnotatedType = Union[ASort, AArrow]


def a_arrows(doms: Iterable[AnnotatedType], cod: AnnotatedType) -> AnnotatedType:
    for d in reversed(list(doms)):
        cod = AArrow(d, cod)
    return cod


def a_split(t: AnnotatedType) -> tuple[list, AnnotatedType]:
    doms = []
    while isinstance(t, AArrow):
        doms.append(t.dom)
        t = t.cod
    return doms, t


def strip(t: AnnotatedType) -> SimpleType:
    if isinstance(t, ASort):
        return t.sort
    return Arrow(strip(t.dom), strip(t.cod))


def lift(t: SimpleType) -> AnnotatedType:
    """A plain type seen as annotated with infinity everywhere."""
    if isinstance(t, Sort):
        return ASort(t)
    return AArrow(lift(t.dom), lift(t.cod))


def annotate(t: SimpleType, b: Sort, a: SizeExpr) -> AnnotatedType:
    if isinstance(t, Sort):
        return ASort(t, a if t == b else INF)
    return AArrow(annotate(t.dom, b, a), annotate(t.cod, b, a))


def map_sizes(t: AnnotatedType, f) -> AnnotatedType:
    if isinstance(t, ASort):
        return ASort(t.sort, f(t.size))
    return AArrow(map_sizes(t.dom, f), map_sizes(t.cod, f))


def subst_type(t: AnnotatedType, phi: Mapping[SizeVar, SizeExpr]) -> AnnotatedType:
    return map_sizes(t, lambda a: apply_subst(a, phi))


def type_size_vars(t: AnnotatedType) -> set[SizeVar]:
    if isinstance(t, ASort):
        return size_vars(t.size)
    return type_size_vars(t.dom) | type_size_vars(t.cod)


def type_annotations(t: AnnotatedType, pos: str = "") -> list[tuple[str, Sort, SizeExpr]]:
    """``(position, sort, size)`` for every sort occurrence."""
    if isinstance(t, ASort):
        return [(pos, t.sort, t.size)]
    return type_annotations(t.dom, pos + "1") + type_annotations(t.cod, pos + "2")


def size_occurrences(t: AnnotatedType, sign: str = "+", pos: str = "") -> list[tuple[str, SizeVar, str]]:
    """Occurrences ``(position, variable, sign)`` of size variables.

    The successor symbol is monotone in its argument, so the sign of an
    occurrence is the sign of the sort occurrence carrying it.
    """
    if isinstance(t, ASort):
        if t.size is INF or not isinstance(t.size.head, SizeVar):
            return []
        return [(pos + "1" * (t.size.iters + 1), t.size.head, sign)]
    flip = "-" if sign == "+" else "+"
    return size_occurrences(t.dom, flip, pos + "1") + size_occurrences(t.cod, sign, pos + "2")


def ann_signed_positions(t: AnnotatedType, sign: str) -> set[str]:
    """Signed positions of the sort occurrences and of the size variables inside annotations."""
    out = set()

    def go(t: AnnotatedType, s: str, pos: str) -> None:
        if isinstance(t, ASort):
            if s == sign:
                out.add(pos)
                if t.size is not INF and isinstance(t.size.head, SizeVar):
                    out.add(pos + "1" * (t.size.iters + 1))
            return
        go(t.dom, "-" if s == "+" else "+", pos + "1")
        go(t.cod, s, pos + "2")

    go(t, "+", "")
    return out


def var_positions(t: AnnotatedType, v: SizeVar) -> set[str]:
    return {p for p, w, _ in size_occurrences(t) if w == v}


def size_positions(a: SizeExpr, v: SizeVar) -> set[str]:
    if a is INF or a.head != v:
        return set()
    return {"1" * a.iters}


def monotone_in(a: SizeExpr, v: SizeVar) -> bool:
    # successor is monotone and constants have no arguments: always positive
    return True


# ------------------------------------------------------------ constructors

@dataclass(frozen=True)
class ConstructorSignature:
    name: str
    args: tuple  # AnnotatedType per argument, declaration order
    output: Sort
    sigma: SizeExpr
    measured: tuple  # Sort or None per argument
    alphas: tuple  # SizeExpr (variable size or INF) per argument
    classification: ArgClassification
    canonical: bool = False

    @property
    def p(self) -> int:
        return self.classification.p

    @property
    def q(self) -> int:
        return self.classification.q

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def plain_args(self) -> list:
        return [strip(a) for a in self.args]

    @property
    def plain_type(self) -> SimpleType:
        t: SimpleType = self.output
        for a in reversed(self.args):
            t = Arrow(strip(a), t)
        return t

    @property
    def annotated_type(self) -> AnnotatedType:
        return a_arrows(self.args, ASort(self.output, self.sigma))

    def is_recursive(self, i: int) -> bool:
        return self.classification.recursive[i]

    def is_accessible(self, i: int) -> bool:
        return self.classification.accessible[i]

    def contributing(self) -> list[int]:
        """Arguments whose size feeds the output size: those annotated by the head of sigma."""
        if self.sigma is INF:
            return []
        h = self.sigma.head
        return [i for i, a in enumerate(self.alphas) if a is not INF and a.head == h]

    def size_function(self, sizes: list[int]) -> int:
        """Output size from argument sizes (only annotated arguments are read)."""
        if self.sigma is INF:
            return 0
        contrib = self.contributing()
        if not contrib:
            return self.sigma.iters
        return self.sigma.iters + max(sizes[i] for i in contrib)


def _read_arg_annotation(t: AnnotatedType) -> tuple[Optional[Sort], SizeExpr, Optional[str]]:
    annotated = [(s, a) for _, s, a in type_annotations(t) if a is not INF]
    if not annotated:
        return None, INF, None
    sorts = {s for s, _ in annotated}
    sizes = {a for _, a in annotated}
    if len(sorts) > 1 or len(sizes) > 1:
        return None, INF, "annotates several sorts or with several sizes"
    (b,), (a,) = sorts, sizes
    if a.iters != 0 or not isinstance(a.head, SizeVar):
        return None, INF, f"annotation {a} is not a size variable"
    if annotate(strip(t), b, a) != t:
        return None, INF, f"does not annotate every occurrence of {b}"
    return b, a, None


def constructor_from_annotated(
    name: str, t: AnnotatedType, order: SortOrder
) -> tuple[ConstructorSignature, list[Diagnostic]]:
    """Build a signature from a user-annotated type and validate it."""
    args, out = a_split(t)
    if not isinstance(out, ASort):  # pragma: no cover - a_split guarantees it
        raise TypeError
    cls = classify_args([strip(a) for a in args], out.sort, order)
    measured, alphas, diags = [], [], []
    for i, a in enumerate(args):
        b, al, err = _read_arg_annotation(a)
        if err:
            diags.append(Diagnostic("annotation", f"{name}: argument {i + 1} {err}"))
        measured.append(b)
        alphas.append(al)
    sig = ConstructorSignature(name, tuple(args), out.sort, out.size, tuple(measured), tuple(alphas), cls)
    return sig, diags + validate_constructor_signature(sig)


def canonical_constructor_signature(
    name: str, arg_types: Iterable[SimpleType], out: Sort, order: SortOrder, var_name: str = "a"
) -> ConstructorSignature:
    arg_types = list(arg_types)
    cls = classify_args(arg_types, out, order)
    alpha = Size(0, SizeVar(var_name))
    args, measured, alphas = [], [], []
    for i, t in enumerate(arg_types):
        if cls.recursive[i]:
            args.append(annotate(t, out, alpha))
            measured.append(out)
            alphas.append(alpha)
        else:
            args.append(lift(t))
            measured.append(None)
            alphas.append(INF)
    sigma = succ(alpha) if cls.p > 0 else alpha
    return ConstructorSignature(name, tuple(args), out, sigma, tuple(measured), tuple(alphas), cls, canonical=True)


def validate_constructor_signature(sig: ConstructorSignature) -> list[Diagnostic]:
    d: list[Diagnostic] = []
    n = sig.name
    cls = sig.classification
    acc_vars = []
    for i, (t, b, a) in enumerate(zip(sig.args, sig.measured, sig.alphas)):
        pos = f"{n}: argument {i + 1}"
        if not cls.accessible[i]:
            if type_size_vars(t) or any(x is not INF for _, _, x in type_annotations(t)):
                d.append(Diagnostic("inaccessible-annotated", f"{pos} is not accessible and must stay unannotated"))
            continue
        if a is not INF:
            acc_vars.append(a.head)
        if cls.recursive[i]:
            if a is INF:
                d.append(Diagnostic("recursive-variable", f"{pos} is recursive and needs a size variable"))
                continue
            if b != sig.output:
                d.append(Diagnostic("recursive-sort", f"{pos} must be measured in {sig.output}, not {b}"))
            if not lt_inf(a, sig.sigma):
                d.append(Diagnostic("strict-extensive", f"{pos}: {a} is not strictly below the output size {sig.sigma}"))
        elif a is not INF:
            st = strip(t)
            if not sort_positions(st, b):
                d.append(Diagnostic("measured-sort", f"{pos}: {b} does not occur in {st}"))
            elif not occurs_only_positively(st, b):
                d.append(Diagnostic("measured-sort", f"{pos}: {b} occurs negatively in {st}"))
    if len(set(acc_vars)) not in (0, 1, len(acc_vars)):
        d.append(Diagnostic("pairwise", f"{n}: argument size variables are neither all equal nor all distinct"))
    for v in set(acc_vars):
        if not monotone_in(sig.sigma, v):  # pragma: no cover - always monotone here
            d.append(Diagnostic("monotone", f"{n}: output size is not monotone in {v}"))
    if sig.sigma is not INF and isinstance(sig.sigma.head, SizeConst):
        d.append(Diagnostic("output-constant", f"{n}: output size {sig.sigma} is headed by a constant"))
    return d


def constructor_warnings(sig: ConstructorSignature) -> list[Diagnostic]:
    if sig.sigma is INF:
        return [Diagnostic("warning", f"{sig.name}: infinite output size; its terms all get size 0")]
    return []


# --------------------------------------------------------------- functions

@dataclass(frozen=True)
class FunctionSignature:
    name: str
    args: tuple  # AnnotatedType per argument
    output: AnnotatedType
    q: int

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def annotated_type(self) -> AnnotatedType:
        return a_arrows(self.args, self.output)

    @property
    def plain_type(self) -> SimpleType:
        return strip(self.annotated_type)

    @property
    def result_sort(self) -> ASort:
        return a_split(self.output)[1]

    @property
    def sigma(self) -> SizeExpr:
        return self.result_sort.size

    @property
    def alphas(self) -> list[SizeExpr]:
        return [a.size if isinstance(a, ASort) else INF for a in self.args[: self.q]]

    @property
    def measured(self) -> list[Sort]:
        return [a.sort if isinstance(a, ASort) else None for a in self.args[: self.q]]


def function_from_annotated(name: str, t: AnnotatedType, q: Optional[int] = None) -> FunctionSignature:
    """Split an annotated type into argument types and output.

    The output is the final sort; when ``q`` is omitted it is the number
    of leading sort arguments annotated by a size variable.
    """
    doms, res = a_split(t)
    if q is None:
        q = 0
        for a in doms:
            if isinstance(a, ASort) and a.size is not INF:
                q += 1
            else:
                break
    return FunctionSignature(name, tuple(doms), res, q)


def validate_function_signature(sig: FunctionSignature) -> list[Diagnostic]:
    d: list[Diagnostic] = []
    n = sig.name
    if sig.q > sig.arity:
        return [Diagnostic("arity", f"{n}: {sig.q} termination arguments but arity {sig.arity}")]
    seen = []
    for i, a in enumerate(sig.args[: sig.q]):
        pos = f"{n}: argument {i + 1}"
        if not isinstance(a, ASort):
            d.append(Diagnostic("sort-argument", f"{pos} is a termination argument but not of a sort type"))
            continue
        if a.size is INF or a.size.iters != 0 or not isinstance(a.size.head, SizeVar):
            d.append(Diagnostic("argument-variable", f"{pos} must be annotated by a size variable, got {a.size}"))
            continue
        if a.size.head in seen:
            d.append(Diagnostic("distinct", f"{n}: the termination argument size variables should be distinct ({a.size.head} repeated)"))
        seen.append(a.size.head)
    for i, a in enumerate(sig.args[sig.q:], start=sig.q):
        if type_size_vars(a) or any(x is not INF for _, _, x in type_annotations(a)):
            d.append(Diagnostic("plain-argument", f"{n}: argument {i + 1} is not a termination argument and must stay unannotated"))
    rest, res = a_split(sig.output)
    for a in rest:
        if any(x is not INF for _, _, x in type_annotations(a)):
            d.append(Diagnostic("plain-argument", f"{n}: remaining argument types must stay unannotated"))
    sigma = sig.sigma
    if sigma is not INF:
        if isinstance(sigma.head, SizeConst):
            d.append(Diagnostic("output-variables", f"{n}: output size {sigma} uses a constant"))
        elif sigma.head not in seen:
            d.append(Diagnostic("output-variables", f"{n}: output size variable {sigma.head} is not a termination argument variable"))
    for v in seen:
        if not monotone_in(sigma, v):  # pragma: no cover
            d.append(Diagnostic("monotony", f"{n}: output size not monotone in {v}"))
    return d
