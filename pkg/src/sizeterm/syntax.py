"""Sorts, simple types, λ-terms, substitution and plain typing."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union


# ------------------------------------------------------------------ types

@dataclass(frozen=True, order=True)
class Sort:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Arrow:
    dom: "SimpleType"
    cod: "SimpleType"

    def __str__(self) -> str:
        d = f"({self.dom})" if isinstance(self.dom, Arrow) else str(self.dom)
        return f"{d} -> {self.cod}"


SimpleType = Union[Sort, Arrow]


def arrows(doms: Iterable[SimpleType], cod: SimpleType) -> SimpleType:
    doms = list(doms)
    for d in reversed(doms):
        cod = Arrow(d, cod)
    return cod


def arity(t: SimpleType) -> int:
    n = 0
    while isinstance(t, Arrow):
        n, t = n + 1, t.cod
    return n


def split_type(t: SimpleType) -> tuple[list, Sort]:
    """``T1 -> ... -> Tn -> B`` as ``([T1..Tn], B)``."""
    doms = []
    while isinstance(t, Arrow):
        doms.append(t.dom)
        t = t.cod
    return doms, t


def type_sorts(t: SimpleType) -> set[Sort]:
    if isinstance(t, Sort):
        return {t}
    return type_sorts(t.dom) | type_sorts(t.cod)


# Positions are strings over {'1','2'}; '' is the root.

def sort_positions(t: SimpleType, b: Optional[Sort] = None) -> set[str]:
    """Positions of occurrences of ``b`` (of any sort when ``b`` is None)."""
    if isinstance(t, Sort):
        return {""} if b is None or t == b else set()
    return {"1" + p for p in sort_positions(t.dom, b)} | {"2" + p for p in sort_positions(t.cod, b)}


def signed_positions(t: SimpleType, sign: str) -> set[str]:
    if sign not in "+-" or len(sign) != 1:
        raise ValueError("sign must be '+' or '-'")
    if isinstance(t, Sort):
        return {""} if sign == "+" else set()
    flip = "-" if sign == "+" else "+"
    return {"1" + p for p in signed_positions(t.dom, flip)} | {"2" + p for p in signed_positions(t.cod, sign)}


def occurs_only_positively(t: SimpleType, b: Sort) -> bool:
    return sort_positions(t, b) <= signed_positions(t, "+")


class SortOrder:
    """Strict order on sorts, stored transitively closed."""

    def __init__(self, pairs: Iterable[tuple[Sort, Sort]] = ()) -> None:
        self._lt: set[tuple[Sort, Sort]] = set()
        for a, b in pairs:
            self.add(a, b)

    def add(self, a: Sort, b: Sort) -> None:
        if a == b or (b, a) in self._lt:
            raise ValueError(f"sort order would become cyclic: {a} < {b}")
        new = {(a, b)}
        below = {x for (x, y) in self._lt if y == a} | {a}
        above = {y for (x, y) in self._lt if x == b} | {b}
        for x in below:
            for y in above:
                if x == y:
                    raise ValueError(f"sort order would become cyclic: {a} < {b}")
                new.add((x, y))
        self._lt |= new

    def lt(self, a: Sort, b: Sort) -> bool:
        return (a, b) in self._lt

    def le(self, a: Sort, b: Sort) -> bool:
        return a == b or (a, b) in self._lt

    @property
    def pairs(self) -> frozenset:
        return frozenset(self._lt)


def positive_wrt(t: SimpleType, b: Sort, order: SortOrder) -> bool:
    return all(order.le(s, b) for s in type_sorts(t)) and occurs_only_positively(t, b)


@dataclass(frozen=True)
class ArgClassification:
    p: int
    q: int
    perm: tuple  # original argument indices, recursive first, then accessible, then the rest
    recursive: tuple  # per original index
    accessible: tuple  # per original index


def classify_args(arg_types: Iterable[SimpleType], out: Sort, order: SortOrder) -> ArgClassification:
    arg_types = list(arg_types)
    acc = [positive_wrt(t, out, order) for t in arg_types]
    rec = [a and bool(sort_positions(t, out)) for a, t in zip(acc, arg_types)]
    first = [i for i in range(len(arg_types)) if rec[i]]
    second = [i for i in range(len(arg_types)) if acc[i] and not rec[i]]
    rest = [i for i in range(len(arg_types)) if not acc[i]]
    return ArgClassification(len(first), len(first) + len(second), tuple(first + second + rest), tuple(rec), tuple(acc))


# ------------------------------------------------------------------ terms

class Term:
    """Base class; equality and hashing are up to renaming of bound variables."""

    __slots__ = ()

    def _key(self, bound: tuple) -> tuple:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def key(self) -> tuple:
        k = getattr(self, "_cached_key", None)
        if k is None:
            k = self._key(())
            object.__setattr__(self, "_cached_key", k)
        return k

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Term) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True, eq=False)
class Var(Term):
    name: str

    def _key(self, bound):
        for i, b in enumerate(reversed(bound)):
            if b == self.name:
                return ("b", i)
        return ("v", self.name)


@dataclass(frozen=True, eq=False)
class Cons(Term):
    name: str

    def _key(self, bound):
        return ("c", self.name)


@dataclass(frozen=True, eq=False)
class Fun(Term):
    name: str

    def _key(self, bound):
        return ("f", self.name)


@dataclass(frozen=True, eq=False)
class Abs(Term):
    var: str
    ty: SimpleType
    body: Term

    def _key(self, bound):
        return ("l", self.ty, self.body._key(bound + (self.var,)))


@dataclass(frozen=True, eq=False)
class App(Term):
    fun: Term
    arg: Term

    def _key(self, bound):
        return ("a", self.fun._key(bound), self.arg._key(bound))


Symbol = Union[Cons, Fun]


def app(head: Term, *args: Term) -> Term:
    for a in args:
        head = App(head, a)
    return head


def spine(t: Term) -> tuple[Term, list]:
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def free_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, App):
        return free_vars(t.fun) | free_vars(t.arg)
    if isinstance(t, Abs):
        return free_vars(t.body) - {t.var}
    return set()


def all_names(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, App):
        return all_names(t.fun) | all_names(t.arg)
    if isinstance(t, Abs):
        return all_names(t.body) | {t.var}
    return set()


def fresh_name(base: str, avoid: set[str]) -> str:
    stem = base.rstrip("0123456789'") or "x"
    for i in itertools.count(1):
        cand = f"{stem}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError  # pragma: no cover


def substitute(t: Term, theta: Mapping[str, Term]) -> Term:
    """Capture-avoiding substitution; bound names are renamed on clash."""
    if not theta:
        return t
    if isinstance(t, Var):
        return theta.get(t.name, t)
    if isinstance(t, App):
        return App(substitute(t.fun, theta), substitute(t.arg, theta))
    if isinstance(t, Abs):
        inner = {k: v for k, v in theta.items() if k != t.var}
        fv_body = free_vars(t.body)
        relevant = {k: v for k, v in inner.items() if k in fv_body}
        if not relevant:
            return t
        incoming = set().union(*(free_vars(v) for v in relevant.values()))
        if t.var in incoming:
            avoid = incoming | fv_body | set(relevant) | all_names(t.body)
            new = fresh_name(t.var, avoid)
            relevant = dict(relevant)
            relevant[t.var] = Var(new)
            return Abs(new, t.ty, substitute(t.body, relevant))
        return Abs(t.var, t.ty, substitute(t.body, relevant))
    return t


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        yield from subterms(t.fun)
        yield from subterms(t.arg)
    elif isinstance(t, Abs):
        yield from subterms(t.body)


def term_size(t: Term) -> int:
    if isinstance(t, App):
        return term_size(t.fun) + term_size(t.arg)
    if isinstance(t, Abs):
        return 1 + term_size(t.body)
    return 1


def show(t: Term) -> str:
    def go(t: Term, ctx: str) -> str:
        if isinstance(t, (Var, Cons, Fun)):
            return t.name
        if isinstance(t, Abs):
            s = f"\\{t.var}:{t.ty}. {go(t.body, 'top')}"
            return s if ctx == "top" else f"({s})"
        s = f"{go(t.fun, 'fun')} {go(t.arg, 'arg')}"
        return f"({s})" if ctx == "arg" else s
    return go(t, "top")


# ----------------------------------------------------------------- typing

class TypeError_(Exception):
    """Plain typing failure."""


def type_check(env: Mapping[str, SimpleType], t: Term, symbols: Mapping[str, SimpleType]) -> SimpleType:
    """Return the unique simple type of ``t`` or raise ``TypeError_``."""
    if isinstance(t, Var):
        if t.name not in env:
            raise TypeError_(f"unbound variable {t.name}")
        return env[t.name]
    if isinstance(t, (Cons, Fun)):
        if t.name not in symbols:
            raise TypeError_(f"undeclared symbol {t.name}")
        return symbols[t.name]
    if isinstance(t, Abs):
        inner = dict(env)
        inner[t.var] = t.ty
        return Arrow(t.ty, type_check(inner, t.body, symbols))
    ft = type_check(env, t.fun, symbols)
    at = type_check(env, t.arg, symbols)
    if not isinstance(ft, Arrow):
        raise TypeError_(f"{show(t.fun)} : {ft} is applied to an argument")
    if ft.dom != at:
        raise TypeError_(f"argument {show(t.arg)} has type {at}, expected {ft.dom}")
    return ft.cod


# ------------------------------------------------------------------ rules

@dataclass(frozen=True)
class Rule:
    lhs: Term
    rhs: Term
    name: str = ""

    @property
    def head(self) -> str:
        h, _ = spine(self.lhs)
        return h.name if isinstance(h, Fun) else ""

    @property
    def args(self) -> list:
        return spine(self.lhs)[1]

    def __str__(self) -> str:
        return f"{show(self.lhs)} -> {show(self.rhs)}"


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.message}"


def pattern_env(lhs: Term, symbols: Mapping[str, SimpleType]) -> dict:
    """Types of the variables of a first-order pattern, read off argument positions."""
    env: dict = {}

    def visit(t: Term, expected: Optional[SimpleType]) -> None:
        h, args = spine(t)
        if isinstance(h, Var):
            if args:
                raise TypeError_(f"applied variable {h.name} in a pattern")
            if expected is None:
                raise TypeError_(f"cannot determine the type of {h.name}")
            if h.name in env and env[h.name] != expected:
                raise TypeError_(f"variable {h.name} used at types {env[h.name]} and {expected}")
            env[h.name] = expected
            return
        if isinstance(h, Abs):
            raise TypeError_("abstraction in a pattern")
        if h.name not in symbols:
            raise TypeError_(f"undeclared symbol {h.name}")
        ty = symbols[h.name]
        for a in args:
            if not isinstance(ty, Arrow):
                raise TypeError_(f"{h.name} applied to too many arguments")
            visit(a, ty.dom)
            ty = ty.cod
        if expected is not None and ty != expected:
            raise TypeError_(f"{show(t)} has type {ty}, expected {expected}")

    visit(lhs, None)
    return env


def syntactic_sr(lhs: Term) -> bool:
    """True when the pattern has no abstraction and no applied variable."""
    for u in subterms(lhs):
        if isinstance(u, Abs):
            return False
        if isinstance(u, App) and isinstance(spine(u)[0], Var):
            return False
    return True


def validate_rule(rule: Rule, symbols: Mapping[str, SimpleType]) -> list[Diagnostic]:
    """Structural checks on a rule; an empty list means the rule is well formed.

    Both the syntactic pattern condition and the type-preservation check
    must hold, since matching is first-order.
    """
    diags: list[Diagnostic] = []
    head, args = spine(rule.lhs)
    if not isinstance(head, Fun):
        diags.append(Diagnostic("shape", f"left-hand side head {show(head)} is not a function symbol"))
    extra = free_vars(rule.rhs) - free_vars(rule.lhs)
    if extra:
        diags.append(Diagnostic("free-vars", f"right-hand side variables not bound by the left-hand side: {sorted(extra)}"))
    if not syntactic_sr(rule.lhs):
        diags.append(Diagnostic("pattern", "left-hand side contains an abstraction or an applied variable"))
        return diags
    try:
        env = pattern_env(rule.lhs, symbols)
        lty = type_check(env, rule.lhs, symbols)
    except TypeError_ as e:
        diags.append(Diagnostic("lhs-type", str(e)))
        return diags
    if extra:
        return diags
    try:
        rty = type_check(env, rule.rhs, symbols)
    except TypeError_ as e:
        diags.append(Diagnostic("rhs-type", str(e)))
        return diags
    if rty != lty:
        diags.append(Diagnostic("rhs-type", f"right-hand side has type {rty} but left-hand side has type {lty}"))
    return diags
