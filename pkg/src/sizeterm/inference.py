"""Sized-type inference and the decision procedure for rule right-hand sides.

``infer`` computes a most general annotated type: at every application
the head's declared type is instantiated with fresh size variables and
the argument constraints are solved with ``mgs``. ``check`` freezes the
size variables of the context into constants, solves the remaining
subtyping problem against the target type, then checks that every
recursive call has decreasing termination arguments.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .annotations import (
    AArrow,
    ASort,
    AnnotatedType,
    a_split,
    lift,
    map_sizes,
    subst_type,
    type_size_vars,
)
from .sizes import (
    INF,
    FreshNames,
    Size,
    SizeConst,
    SizeExpr,
    SizeVar,
    apply_subst,
    compose,
    leq_inf,
    lt_inf,
    size_vars,
)
from .solver import BOTTOM, Unsat, mgs, reduce_subtyping, subtype
from .syntax import Abs, App, Cons, Fun, Term, Var, show, spine


class InferenceError(Exception):
    def __init__(self, message: str, constraints: Optional[list] = None, term: Optional[Term] = None) -> None:
        super().__init__(message)
        self.constraints = constraints or []
        self.term = term


class BetaRedex(InferenceError):
    pass


@dataclass
class Precedence:
    """Quasi-order on function symbols given by equivalence classes and a strict part."""

    cls: dict = field(default_factory=dict)  # symbol -> class id
    above: dict = field(default_factory=dict)  # class id -> set of class ids strictly below

    def equiv(self, h: str, f: str) -> bool:
        return h in self.cls and f in self.cls and self.cls[h] == self.cls[f]

    def lt(self, h: str, f: str) -> bool:
        if h not in self.cls or f not in self.cls:
            return False
        return self.cls[h] in self.above.get(self.cls[f], set())

    def classes(self) -> list[set]:
        groups: dict = {}
        for s, c in self.cls.items():
            groups.setdefault(c, set()).add(s)
        return list(groups.values())


# ------------------------------------------------------------ derivations

@dataclass
class AppNode:
    term: Term
    head: Term
    declared: AnnotatedType  # instantiated head type
    instance: dict  # declared scheme variable -> fresh variable
    args: list
    eta: dict
    result: AnnotatedType
    arg_types: list  # inferred argument types
    is_call: bool = False  # head equivalent to the defined symbol
    q: int = 0


@dataclass
class LamNode:
    term: Abs
    body: object
    result: AnnotatedType


Derivation = object  # AppNode | LamNode


@dataclass(frozen=True)
class CallSite:
    head: str
    sizes: tuple
    term: Term

    def __str__(self) -> str:
        return f"{self.head}({', '.join(map(str, self.sizes))}) at {show(self.term)}"


class Inferencer:
    def __init__(self, system, f: str, prec: Optional[Precedence] = None, fresh: Optional[FreshNames] = None,
                 check_precedence: bool = True) -> None:
        self.system = system
        self.f = f
        self.prec = prec
        self.fresh = fresh or FreshNames()
        self.check_precedence = check_precedence and prec is not None

    def instantiate(self, t: AnnotatedType) -> tuple[AnnotatedType, dict]:
        inst = {v: Size(0, self.fresh.var()) for v in sorted(type_size_vars(t))}
        return subst_type(t, inst), inst

    def declared(self, name: str) -> tuple[AnnotatedType, int, bool]:
        sys = self.system
        if name in sys.constructors:
            return sys.constructors[name].annotated_type, 0, False
        if name in sys.functions:
            sig = sys.functions[name]
            return sig.annotated_type, sig.q, True
        raise InferenceError(f"undeclared symbol {name}")

    def infer(self, env: Mapping[str, AnnotatedType], t: Term):
        if isinstance(t, Abs):
            dom = lift(t.ty)
            inner = dict(env)
            inner[t.var] = dom
            body = self.infer(inner, t.body)
            return LamNode(t, body, AArrow(dom, body.result))
        h, args = spine(t)
        if isinstance(h, Abs):
            raise BetaRedex(f"head of {show(t)} is an abstraction; beta-normalize the right-hand side", term=t)
        is_call, q = False, 0
        if isinstance(h, Var):
            if h.name not in env:
                raise InferenceError(f"unbound variable {h.name}", term=t)
            declared, inst = env[h.name], {}
        else:
            scheme, q, is_fun = self.declared(h.name)
            if is_fun and self.check_precedence:
                if self.prec.lt(h.name, self.f):
                    pass
                elif self.prec.equiv(h.name, self.f):
                    if len(args) < q:
                        raise InferenceError(f"call {show(t)} has {len(args)} arguments, fewer than {q}", term=t)
                    is_call = True
                else:
                    raise InferenceError(f"{h.name} is not below {self.f} in the precedence", term=t)
            elif is_fun:
                is_call = h.name == self.f or (self.prec is not None and self.prec.equiv(h.name, self.f))
            declared, inst = self.instantiate(scheme)
        doms, _ = a_split(declared)
        if len(args) > len(doms):
            raise InferenceError(f"{show(h)} applied to too many arguments in {show(t)}", term=t)
        rest = declared
        params = []
        for _ in args:
            params.append(rest.dom)
            rest = rest.cod
        subs = [self.infer(env, a) for a in args]
        pairs = [(d.result, p) for d, p in zip(subs, params)]
        problem = reduce_subtyping(pairs)
        if problem is BOTTOM:
            raise InferenceError(f"argument types do not match in {show(t)}", pairs, t)
        try:
            eta = mgs(problem)
        except Unsat as e:
            raise InferenceError(f"no size solution for the arguments of {show(t)}: {e}", problem, t) from None
        return AppNode(t, h, declared, inst, subs, eta, subst_type(rest, eta), [d.result for d in subs], is_call, q)


def infer(system, env: Mapping[str, AnnotatedType], f: str, t: Term, prec: Optional[Precedence] = None,
          fresh: Optional[FreshNames] = None):
    """Most general annotated type of ``t`` and its derivation."""
    d = Inferencer(system, f, prec, fresh).infer(env, t)
    return d.result, d


def replay(d, system) -> bool:
    """Re-validate every node of a derivation from its children's conclusions."""
    if isinstance(d, LamNode):
        return replay(d.body, system) and d.result == AArrow(lift(d.term.ty), d.body.result)
    if not all(replay(c, system) for c in d.args):
        return False
    rest = d.declared
    pairs = []
    for c in d.args:
        if not isinstance(rest, AArrow):
            return False
        pairs.append((c.result, rest.dom))
        rest = rest.cod
    problem = reduce_subtyping(pairs)
    if problem is BOTTOM:
        return False
    for a, b in problem:
        if not leq_inf(apply_subst(a, d.eta), apply_subst(b, d.eta)):
            return False
    try:
        eta = mgs(problem)
    except Unsat:
        return False
    return subst_type(rest, eta) == d.result


def _type_chain(t: AnnotatedType, chain: Sequence[Mapping]) -> AnnotatedType:
    for m in chain:
        t = subst_type(t, m)
    return t


def valid_typing(d, phi: Mapping[SizeVar, SizeExpr], outer: Sequence[Mapping] = ()) -> bool:
    """Check that the derivation instantiated by ``phi`` is a typing derivation.

    Each node's types are read under its own solution, those of its
    ancestors, then ``phi``; every argument must fit its parameter.
    """
    if isinstance(d, LamNode):
        return valid_typing(d.body, phi, outer)
    chain = [d.eta, *outer, phi]
    rest = _type_chain(d.declared, chain)
    for c in d.args:
        if not valid_typing(c, phi, [d.eta, *outer]):
            return False
        if not subtype(_type_chain(c.result, chain), rest.dom):
            return False
        rest = rest.cod
    return True


def _apply_chain(a: SizeExpr, chain: Sequence[Mapping]) -> SizeExpr:
    for s in chain:
        a = apply_subst(a, s)
    return a


def collect_call_sites(d, chi: Mapping[SizeVar, SizeExpr], outer: Sequence[Mapping] = ()) -> list[CallSite]:
    """Call sites of symbols equivalent to the defined one, with fully instantiated argument sizes."""
    if not outer:
        outer = [chi]
    if isinstance(d, LamNode):
        return collect_call_sites(d.body, chi, outer)
    chain = [d.eta, *outer]
    out = []
    if d.is_call:
        doms, _ = a_split(d.declared)
        sizes = []
        for dom in doms[: d.q]:
            sizes.append(_apply_chain(dom.size if isinstance(dom, ASort) else INF, chain))
        out.append(CallSite(d.head.name, tuple(sizes), d.term))
    for c in d.args:
        out += collect_call_sites(c, chi, chain)
    return out


def call_compare(a: Sequence[SizeExpr], b: Sequence[SizeExpr], perm: Optional[Sequence[int]] = None) -> bool:
    """Lexicographic comparison: some ``a_i < b_i`` with ``a_j <= b_j`` before it.

    Every size on the left must be finite.
    """
    if any(x is INF for x in a):
        return False
    n = min(len(a), len(b))
    order = list(perm) if perm is not None else list(range(n))
    order = [i for i in order if i < n]
    for i in order:
        if lt_inf(a[i], b[i]):
            return True
        if not leq_inf(a[i], b[i]):
            return False
    return False


# ------------------------------------------------------------------ check

@dataclass
class CheckResult:
    ok: bool
    step: int  # 0 when every step succeeded, else the failing step (1..3)
    reason: str = ""
    inferred: Optional[AnnotatedType] = None
    target: Optional[AnnotatedType] = None
    chi: dict = field(default_factory=dict)
    call_sites: list = field(default_factory=list)
    bound: tuple = ()
    derivation: object = None
    constraints: list = field(default_factory=list)
    freeze: dict = field(default_factory=dict)  # variable -> frozen constant

    def thaw(self, t: AnnotatedType) -> AnnotatedType:
        """Replace frozen constants by the variables they stand for."""
        back = {c: v for v, c in self.freeze.items()}
        return map_sizes(t, lambda a: a if a is INF or a.head not in back else Size(a.iters, back[a.head]))


def _freeze_map(vs: Iterable[SizeVar]) -> dict:
    return {v: SizeConst(v.name, frozen=True) for v in vs}


def _freeze_expr(a: SizeExpr, fz: Mapping[SizeVar, SizeConst]) -> SizeExpr:
    if a is INF or not isinstance(a.head, SizeVar) or a.head not in fz:
        return a
    return Size(a.iters, fz[a.head])


def check(system, env: Mapping[str, AnnotatedType], phi: Mapping[SizeVar, SizeExpr], f: str, t: Term,
          target: AnnotatedType, prec: Optional[Precedence] = None, perm: Optional[Sequence[int]] = None,
          fresh: Optional[FreshNames] = None, ground_limit: int = 4096) -> CheckResult:
    """Decide whether ``t`` has type ``target`` with decreasing recursive calls."""
    sig = system.functions[f]
    # step 1: freeze the size variables of the context, the bounds and the target
    vs = set()
    for u in env.values():
        vs |= type_size_vars(u)
    vs |= type_size_vars(target)
    for e in phi.values():
        vs |= size_vars(e)
    fz = _freeze_map(vs)
    fenv = {x: map_sizes(u, lambda a: _freeze_expr(a, fz)) for x, u in env.items()}
    ftarget = map_sizes(target, lambda a: _freeze_expr(a, fz))
    bound = tuple(_freeze_expr(apply_subst(a, phi), fz) for a in sig.alphas)
    res = CheckResult(False, 1, target=ftarget, bound=bound, freeze=fz)
    if any(b is INF for b in bound):
        res.reason = "size bounds of the termination arguments must be finite"
        return res
    # step 2: infer and fit the target
    res.step = 2
    try:
        d = Inferencer(system, f, prec, fresh).infer(fenv, t)
    except InferenceError as e:
        res.reason = str(e)
        res.constraints = list(e.constraints)
        return res
    res.derivation, res.inferred = d, d.result
    problem = reduce_subtyping([(d.result, ftarget)])
    res.constraints = [] if problem is BOTTOM else list(problem)
    if problem is BOTTOM:
        res.reason = f"inferred type {d.result} does not match {ftarget}"
        return res
    try:
        chi = mgs(problem)
    except Unsat:
        res.reason = f"inferred type {d.result} is not a subtype of {ftarget}"
        return res
    res.chi = chi
    # step 3: decreasingness of every call
    res.step = 3
    sites = collect_call_sites(d, chi)
    res.call_sites = sites
    if all(call_compare(s.sizes, bound, perm) for s in sites):
        res.ok, res.step = True, 0
        return res
    # leftover variables may be instantiated at will; try the frozen heads
    free = sorted(set().union(*(size_vars(a) for s in sites for a in s.sizes)))
    heads = sorted({b.head for b in bound if b is not INF}, key=str)
    cands = [Size(0, h) for h in heads]
    if free and cands and len(cands) ** len(free) <= ground_limit:
        for choice in itertools.product(cands, repeat=len(free)):
            rho = dict(zip(free, choice))
            grounded = [CallSite(s.head, tuple(apply_subst(a, rho) for a in s.sizes), s.term) for s in sites]
            if all(call_compare(s.sizes, bound, perm) for s in grounded):
                if subtype(subst_type(subst_type(d.result, chi), rho), ftarget):
                    res.ok, res.step, res.call_sites = True, 0, grounded
                    res.chi = compose(chi, rho)
                    return res
    bad = [s for s in sites if not call_compare(s.sizes, bound, perm)]
    res.reason = "; ".join(f"call {s} is not smaller than ({', '.join(map(str, bound))})" for s in bad)
    return res
