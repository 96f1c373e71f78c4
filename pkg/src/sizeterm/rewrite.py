"""Operational semantics: matching, one-step reduction, normalization and loop search."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator, Optional, Union

import networkx as nx

from .syntax import (
    Abs,
    App,
    Arrow,
    Cons,
    Fun,
    Rule,
    SimpleType,
    Sort,
    Term,
    Var,
    spine,
    split_type,
    substitute,
)
from .system import RewriteSystem

BETA = "beta"


class FuelExhausted(RuntimeError):
    def __init__(self, term: Term, steps: int) -> None:
        super().__init__(f"no normal form reached within {steps} steps")
        self.term = term
        self.steps = steps


def match(pattern: Term, t: Term, theta: Optional[dict] = None) -> Optional[dict]:
    """First-order matching; repeated pattern variables must match equal subterms."""
    theta = {} if theta is None else theta
    todo = [(pattern, t)]
    while todo:
        p, u = todo.pop()
        if isinstance(p, Var):
            if p.name in theta:
                if theta[p.name] != u:
                    return None
            else:
                theta[p.name] = u
        elif isinstance(p, (Cons, Fun)):
            if type(u) is not type(p) or u.name != p.name:
                return None
        elif isinstance(p, App):
            if not isinstance(u, App):
                return None
            todo.append((p.arg, u.arg))
            todo.append((p.fun, u.fun))
        else:
            return None
    return theta


@dataclass(frozen=True)
class Redex:
    position: tuple  # path of "fun" / "arg" / "body" steps
    rule: Union[Rule, str]  # a rule or BETA
    subst: dict

    def contract(self, t: Term) -> Term:
        if self.rule == BETA:
            return substitute(t.fun.body, {t.fun.var: t.arg})
        return substitute(self.rule.rhs, self.subst)


def subterm_at(t: Term, pos: tuple) -> Term:
    for d in pos:
        t = getattr(t, d)
    return t


def replace_at(t: Term, pos: tuple, u: Term) -> Term:
    if not pos:
        return u
    d, rest = pos[0], pos[1:]
    if d == "fun":
        return App(replace_at(t.fun, rest, u), t.arg)
    if d == "arg":
        return App(t.fun, replace_at(t.arg, rest, u))
    return Abs(t.var, t.ty, replace_at(t.body, rest, u))


class _Index:
    """Rules grouped by head symbol and argument count."""

    def __init__(self, system: RewriteSystem) -> None:
        self.by_head: dict = {}
        for r in system.rules:
            self.by_head.setdefault((r.head, len(r.args)), []).append(r)

    def root_redexes(self, t: Term, pos: tuple = ()) -> list[Redex]:
        out = []
        if isinstance(t, App) and isinstance(t.fun, Abs):
            out.append(Redex(pos, BETA, {}))
        h, args = spine(t)
        if isinstance(h, Fun):
            for r in self.by_head.get((h.name, len(args)), ()):
                th = match(r.lhs, t)
                if th is not None:
                    out.append(Redex(pos, r, th))
        return out


_INDEX_CACHE: dict = {}


def _index(system: RewriteSystem) -> _Index:
    key = id(system)
    hit = _INDEX_CACHE.get(key)
    if hit is None or hit[0] is not system:
        hit = (system, _Index(system))
        _INDEX_CACHE[key] = hit
    return hit[1]


def redexes(system: RewriteSystem, t: Term) -> list[Redex]:
    """Every redex of ``t``, in leftmost-innermost order."""
    idx = _index(system)
    out: list[Redex] = []

    def go(u: Term, pos: tuple) -> None:
        if isinstance(u, App):
            go(u.fun, pos + ("fun",))
            go(u.arg, pos + ("arg",))
        elif isinstance(u, Abs):
            go(u.body, pos + ("body",))
        out.extend(idx.root_redexes(u, pos))

    go(t, ())
    return out


def step(system: RewriteSystem, t: Term) -> list[tuple[Redex, Term]]:
    """All one-step reducts, with the redex each comes from."""
    out = []
    for r in redexes(system, t):
        u = subterm_at(t, r.position)
        out.append((r, replace_at(t, r.position, r.contract(u))))
    return out


def reducts(system: RewriteSystem, t: Term) -> set:
    return {u for _, u in step(system, t)}


def is_normal(system: RewriteSystem, t: Term) -> bool:
    return not redexes(system, t)


def _first_innermost(system: RewriteSystem, t: Term) -> Optional[Redex]:
    idx = _index(system)

    def go(u: Term, pos: tuple) -> Optional[Redex]:
        if isinstance(u, App):
            r = go(u.fun, pos + ("fun",)) or go(u.arg, pos + ("arg",))
            if r:
                return r
        elif isinstance(u, Abs):
            r = go(u.body, pos + ("body",))
            if r:
                return r
        rs = idx.root_redexes(u, pos)
        return rs[0] if rs else None

    return go(t, ())


def reduction_sequence(system: RewriteSystem, t: Term, fuel: int = 10_000) -> Iterator[Term]:
    """Leftmost-innermost reduction sequence, starting with ``t`` itself."""
    yield t
    for _ in range(fuel):
        r = _first_innermost(system, t)
        if r is None:
            return
        t = replace_at(t, r.position, r.contract(subterm_at(t, r.position)))
        yield t
    if _first_innermost(system, t) is not None:
        raise FuelExhausted(t, fuel)


def normalize(system: RewriteSystem, t: Term, fuel: int = 10_000) -> Term:
    """Leftmost-innermost normal form; raises :class:`FuelExhausted`."""
    idx = _index(system)
    budget = [fuel]

    def nf(u: Term) -> Term:
        while True:
            if isinstance(u, App):
                u = App(nf(u.fun), nf(u.arg))
            elif isinstance(u, Abs):
                return Abs(u.var, u.ty, nf(u.body))
            else:
                return u
            rs = idx.root_redexes(u)
            if not rs:
                return u
            if budget[0] <= 0:
                raise FuelExhausted(u, fuel)
            budget[0] -= 1
            u = rs[0].contract(u)

    return nf(t)


@dataclass(frozen=True)
class LoopWitness:
    prefix: tuple  # from the start term to the first term of the cycle
    cycle: tuple  # first element repeated at the end

    @property
    def length(self) -> int:
        return len(self.cycle) - 1


def loop_search(system: RewriteSystem, t: Term, depth: int = 12, limit: int = 20_000) -> Optional[LoopWitness]:
    """Explore all reductions breadth-first up to ``depth``; report a reachable cycle."""
    g = nx.DiGraph()
    g.add_node(t)
    frontier, seen = [t], {t}
    for _ in range(depth):
        nxt = []
        for u in frontier:
            for v in reducts(system, u):
                g.add_edge(u, v)
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
            if len(seen) > limit:
                break
        frontier = nxt
        if not frontier or len(seen) > limit:
            break
    try:
        edges = nx.find_cycle(g, source=t)
    except nx.NetworkXNoCycle:
        return None
    cycle = [edges[0][0]] + [e[1] for e in edges]
    prefix = nx.shortest_path(g, t, cycle[0])[:-1]
    return LoopWitness(tuple(prefix), tuple(cycle))


# ------------------------------------------------------------- size oracle

class OracleError(ValueError):
    pass


def semantic_size(system: RewriteSystem, t: Term, memo: Optional[dict] = None) -> int:
    """Largest size reachable from ``t``: sup over reducts and, for constructor
    applications, the constructor's size function on the argument sizes.

    Only meaningful on terminating first-order terms.
    """
    memo = {} if memo is None else memo

    def o(u: Term) -> int:
        if u in memo:
            return memo[u]
        best = 0
        for v in reducts(system, u):
            best = max(best, o(v))
        h, args = spine(u)
        if isinstance(h, Cons) and h.name in system.constructors:
            sig = system.constructors[h.name]
            if len(args) == sig.arity:
                sizes = [0] * sig.arity
                for i in sig.contributing():
                    if isinstance(sig.plain_args[i], Arrow):
                        raise OracleError("higher-order constructor argument")
                    sizes[i] = o(args[i])
                best = max(best, sig.size_function(sizes))
        memo[u] = best
        return best

    return o(t)


# ------------------------------------------------------- random generation

def _min_depths(system: RewriteSystem) -> dict:
    """Smallest constructor height per sort (absent when uninhabited)."""
    best: dict = {}
    changed = True
    while changed:
        changed = False
        for sig in system.constructors.values():
            need = 0
            for a in sig.plain_args:
                _, b = split_type(a)
                if b not in best:
                    need = None
                    break
                need = max(need, best[b] + 1)
            if need is not None and need < best.get(sig.output, 10**9):
                best[sig.output] = need
                changed = True
    return best


class TermGenerator:
    """Random closed well-typed terms (constructors, function calls, abstractions, β-redexes)."""

    def __init__(self, system: RewriteSystem, rng: Optional[random.Random] = None, *,
                 functions: bool = True, redexes: bool = True) -> None:
        self.sys = system
        self.rng = rng or random.Random(0)
        self.functions = functions
        self.redexes = redexes
        self.min_depth = _min_depths(system)
        self.heads: dict = {}
        for name, sig in system.constructors.items():
            self.heads.setdefault(sig.output, []).append((Cons(name), sig.plain_type))
        if functions:
            for name, sig in system.functions.items():
                _, out = split_type(sig.plain_type)
                self.heads.setdefault(out, []).append((Fun(name), sig.plain_type))
        self.counter = 0

    def _fresh(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    def term(self, ty: SimpleType, depth: int = 4, env: Optional[dict] = None) -> Term:
        env = dict(env or {})
        if isinstance(ty, Arrow):
            x = self._fresh()
            return Abs(x, ty.dom, self.term(ty.cod, depth, {**env, x: ty.dom}))
        return self._sort_term(ty, depth, env)

    def _sort_term(self, b: Sort, depth: int, env: dict) -> Term:
        rng = self.rng
        cands = [(Var(x), t) for x, t in env.items() if split_type(t)[1] == b]
        heads = self.heads.get(b, [])
        if depth <= 0:
            cons = [(h, t) for h, t in heads if isinstance(h, Cons) and self._cheap(t)]
            low = min((self._cost(t) for _, t in cons), default=None)
            pool = [c for c in cands if not isinstance(c[1], Arrow)]
            pool += [(h, t) for h, t in cons if self._cost(t) == low]
        else:
            pool = cands + heads
        if not pool:
            raise ValueError(f"no closed term of sort {b}")
        h, t = rng.choice(pool)
        doms, _ = split_type(t)
        args = [self.term(d, depth - 1, env) for d in doms]
        if self.redexes and depth > 1 and rng.random() < 0.1 and doms:
            x = self._fresh()
            d0 = doms[0]
            body = h
            for a in [Var(x)] + args[1:]:
                body = App(body, a)
            return App(Abs(x, d0, body), args[0])
        out: Term = h
        for a in args:
            out = App(out, a)
        return out

    def _cheap(self, t: SimpleType) -> bool:
        return all(split_type(d)[1] in self.min_depth for d in split_type(t)[0])

    def _cost(self, t: SimpleType) -> int:
        return max((self.min_depth[split_type(d)[1]] for d in split_type(t)[0]), default=-1)

    def constructor_term(self, b: Sort, depth: int = 4) -> Term:
        """Ground constructor term; arrow-typed arguments become constant functions."""
        rng = self.rng
        heads = [(c, s) for c, s in self.sys.constructors.items() if s.output == b]
        if depth <= 0:
            heads = [(c, s) for c, s in heads if all(split_type(a)[1] in self.min_depth for a in s.plain_args)]
            heads.sort(key=lambda cs: max((self.min_depth[split_type(a)[1]] for a in cs[1].plain_args), default=-1))
            heads = heads[:1]
        if not heads:
            raise ValueError(f"sort {b} has no constructors")
        c, sig = rng.choice(heads)
        out: Term = Cons(c)
        for a in sig.plain_args:
            out = App(out, self.constant_function(a, depth - 1))
        return out

    def constant_function(self, ty: SimpleType, depth: int) -> Term:
        doms, b = split_type(ty)
        body = self.constructor_term(b, depth)
        for d in reversed(doms):
            body = Abs(self._fresh(), d, body)
        return body
