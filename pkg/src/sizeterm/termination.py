"""Per-rule termination conditions and system verdicts."""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import networkx as nx

from .annotations import (
    ASort,
    AnnotatedType,
    ConstructorSignature,
    FunctionSignature,
    a_arrows,
    annotate,
    lift,
    validate_function_signature,
)
from .inference import CheckResult, Precedence, check
from .sizes import INF, FreshNames, Size, SizeExpr, SizeVar, apply_subst
from .syntax import (
    Abs,
    Arrow,
    Cons,
    Diagnostic,
    Rule,
    SimpleType,
    Sort,
    Term,
    Var,
    free_vars,
    pattern_env,
    spine,
)
from .system import RewriteSystem, functions_in

YES, MAYBE, INVALID, UNSUPPORTED = "YES", "MAYBE", "INVALID-INPUT", "UNSUPPORTED"


# ---------------------------------------------------------- accessibility

@dataclass(frozen=True)
class AccessibilityTriple:
    term: Term
    type: SimpleType
    sort: Optional[Sort]  # None: measured in a sort left free (argument annotated by infinity)


def _full_constructor_app(system: RewriteSystem, t: Term) -> Optional[tuple[ConstructorSignature, list]]:
    h, args = spine(t)
    if isinstance(h, Cons) and h.name in system.constructors:
        sig = system.constructors[h.name]
        if len(args) == sig.arity:
            return sig, args
    return None


def accessible_triples(t: Term, ty: SimpleType, system: RewriteSystem, measured: Optional[Sort] = None) -> set:
    """Closure of the accessible-subterm relation starting from ``(t, ty, measured)``.

    ``measured`` defaults to ``ty`` when ``ty`` is a sort.
    """
    if measured is None and isinstance(ty, Sort):
        measured = ty
    start = AccessibilityTriple(t, ty, measured)
    out, todo = {start}, [start]
    while todo:
        cur = todo.pop()
        if not isinstance(cur.type, Sort) or cur.type != cur.sort:
            continue
        hit = _full_constructor_app(system, cur.term)
        if hit is None:
            continue
        sig, args = hit
        for i, a in enumerate(args):
            if not sig.is_accessible(i):
                continue
            ti = sig.plain_args[i]
            if sig.is_recursive(i):
                b = cur.sort
            elif sig.alphas[i] is not INF:
                b = sig.measured[i]
            else:
                b = None
            nxt = AccessibilityTriple(a, ti, b)
            if nxt not in out:
                out.add(nxt)
                todo.append(nxt)
            if b is None and isinstance(ti, Sort):
                # a free measure may be chosen as the argument's own sort to keep descending
                alt = AccessibilityTriple(a, ti, ti)
                if alt not in out:
                    out.add(alt)
                    todo.append(alt)
    return out


def is_accessible(u: Term, t: Term, ty: SimpleType, system: RewriteSystem) -> bool:
    return any(tr.term == u for tr in accessible_triples(t, ty, system))


# ----------------------------------------------------- recursive subterms

@dataclass(frozen=True)
class RecEntry:
    term: Term
    type: SimpleType
    sort: Sort
    depth: int
    kind: str  # "var", "leaf" or "other"


@dataclass(frozen=True)
class RecursiveSubterms:
    entries: tuple

    @property
    def simple(self) -> bool:
        return all(e.kind in ("var", "leaf") for e in self.entries)

    @property
    def rd(self) -> int:
        return max((e.depth for e in self.entries), default=0)

    @property
    def depths(self) -> dict:
        """Variable -> largest depth at which it occurs."""
        out: dict = {}
        for e in self.entries:
            if e.kind == "var":
                out[e.term.name] = max(out.get(e.term.name, 0), e.depth)
        return out

    def rd_x(self, x: str) -> int:
        return self.depths.get(x, 0)

    def sort_of(self, x: str) -> Optional[Sort]:
        for e in self.entries:
            if e.kind == "var" and e.term.name == x:
                return e.sort
        return None


def recursive_subterms(t: Term, b: Sort, system: RewriteSystem, ty: Optional[SimpleType] = None) -> RecursiveSubterms:
    """Decompose ``t`` through the constructor arguments its size depends on.

    A constructor application ``c u1..un`` with output size ``s^k h`` is
    replaced by its arguments annotated by ``h`` at depth ``+k``; when
    there are none it is a leaf contributing ``k``.
    """
    entries = []
    todo = [(t, ty if ty is not None else b, b, 0)]
    while todo:
        u, uty, srt, d = todo.pop()
        if isinstance(u, Var):
            entries.append(RecEntry(u, uty, srt, d, "var"))
            continue
        hit = _full_constructor_app(system, u) if uty == srt else None
        if hit is None or hit[0].sigma is INF:
            entries.append(RecEntry(u, uty, srt, d, "other"))
            continue
        sig, args = hit
        k = sig.sigma.iters
        contrib = sig.contributing()
        if not contrib:
            entries.append(RecEntry(u, uty, srt, d + k, "leaf"))
            continue
        for i in contrib:
            todo.append((args[i], sig.plain_args[i], sig.measured[i], d + k))
    entries.sort(key=lambda e: (str(e.term), e.depth))
    return RecursiveSubterms(tuple(entries))


def is_simple(t: Term, b: Sort, system: RewriteSystem) -> bool:
    return recursive_subterms(t, b, system).simple


def rd(t: Term, b: Sort, system: RewriteSystem) -> int:
    return recursive_subterms(t, b, system).rd


def rd_x(t: Term, b: Sort, x: str, system: RewriteSystem) -> int:
    return recursive_subterms(t, b, system).rd_x(x)


class SizeError(ValueError):
    pass


def concrete_size(t: Term, system: RewriteSystem, constant_functions: bool = False) -> int:
    """Height-like size of a ground constructor term, folding each constructor's size function.

    With ``constant_functions`` an abstraction whose body ignores its
    parameters is measured by its body.
    """
    if isinstance(t, Abs):
        if constant_functions:
            body = t
            while isinstance(body, Abs):
                if body.var in free_vars(body.body):
                    raise SizeError("abstraction body depends on its parameter")
                body = body.body
            return concrete_size(body, system, constant_functions)
        raise SizeError("higher-order input")
    hit = _full_constructor_app(system, t)
    if hit is None:
        raise SizeError(f"{t} is not a ground constructor term")
    sig, args = hit
    sizes = [0] * sig.arity
    for i in sig.contributing():
        if isinstance(sig.plain_args[i], Arrow) and not constant_functions:
            raise SizeError("higher-order input")
        sizes[i] = concrete_size(args[i], system, constant_functions)
    return sig.size_function(sizes)


# ------------------------------------------------------------- precedence

class PrecedenceError(ValueError):
    pass


def call_graph(system: RewriteSystem) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(system.functions)
    for r in system.rules:
        for h in functions_in(r.rhs):
            g.add_edge(r.head, h)
    return g


def infer_precedence(system: RewriteSystem) -> Precedence:
    """Equivalence classes are the strongly connected parts of the call graph; calls go downwards."""
    g = call_graph(system)
    for d in system.precs:
        for s in (d.left, d.right):
            if s not in system.functions:
                raise PrecedenceError(f"precedence mentions undeclared function {s}")
        g.add_edge(d.right, d.left)
        if d.rel == "~":
            g.add_edge(d.left, d.right)
    cond = nx.condensation(g)
    mapping = cond.graph["mapping"]
    for d in system.precs:
        if d.rel == "<" and mapping[d.left] == mapping[d.right]:
            raise PrecedenceError(f"contradictory precedence: {d.left} < {d.right} but they call each other")
    above = {c: set(nx.descendants(cond, c)) for c in cond.nodes}
    return Precedence(dict(mapping), above)


# ------------------------------------------------------------ rule context

class ContextError(Exception):
    def __init__(self, kind: str, message: str) -> None:
        super().__init__(message)
        self.kind = kind


@dataclass
class RuleContext:
    rule: Rule
    f: str
    gamma: dict  # variable -> AnnotatedType
    var_info: dict  # variable -> (k, measured sort or None, size variable or None)
    phi: dict  # SizeVar -> Size
    n: list
    gammas: list  # SizeVar per termination argument
    subs: list  # RecursiveSubterms per termination argument
    D: list
    rds: list
    target: AnnotatedType
    plain_env: dict
    sig: FunctionSignature = None

    @property
    def alphas(self) -> list:
        return [a.head for a in self.sig.alphas]


def _class_names(q: int, D: list, avoid: set) -> tuple[list, dict]:
    parent: dict = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb, key=repr)] = min(ra, rb, key=repr)

    for j in range(q):
        find(("arg", j))
        for x in D[j]:
            union(("arg", j), ("var", x))
    members: dict = {}
    for node in list(parent):
        members.setdefault(find(node), []).append(node)
    names: dict = {}
    used = set(avoid)
    for root, nodes in members.items():
        vs = sorted(n[1] for n in nodes if n[0] == "var")
        if vs:
            name = vs[0]
        else:
            j = min(n[1] for n in nodes)
            name, i = f"g{j + 1}", 0
            while name in used:
                i += 1
                name = f"g{j + 1}_{i}"
        used.add(name)
        for node in nodes:
            names[node] = SizeVar(name)
    gammas = [names[("arg", j)] for j in range(q)]
    var_alpha = {n[1]: v for n, v in names.items() if n[0] == "var"}
    return gammas, var_alpha


def build_rule_context(rule: Rule, system: RewriteSystem, phi_override: Optional[Mapping] = None) -> RuleContext:
    f = rule.head
    sig = system.functions[f]
    args = rule.args
    if len(args) < sig.q:
        raise ContextError("arity", f"left-hand side has {len(args)} arguments, fewer than the {sig.q} termination arguments")
    penv = pattern_env(rule.lhs, system.symbols)
    subs, D, rds = [], [], []
    for j in range(sig.q):
        rs = recursive_subterms(args[j], sig.measured[j], system)
        subs.append(rs)
        D.append(rs.depths)
        rds.append(rs.rd)
    gammas, var_alpha = _class_names(sig.q, D, set(penv))
    n = [min(D[j].values()) if D[j] else 0 for j in range(sig.q)]
    alphas = [a.head for a in sig.alphas]
    phi = {alphas[j]: Size(n[j], gammas[j]) for j in range(sig.q)}
    if phi_override:
        phi.update(phi_override)
    gamma, info = {}, {}
    for x in sorted(free_vars(rule.rhs)):
        ty = penv[x]
        js = [j for j in range(sig.q) if x in D[j]]
        if js:
            j = js[0]
            b = subs[j].sort_of(x)
            gamma[x] = annotate(ty, b, Size(0, var_alpha[x]))
            info[x] = (j, b, var_alpha[x])
            continue
        found = None
        for k, a in enumerate(args):
            tk = sig.args[k]
            tk_plain = tk.sort if isinstance(tk, ASort) else None
            if tk_plain is None or x not in free_vars(a):
                continue
            for tr in accessible_triples(a, tk_plain, system):
                if tr.term == Var(x) and tr.type == ty:
                    if found is None or (found[1] is None and tr.sort is not None):
                        found = (k, tr.sort)
        if found is not None:
            k, b = found
            if b is None:
                gamma[x] = lift(ty)
                info[x] = (k, None, None)
            else:
                av = SizeVar(x if x not in {g.name for g in gammas} else f"{x}_")
                gamma[x] = annotate(ty, b, Size(0, av))
                info[x] = (k, b, av)
            continue
        ks = [k for k, a in enumerate(args) if a == Var(x)]
        if ks:
            gamma[x] = lift(ty)
            info[x] = (ks[0], None, None)
            continue
        raise ContextError("accessibility", f"variable {x} is not accessible in the left-hand side")
    m = len(args)
    out_sort = sig.result_sort
    target = a_arrows(sig.args[m:], ASort(out_sort.sort, apply_subst(out_sort.size, phi)))
    return RuleContext(rule, f, gamma, info, phi, n, gammas, subs, D, rds, target, penv, sig)


# ------------------------------------------------------------- minimality

@dataclass
class MinimalityResult:
    ok: bool
    failures: list  # (condition letter, argument index, message)

    @property
    def conditions(self) -> list[str]:
        return sorted({c for c, _, _ in self.failures})


def check_minimality(ctx: RuleContext) -> MinimalityResult:
    fails = []
    q = len(ctx.subs)
    nj, gj = [], []
    alphas = ctx.alphas
    for j in range(q):
        if not ctx.subs[j].simple:
            fails.append(("a", j, f"argument {j + 1} is not a simple term"))
        val = ctx.phi.get(alphas[j], INF)
        if val is INF or not isinstance(val.head, SizeVar):
            fails.append(("b", j, f"bound {val} of argument {j + 1} is not a successor of a variable"))
            nj.append(None)
            gj.append(None)
            continue
        nj.append(val.iters)
        gj.append(val.head)
        lo = min(ctx.D[j].values()) if ctx.D[j] else None
        if lo is not None and val.iters > lo:
            fails.append(("c", j, f"argument {j + 1}: {val.iters} successors exceed the smallest variable depth {lo}"))
    for j in range(q):
        for k in range(j + 1, q):
            if gj[j] is None or gj[k] is None or gj[j] != gj[k]:
                continue
            if nj[j] != nj[k] or ctx.rds[j] != ctx.rds[k] or ctx.D[j] != ctx.D[k]:
                fails.append(("d", j, f"arguments {j + 1} and {k + 1} share {gj[j]} but differ in successors, depth or variable depths"))
    for x, (_, _, av) in sorted(ctx.var_info.items()):
        if av is None:
            continue
        for j in range(q):
            if gj[j] == av and x not in ctx.D[j]:
                fails.append(("e", j, f"argument {j + 1} is bounded by {av}, the size of {x}, but {x} does not occur in it"))
    return MinimalityResult(not fails, fails)


@dataclass
class MinimalityWitness:
    kappa: dict  # variable -> size of its instance
    beta: dict  # Γ variable -> value of its size variable
    c: list  # value of gamma_j
    constraints: dict  # constraint number -> bool
    actual: list  # measured size of each instantiated termination argument

    @property
    def ok(self) -> bool:
        return all(self.constraints.values())


def minimality_witness(ctx: RuleContext, kappa: Mapping[str, int], actual: Sequence[int]) -> MinimalityWitness:
    """Valuation built as in the sufficiency proof, checked against the five numeric constraints.

    ``kappa`` gives the size of each pattern variable's instance and
    ``actual`` the measured size of each instantiated termination argument.
    """
    q = len(ctx.subs)
    alphas = ctx.alphas
    n = [ctx.phi[alphas[j]].iters for j in range(q)]
    g = [ctx.phi[alphas[j]].head for j in range(q)]
    c = []
    for j in range(q):
        top = max([ctx.rds[j]] + [kappa[x] + d for x, d in ctx.D[j].items()])
        c.append(top - n[j])
    annotated = {x: av for x, (_, _, av) in ctx.var_info.items() if av is not None}
    beta = {}
    for x, av in annotated.items():
        ms = [m for m in range(q) if g[m] == av]
        if ms:
            beta[x] = c[ms[0]]
        else:
            beta[x] = max(kappa[y] for y, bv in annotated.items() if bv == av)
    cons = {
        1: all(beta[x] == beta[y] for x in annotated for y in annotated if annotated[x] == annotated[y]),
        2: all(c[j] == c[k] for j in range(q) for k in range(q) if g[j] == g[k]),
        3: all(beta[x] == c[k] for x in annotated for k in range(q) if annotated[x] == g[k]),
        4: all(kappa[x] <= beta[x] for x in annotated),
        5: all(c[j] >= 0 and c[j] + n[j] == actual[j] for j in range(q)),
    }
    return MinimalityWitness(dict(kappa), beta, c, cons, list(actual))


# ------------------------------------------------------------------ rules

@dataclass
class RuleVerdict:
    name: str
    rule: str
    monotony: bool = False
    accessibility: bool = False
    minimality: bool = False
    subject_reduction_decrease: bool = False
    diagnostics: list = field(default_factory=list)
    minimality_failures: list = field(default_factory=list)
    context: Optional[RuleContext] = None
    check_result: Optional[CheckResult] = None
    seconds: float = 0.0

    @property
    def verdict(self) -> str:
        ok = self.monotony and self.accessibility and self.minimality and self.subject_reduction_decrease
        return YES if ok else MAYBE

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "rule": self.rule,
            "verdict": self.verdict,
            "monotony": self.monotony,
            "accessibility": self.accessibility,
            "minimality": self.minimality,
            "subject_reduction_decrease": self.subject_reduction_decrease,
            "diagnostics": list(self.diagnostics),
        }


def check_rule(rule: Rule, system: RewriteSystem, prec: Optional[Precedence] = None,
               perm: Optional[Sequence[int]] = None, phi_override: Optional[Mapping] = None) -> RuleVerdict:
    t0 = time.perf_counter()
    v = RuleVerdict(rule.name, str(rule))
    if prec is None:
        prec = infer_precedence(system)
    f = rule.head
    sig = system.functions[f]
    mono = [d for d in validate_function_signature(sig) if d.kind == "monotony"]
    v.monotony = not mono
    v.diagnostics += [str(d) for d in mono]
    try:
        ctx = build_rule_context(rule, system, phi_override)
    except ContextError as e:
        v.diagnostics.append(f"[{e.kind}] {e}")
        v.seconds = time.perf_counter() - t0
        return v
    v.context = ctx
    v.accessibility = True
    mres = check_minimality(ctx)
    v.minimality = mres.ok
    v.minimality_failures = mres.conditions
    v.diagnostics += [f"[minimality ({c})] {msg}" for c, _, msg in mres.failures]
    res = check(system, ctx.gamma, ctx.phi, f, rule.rhs, ctx.target, prec, perm, FreshNames())
    v.check_result = res
    v.subject_reduction_decrease = res.ok
    if not res.ok:
        dump = ", ".join(f"{a} <= {b}" for a, b in res.constraints) if res.step == 2 else ""
        v.diagnostics.append(f"[subject-reduction step {res.step}] {res.reason}" + (f" | constraints: {dump}" if dump else ""))
    v.seconds = time.perf_counter() - t0
    return v


@dataclass
class SystemReport:
    system: str
    verdict: str
    rules: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    precedence: Optional[Precedence] = None
    permutations: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "system": self.system,
            "verdict": self.verdict,
            "rules": [r.to_json() for r in self.rules],
            "diagnostics": list(self.diagnostics),
        }


def _perms_for(system: RewriteSystem, cls: set) -> list:
    qs = [system.functions[f].q for f in cls if f in system.functions]
    q = max(qs, default=0)
    if q <= 1 or q > 6:
        return [None]
    return [None] + [p for p in itertools.permutations(range(q)) if list(p) != list(range(q))]


def check_system(system: RewriteSystem, lex_search: bool = False) -> SystemReport:
    t0 = time.perf_counter()
    rep = SystemReport(system.name, MAYBE)
    if system.unsupported:
        rep.verdict = UNSUPPORTED
        rep.diagnostics = list(system.unsupported)
        return rep
    diags = system.validate()
    rep.diagnostics = [str(d) for d in diags]
    if any(d.kind != "warning" for d in diags):
        rep.verdict = INVALID
        return rep
    try:
        prec = infer_precedence(system)
    except PrecedenceError as e:
        rep.verdict = INVALID
        rep.diagnostics.append(f"[precedence] {e}")
        return rep
    rep.precedence = prec
    verdicts = {r.name: check_rule(r, system, prec) for r in system.rules}
    if lex_search:
        for cls in prec.classes():
            rules = [r for r in system.rules if r.head in cls]
            if not rules or all(verdicts[r.name].verdict == YES for r in rules):
                continue
            for perm in _perms_for(system, cls)[1:]:
                trial = {r.name: check_rule(r, system, prec, perm) for r in rules}
                if all(t.verdict == YES for t in trial.values()):
                    verdicts.update(trial)
                    for fn in cls:
                        rep.permutations[fn] = perm
                    break
    rep.rules = [verdicts[r.name] for r in system.rules]
    rep.verdict = YES if all(v.verdict == YES for v in rep.rules) else MAYBE
    rep.seconds = time.perf_counter() - t0
    return rep
