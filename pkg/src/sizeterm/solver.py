"""Size-constraint solving in the successor algebra.

Subtyping problems reduce to size problems ``a <= b``. A size problem is
rewritten into a five-part configuration (unconstrained variables,
variables forced to infinity, variables forced onto a constant, integer
constraints, remaining affine constraints), from which satisfiability
and a most general solution are read off.
"""
from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

import networkx as nx
import numpy as np

from .annotations import AArrow, ASort, AnnotatedType
from .sizes import (
    INF,
    BExpr,
    BTerm,
    Infinity,
    NExpr,
    Size,
    SizeConst,
    SizeExpr,
    SizeVar,
    leq_inf,
    to_bterm,
)

NEG = -math.inf


class _Bottom:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "BOTTOM"

    def __bool__(self) -> bool:
        return False


BOTTOM = _Bottom()

SizeProblem = Union[list, _Bottom]  # list of (SizeExpr, SizeExpr)


class Unsat(Exception):
    """Raised when a problem has no solution."""

    def __init__(self, message: str, trace: Optional[list] = None) -> None:
        super().__init__(message)
        self.trace = trace or []


# ------------------------------------------------------------- subtyping

def reduce_subtyping(pairs: Iterable[tuple[AnnotatedType, AnnotatedType]]) -> SizeProblem:
    """Size problem with the same solutions as a set of subtyping constraints."""
    out: list = []
    stack = list(pairs)
    stack.reverse()
    while stack:
        t, u = stack.pop()
        if isinstance(t, ASort) and isinstance(u, ASort):
            if t.sort != u.sort:
                return BOTTOM
            out.append((t.size, u.size))
        elif isinstance(t, AArrow) and isinstance(u, AArrow):
            stack.append((t.cod, u.cod))
            stack.append((u.dom, t.dom))
        else:
            return BOTTOM
    return out


def subtype(t: AnnotatedType, u: AnnotatedType) -> bool:
    p = reduce_subtyping([(t, u)])
    return p is not BOTTOM and all(leq_inf(a, b) for a, b in p)


def satisfies(phi: Mapping[SizeVar, SizeExpr], problem: SizeProblem) -> bool:
    from .sizes import apply_subst

    if problem is BOTTOM:
        return False
    return all(leq_inf(apply_subst(a, phi), apply_subst(b, phi)) for a, b in problem)


# ------------------------------------------------------------ constraints

@dataclass(frozen=True)
class AConstraint:
    lhs: BExpr
    rhs: BExpr

    def __str__(self) -> str:
        return f"{self.lhs} <= {self.rhs}"


@dataclass(frozen=True)
class IConstraint:
    """``lhs <= rhs`` over integers; each side has at most one variable."""

    lhs: NExpr
    rhs: NExpr

    def __str__(self) -> str:
        return f"{self.lhs} <= {self.rhs}"


def _avar(b: BExpr) -> Optional[SizeVar]:
    if b is INF or not isinstance(b.head, SizeVar):
        return None
    return b.head


def _avars(c: AConstraint) -> set[SizeVar]:
    return {v for v in (_avar(c.lhs), _avar(c.rhs)) if v is not None}


# -------------------------------------------------------------- graphs

@dataclass
class ConstraintGraph:
    """Weighted digraph over variables, integer variables, constants, ``0`` and ``inf``."""

    nodes: set = field(default_factory=set)
    edges: list = field(default_factory=list)  # (u, v, weight); weight may be math.inf

    def add(self, u, v, w) -> None:
        self.nodes.update((u, v))
        self.edges.append((u, v, w))

    def reach(self, src) -> set:
        adj = defaultdict(list)
        for u, v, _ in self.edges:
            adj[u].append(v)
        seen, todo = {src}, [src]
        while todo:
            x = todo.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        return seen


ZERO = "0"
INF_NODE = "inf"


def _ivar(name: str) -> tuple:
    return ("x", name)


def build_graph(problem: Sequence) -> ConstraintGraph:
    """Graph of a problem mixing size constraints and integer constraints."""
    g = ConstraintGraph()
    for c in problem:
        if isinstance(c, tuple):
            c = AConstraint(to_bterm(c[0]), to_bterm(c[1]))
        if isinstance(c, IConstraint):
            u = _ivar(c.lhs.var) if c.lhs.var else ZERO
            v = _ivar(c.rhs.var) if c.rhs.var else ZERO
            g.add(u, v, c.lhs.offset - c.rhs.offset)
            for side in (c.lhs, c.rhs):
                if side.var:
                    g.add(ZERO, _ivar(side.var), 0)
            continue
        a, b = c.lhs, c.rhs
        for t in (a, b):
            if t is not INF:
                if isinstance(t.head, SizeVar):
                    g.add(t.head, INF_NODE, math.inf)
                for x in t.count.vars:
                    g.add(ZERO, _ivar(x), 0)
        if b is INF or not isinstance(b.head, SizeVar):
            if a is not INF:
                g.nodes.add(a.head)
            continue
        if a is INF:
            g.add(INF_NODE, b.head, 0)
        elif isinstance(a.head, SizeVar):
            g.add(a.head, b.head, a.count.offset - b.count.offset)
        else:
            g.add(a.head, b.head, 0)
    return g


def has_positive_cycle(g: ConstraintGraph, method: str = "bellman-ford") -> bool:
    if method == "maxplus":
        return _positive_cycle_maxplus(g)
    if method != "bellman-ford":
        raise ValueError(f"unknown method {method}")
    dg = nx.MultiDiGraph()
    dg.add_nodes_from(g.nodes)
    for u, v, w in g.edges:
        dg.add_edge(u, v, w=w)
    comp = {}
    for i, scc in enumerate(nx.strongly_connected_components(dg)):
        for n in scc:
            comp[n] = i
    finite = nx.DiGraph()
    for u, v, w in g.edges:
        if comp[u] != comp[v]:
            continue
        if w == math.inf:
            return True
        if u == v:
            if w > 0:
                return True
            continue
        # keep the heaviest parallel edge, negated for a negative-cycle search
        if not finite.has_edge(u, v) or finite[u][v]["w"] > -w:
            finite.add_edge(u, v, w=-w)
    return finite.number_of_edges() > 0 and nx.negative_edge_cycle(finite, weight="w")


def _mp_mul_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise max-plus product ``a + b`` with ``-inf`` absorbing."""
    with np.errstate(invalid="ignore"):
        s = a + b
    s[np.isneginf(a) | np.isneginf(b)] = NEG
    return s


def maxplus_closure(m: np.ndarray) -> np.ndarray:
    """Floyd-Warshall in the (max, +) dioid, starting from the identity."""
    n = m.shape[0]
    c = m.astype(float).copy()
    for i in range(n):
        c[i, i] = max(c[i, i], 0.0)
    for k in range(n):
        c = np.maximum(c, _mp_mul_add(c[:, [k]], c[[k], :]))
    return c


def _positive_cycle_maxplus(g: ConstraintGraph) -> bool:
    nodes = sorted(g.nodes, key=repr)
    idx = {n: i for i, n in enumerate(nodes)}
    m = np.full((len(nodes), len(nodes)), NEG)
    for u, v, w in g.edges:
        m[idx[u], idx[v]] = max(m[idx[u], idx[v]], w)
    c = maxplus_closure(m)
    return bool(np.any(np.diag(c) > 0))


def incompatible_triples(problem: Sequence) -> set[tuple]:
    """Triples ``(alpha, c, d)`` with distinct constants both below ``alpha``."""
    g = build_graph(problem)
    below = defaultdict(set)
    for n in g.nodes:
        if isinstance(n, SizeConst):
            for m in g.reach(n):
                if isinstance(m, SizeVar):
                    below[m].add(n)
    out = set()
    for v, cs in below.items():
        for c in cs:
            for d in cs:
                if c != d:
                    out.add((v, c, d))
    return out


# --------------------------------------------------------- configurations

@dataclass
class Configuration:
    c0: set = field(default_factory=set)
    c1: set = field(default_factory=set)
    c2: dict = field(default_factory=dict)  # SizeVar -> SizeConst
    c3: set = field(default_factory=set)  # IConstraint
    c4: set = field(default_factory=set)  # AConstraint

    def __str__(self) -> str:
        def names(s):
            return "{" + ", ".join(sorted(str(v) for v in s)) + "}"
        c2 = "{" + ", ".join(f"{v}:{c}" for v, c in sorted(self.c2.items())) + "}"
        c3 = "{" + ", ".join(sorted(str(c) for c in self.c3)) + "}"
        c4 = "{" + ", ".join(sorted(str(c) for c in self.c4)) + "}"
        return f"({names(self.c0)}, {names(self.c1)}, {c2}, {c3}, {c4})"

    def check_invariants(self) -> None:
        v4 = set().union(*(_avars(c) for c in self.c4)) if self.c4 else set()
        parts = [set(self.c0), set(self.c1), set(self.c2), v4]
        for i in range(4):
            for j in range(i + 1, 4):
                if parts[i] & parts[j]:
                    raise AssertionError(f"configuration parts overlap: {parts[i] & parts[j]}")
        n3 = {v for c in self.c3 for v in c.lhs.vars + c.rhs.vars}
        n4 = set()
        for c in self.c4:
            for t in (c.lhs, c.rhs):
                if t is not INF:
                    n4.update(t.count.vars)
        allowed = {v.name for v in self.c2}
        if not n3 <= allowed or not n4 <= allowed:
            raise AssertionError("integer variables not tied to constant-forced variables")
        if n3 != allowed:
            raise AssertionError("every constant-forced variable must appear in the integer constraints")


RULE_DROP_INF = "_inf"
RULE_INF_ALPHA1 = "inf_alpha1"
RULE_INF_ALPHA2 = "inf_alpha2"
RULE_INF_C = "inf_c"
RULE_CD = "cd"
RULE_CC = "cc"
RULE_ALPHA_C = "alpha_c"


@dataclass
class NormalizationResult:
    config: Optional[Configuration]  # None means bottom
    trace: list  # (rule name, detail)

    @property
    def is_bottom(self) -> bool:
        return self.config is None

    @property
    def rules(self) -> list[str]:
        return [r for r, _ in self.trace]


class _Normalizer:
    def __init__(self, constraints: Iterable[AConstraint], all_vars: set) -> None:
        self.all_vars = set(all_vars)
        self.c1: set = set()
        self.c2: dict = {}
        self.c3: set = set()
        self.c4: set = set()
        self.occ: dict = defaultdict(set)
        self.trace: list = []
        self.work: deque = deque(constraints)
        self.assign: dict = {}  # variables already moved to C1 or C2

    def _resolve(self, c: AConstraint) -> AConstraint:
        a, b = c.lhs, c.rhs
        for v in _avars(c):
            if v in self.assign:
                a, b = _replace(a, v, self.assign[v]), _replace(b, v, self.assign[v])
        return AConstraint(a, b)

    # -- C4 bookkeeping
    def _add4(self, c: AConstraint) -> None:
        if c in self.c4:
            return
        self.c4.add(c)
        for v in _avars(c):
            self.occ[v].add(c)

    def _remove4(self, c: AConstraint) -> None:
        self.c4.discard(c)
        for v in _avars(c):
            self.occ[v].discard(c)

    def _substitute(self, v: SizeVar, value: BExpr) -> None:
        touched = list(self.occ.pop(v, ()))
        for c in touched:
            self._remove4(c)
            self.work.append(AConstraint(_replace(c.lhs, v, value), _replace(c.rhs, v, value)))

    def _force_inf(self, v: SizeVar, rule: str, why: str, record: bool = True) -> None:
        self.c1.add(v)
        self.assign[v] = INF
        if record:
            self.trace.append((rule, f"{v} := inf ({why})"))
        self._substitute(v, INF)

    # -- local rules
    def local(self) -> bool:
        while self.work:
            c = self._resolve(self.work.popleft())
            a, b = c.lhs, c.rhs
            if b is INF:
                self.trace.append((RULE_DROP_INF, str(c)))
                continue
            if a is INF:
                if isinstance(b.head, SizeConst):
                    self.trace.append((RULE_INF_C, str(c)))
                    return False
                self._force_inf(b.head, RULE_INF_ALPHA1, f"{c}")
                continue
            if isinstance(a.head, SizeConst) and isinstance(b.head, SizeConst):
                if a.head != b.head:
                    self.trace.append((RULE_CD, str(c)))
                    return False
                ic = IConstraint(a.count, b.count)
                self.c3.add(ic)
                self.trace.append((RULE_CC, f"{c} gives {ic}"))
                continue
            if isinstance(a.head, SizeVar) and isinstance(b.head, SizeConst):
                v = a.head
                self.c2[v] = b.head
                ic = IConstraint(NExpr(a.count.offset, (v.name,)), b.count)
                self.c3.add(ic)
                self.trace.append((RULE_ALPHA_C, f"{v} := s^x_{v} {b.head}; {ic}"))
                self.assign[v] = BTerm(NExpr(0, (v.name,)), b.head)
                self._substitute(v, self.assign[v])
                continue
            self._add4(c)
        return True

    # -- global rules
    def _graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        for c in self.c4:
            a, b = c.lhs, c.rhs
            w = a.count.offset - b.count.offset if isinstance(a.head, SizeVar) else 0
            if g.has_edge(a.head, b.head):
                g[a.head][b.head]["w"] = max(g[a.head][b.head]["w"], w)
            else:
                g.add_edge(a.head, b.head, w=w)
        return g

    def incompatible(self) -> bool:
        """Force to infinity the topmost variables lying above two distinct constants."""
        g = self._graph()
        cond = nx.condensation(g)
        members = cond.graph["mapping"]
        consts_below = defaultdict(set)
        bad_above = defaultdict(bool)
        roots = []
        for comp in nx.topological_sort(cond):
            nodes = cond.nodes[comp]["members"]
            here = consts_below[comp] | {n for n in nodes if isinstance(n, SizeConst)}
            bad_vars = sorted(n for n in nodes if isinstance(n, SizeVar)) if len(here) > 1 else []
            if bad_vars and not bad_above[comp]:
                roots.append((bad_vars[0], sorted(c.name for c in here)))
            for succ_comp in cond.successors(comp):
                consts_below[succ_comp] |= here
                bad_above[succ_comp] |= bad_above[comp] or bool(bad_vars)
        for v, cs in roots:
            self._force_inf(v, RULE_INF_ALPHA2, f"constants {', '.join('#' + c for c in cs)} below it")
        return bool(roots)

    def cycles(self) -> bool:
        g = self._graph()
        g.remove_nodes_from([n for n in list(g.nodes) if isinstance(n, SizeConst)])
        hit = []
        for scc in nx.strongly_connected_components(g):
            sub = g.subgraph(scc)
            pos = False
            for u, v, d in sub.edges(data=True):
                if u == v and d["w"] > 0:
                    pos = True
                    break
            if not pos and len(scc) > 1:
                neg = nx.DiGraph()
                neg.add_weighted_edges_from(((u, v, -d["w"]) for u, v, d in sub.edges(data=True) if u != v), weight="w")
                pos = nx.negative_edge_cycle(neg, weight="w")
            if pos:
                hit.append(scc)
        for scc in hit:
            names = sorted(scc)
            self.trace.append((RULE_INF_ALPHA1, f"positive cycle through {', '.join(map(str, names))}"))
            for v in names:
                self._force_inf(v, RULE_INF_ALPHA1, "", record=False)
        return bool(hit)

    def run(self) -> NormalizationResult:
        while True:
            if not self.local():
                return NormalizationResult(None, self.trace)
            if self.incompatible():
                continue
            if self.cycles():
                continue
            break
        v4 = set(v for v, cs in self.occ.items() if cs)
        c0 = self.all_vars - self.c1 - set(self.c2) - v4
        cfg = Configuration(c0, set(self.c1), dict(self.c2), set(self.c3), set(self.c4))
        return NormalizationResult(cfg, self.trace)


def _replace(t: BExpr, v: SizeVar, value: BExpr) -> BExpr:
    if t is INF or t.head != v:
        return t
    if value is INF:
        return INF
    return BTerm(t.count.add(value.count), value.head)


def problem_vars(problem: Sequence) -> set[SizeVar]:
    out = set()
    for a, b in problem:
        for t in (a, b):
            if isinstance(t, Size) and isinstance(t.head, SizeVar):
                out.add(t.head)
            elif isinstance(t, BTerm) and isinstance(t.head, SizeVar):
                out.add(t.head)
    return out


def _as_constraints(problem: Sequence) -> list[AConstraint]:
    out = []
    for c in problem:
        if isinstance(c, AConstraint):
            out.append(c)
        else:
            a, b = c
            out.append(AConstraint(a if isinstance(a, (BTerm, Infinity)) else to_bterm(a),
                                   b if isinstance(b, (BTerm, Infinity)) else to_bterm(b)))
    return out


def normalize_configuration(problem: SizeProblem) -> NormalizationResult:
    """Rewrite ``(∅, ∅, ∅, ∅, P)`` to a normal configuration, or to bottom."""
    if problem is BOTTOM:
        return NormalizationResult(None, [("bottom", "input problem is bottom")])
    cs = _as_constraints(problem)
    vs = set().union(*(_avars(c) for c in cs)) if cs else set()
    return _Normalizer(cs, vs).run()


def satisfiable(problem: SizeProblem) -> bool:
    res = normalize_configuration(problem)
    if res.is_bottom:
        return False
    return not has_positive_cycle(build_graph(list(res.config.c3)))


# -------------------------------------------------------- integer problems

def integer_problem(problem: Sequence) -> list[IConstraint]:
    """Integer constraints of an affine problem (``x_a`` stands for the successor count of ``a``)."""
    out = []
    for c in _as_constraints(problem):
        a, b = c.lhs, c.rhs
        if a is INF or b is INF or not isinstance(b.head, SizeVar) or b.count.vars:
            raise ValueError(f"constraint {c} is not affine")
        rhs = NExpr(b.count.offset, (b.head.name,))
        if isinstance(a.head, SizeVar):
            if a.count.vars:
                raise ValueError(f"constraint {c} is not admissible")
            out.append(IConstraint(NExpr(a.count.offset, (a.head.name,)), rhs))
        else:
            out.append(IConstraint(a.count, rhs))
    return out


@dataclass
class MaxPlusResult:
    variables: list  # integer variable names, in matrix order
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    astar: Optional[np.ndarray]
    solution: Optional[dict]  # name -> int, None when unsatisfiable
    reason: str = ""

    @property
    def astar_b(self) -> Optional[np.ndarray]:
        if self.astar is None:
            return None
        if not len(self.b):
            return np.zeros(0)
        return np.max(_mp_mul_add(self.astar, self.b[None, :]), axis=1)


def _ordered_vars(problem: Sequence[IConstraint], variables: Optional[Sequence[str]]) -> list[str]:
    seen = list(variables or [])
    for c in problem:
        for v in c.lhs.vars + c.rhs.vars:
            if v not in seen:
                seen.append(v)
    return seen


def _matrices(problem: Sequence[IConstraint], names: list[str]):
    idx = {v: i for i, v in enumerate(names)}
    n = len(names)
    a = np.full((n, n), NEG)
    b = np.zeros(n)
    c = np.full(n, math.inf)
    const_ok = True
    for ic in problem:
        k = ic.lhs.offset - ic.rhs.offset
        x, y = ic.lhs.var, ic.rhs.var
        if x and y:
            a[idx[y], idx[x]] = max(a[idx[y], idx[x]], k)
        elif y:
            b[idx[y]] = max(b[idx[y]], k)
        elif x:
            c[idx[x]] = min(c[idx[x]], -k)
        elif k > 0:
            const_ok = False
    return a, b, c, const_ok


def maxplus_smallest(problem: Sequence[IConstraint], variables: Optional[Sequence[str]] = None) -> MaxPlusResult:
    """Smallest natural-number solution as ``a* ⊗ b`` in the (max, +) dioid.

    ``a[i, j]`` is the largest ``k`` with ``x_j + k <= x_i``, ``b`` the
    lower bounds (at least 0) and ``c`` the upper bounds.
    """
    names = _ordered_vars(problem, variables)
    a, b, c, const_ok = _matrices(problem, names)
    if not const_ok:
        return MaxPlusResult(names, a, b, c, None, None, "constant constraint violated")
    star = maxplus_closure(a)
    if np.any(np.diag(star) > 0):
        return MaxPlusResult(names, a, b, c, None, None, "positive cycle")
    res = MaxPlusResult(names, a, b, c, star, None)
    x = res.astar_b
    if np.any(x > c):
        res.reason = "upper bound violated"
        return res
    res.solution = {v: int(x[i]) for i, v in enumerate(names)}
    return res


def longest_path_smallest(problem: Sequence[IConstraint], variables: Optional[Sequence[str]] = None) -> Optional[dict]:
    """Same solution as ``maxplus_smallest`` through Bellman-Ford longest paths (for large inputs)."""
    names = _ordered_vars(problem, variables)
    a, b, c, const_ok = _matrices(problem, names) if len(names) < 300 else (None, None, None, None)
    g = nx.DiGraph()
    src = ("source",)
    g.add_node(src)
    lower = defaultdict(int)
    upper: dict = {}
    for v in names:
        g.add_node(v)
    for ic in problem:
        k = ic.lhs.offset - ic.rhs.offset
        x, y = ic.lhs.var, ic.rhs.var
        if x and y:
            if x == y:
                if k > 0:
                    return None
                continue
            if not g.has_edge(x, y) or g[x][y]["w"] > -k:
                g.add_edge(x, y, w=-k)
        elif y:
            lower[y] = max(lower[y], k)
        elif x:
            upper[x] = min(upper.get(x, math.inf), -k)
        elif k > 0:
            return None
    for v in names:
        g.add_edge(src, v, w=-lower[v])
    try:
        dist = nx.single_source_bellman_ford_path_length(g, src, weight="w")
    except nx.NetworkXUnbounded:
        return None
    sol = {v: int(-dist[v]) for v in names}
    if any(sol[v] > u for v, u in upper.items()):
        return None
    return sol


def smallest_integer_solution(problem: Sequence[IConstraint], variables: Optional[Sequence[str]] = None,
                              method: str = "auto") -> Optional[dict]:
    names = _ordered_vars(problem, variables)
    if method == "auto":
        method = "maxplus" if len(names) <= 200 else "bellman-ford"
    if method == "maxplus":
        return maxplus_smallest(problem, names).solution
    return longest_path_smallest(problem, names)


# ------------------------------------------------------------------- lift

def _classes(c4: Iterable[AConstraint]) -> list[set]:
    g = nx.Graph()
    for c in c4:
        g.add_edge(c.lhs.head, c.rhs.head)
    return [set(cc) for cc in nx.connected_components(g)]


def lift_affine_solution(problem: Sequence, psi: Mapping[str, int]) -> dict:
    """Turn an integer solution of an affine problem into a size substitution.

    Each connected class of the constraint graph gets one head: its
    constant if there is one, otherwise its least variable.
    """
    cs = _as_constraints(problem)
    out = {}
    for cls in _classes(cs):
        consts = sorted((h for h in cls if isinstance(h, SizeConst)), key=lambda c: c.name)
        if len(consts) > 1:
            raise ValueError(f"class {sorted(map(str, cls))} holds several constants")
        vs = sorted(h for h in cls if isinstance(h, SizeVar))
        rep = consts[0] if consts else vs[0]
        for v in vs:
            out[v] = Size(psi.get(v.name, 0), rep)
    return out


# -------------------------------------------------------------------- mgs

@dataclass
class MgsResult:
    subst: dict
    config: Configuration
    integer_solution: dict
    repaired: bool
    trace: list
    maxplus: Optional[MaxPlusResult] = None


def _multi_constant_vars(c4: set) -> set:
    """Variables reachable from a constant inside classes holding two constants or more."""
    out = set()
    for cls in _classes(c4):
        if sum(isinstance(h, SizeConst) for h in cls) < 2:
            continue
        g = nx.DiGraph()
        for c in c4:
            if c.lhs.head in cls:
                g.add_edge(c.lhs.head, c.rhs.head)
        for h in cls:
            if isinstance(h, SizeConst):
                out |= {v for v in nx.descendants(g, h) if isinstance(v, SizeVar)}
    return out


def mgs_detail(problem: SizeProblem, method: str = "auto") -> MgsResult:
    """Most general solution with the intermediate data; raises ``Unsat``."""
    res = normalize_configuration(problem)
    if res.is_bottom:
        raise Unsat("normalization reached bottom", res.trace)
    cfg, trace, repaired = res.config, list(res.trace), False
    pvars = problem_vars(problem) if problem is not BOTTOM else set()
    while True:
        bad = _multi_constant_vars(cfg.c4)
        if not bad:
            break
        repaired = True
        n = _Normalizer([], pvars)
        n.c1, n.c2, n.c3 = set(cfg.c1), dict(cfg.c2), set(cfg.c3)
        n.assign = {v: INF for v in cfg.c1}
        n.assign.update({v: BTerm(NExpr(0, (v.name,)), c) for v, c in cfg.c2.items()})
        for c in cfg.c4:
            n._add4(c)
        for v in sorted(bad):
            n._force_inf(v, "repair", "class with several constants")
        sub = n.run()
        trace += sub.trace
        if sub.is_bottom:  # pragma: no cover - forcing infinity keeps the problem satisfiable
            raise Unsat("repair reached bottom", trace)
        cfg = sub.config
    iprob = list(cfg.c3) + integer_problem(list(cfg.c4))
    names = sorted(v.name for v in cfg.c2) + sorted({v.name for c in cfg.c4 for v in _avars(c)})
    mp = None
    if method == "maxplus" or (method == "auto" and len(names) <= 200):
        mp = maxplus_smallest(iprob, names)
        sol = mp.solution
    else:
        sol = longest_path_smallest(iprob, names)
    if sol is None:
        raise Unsat("integer constraints have no solution", trace)
    subst: dict = {v: Size(0, v) for v in cfg.c0}
    subst.update({v: INF for v in cfg.c1})
    subst.update({v: Size(sol[v.name], c) for v, c in cfg.c2.items()})
    subst.update(lift_affine_solution(list(cfg.c4), sol))
    return MgsResult(subst, cfg, sol, repaired, trace, mp)


def mgs(problem: SizeProblem, method: str = "auto") -> dict:
    """Most general solution of a size problem (raises ``Unsat``)."""
    return mgs_detail(problem, method).subst


def mgs_subtyping(pairs: Iterable[tuple[AnnotatedType, AnnotatedType]]) -> dict:
    return mgs(reduce_subtyping(pairs))


def solution_value(phi: Mapping[SizeVar, SizeExpr], v: SizeVar) -> SizeExpr:
    return phi.get(v, Size(0, v))


__all__ = [
    "BOTTOM", "AConstraint", "IConstraint", "Configuration", "ConstraintGraph", "MaxPlusResult", "MgsResult",
    "NormalizationResult", "Unsat", "build_graph", "has_positive_cycle", "incompatible_triples",
    "integer_problem", "lift_affine_solution", "longest_path_smallest", "maxplus_closure", "maxplus_smallest",
    "mgs", "mgs_detail", "mgs_subtyping", "normalize_configuration", "reduce_subtyping", "satisfiable",
    "satisfies", "smallest_integer_solution", "subtype",
]
