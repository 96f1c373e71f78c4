"""Successor size algebra with a top element, plus its integer-iterator extension."""
from __future__ import annotations

import itertools
import re
import threading
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union


@dataclass(frozen=True, order=True)
class SizeVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class SizeConst:
    """A size constant. ``frozen`` marks constants standing for eigenvariables."""

    name: str
    frozen: bool = False

    def __str__(self) -> str:
        return self.name if self.frozen else f"#{self.name}"


Head = Union[SizeVar, SizeConst]


class Infinity:
    _instance: Optional["Infinity"] = None

    def __new__(cls) -> "Infinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()


@dataclass(frozen=True)
class Size:
    """``s^iters head`` with a variable or constant head."""

    iters: int
    head: Head

    def __post_init__(self) -> None:
        if self.iters < 0:
            raise ValueError("negative iteration count")

    def __str__(self) -> str:
        return " ".join(["s"] * self.iters + [str(self.head)])


SizeExpr = Union[Size, Infinity]
SizeSubst = dict  # SizeVar -> SizeExpr


@dataclass(frozen=True)
class UnsupportedSize:
    """Annotation text outside the successor algebra (``+``, ``max``, numerals...)."""

    text: str

    def __str__(self) -> str:
        return f"<unsupported: {self.text}>"


def var(name: str, iters: int = 0) -> Size:
    return Size(iters, SizeVar(name))


def const(name: str, iters: int = 0, frozen: bool = False) -> Size:
    return Size(iters, SizeConst(name, frozen))


def succ(a: SizeExpr, k: int = 1) -> SizeExpr:
    if a is INF:
        return INF
    return Size(a.iters + k, a.head)


def is_finite(a: SizeExpr) -> bool:
    return a is not INF


def size_vars(a: SizeExpr) -> set[SizeVar]:
    if isinstance(a, Size) and isinstance(a.head, SizeVar):
        return {a.head}
    return set()


# ---------------------------------------------------------------- ordering

def leq(a: SizeExpr, b: SizeExpr) -> Optional[int]:
    """Return ``k`` with ``b = s^k a`` when it exists (finite operands only)."""
    if a is INF or b is INF:
        return None
    if a.head != b.head or b.iters < a.iters:
        return None
    return b.iters - a.iters


def lt(a: SizeExpr, b: SizeExpr) -> bool:
    k = leq(a, b)
    return k is not None and k > 0


def leq_inf(a: SizeExpr, b: SizeExpr) -> bool:
    return b is INF or leq(a, b) is not None


def lt_inf(a: SizeExpr, b: SizeExpr) -> bool:
    """Strict order extended with infinity: finite sizes sit below it."""
    if b is INF:
        return a is not INF
    return lt(a, b)


# ---------------------------------------------------------- substitutions

def apply_subst(a: SizeExpr, phi: Mapping[SizeVar, SizeExpr]) -> SizeExpr:
    if a is INF or not isinstance(a.head, SizeVar):
        return a
    img = phi.get(a.head)
    if img is None:
        return a
    return succ(img, a.iters)


def compose(phi: Mapping[SizeVar, SizeExpr], psi: Mapping[SizeVar, SizeExpr]) -> SizeSubst:
    """Substitution applying ``phi`` first, then ``psi``."""
    out: SizeSubst = {v: apply_subst(e, psi) for v, e in phi.items()}
    for v, e in psi.items():
        out.setdefault(v, e)
    return out


def subst_vars(phi: Mapping[SizeVar, SizeExpr]) -> set[SizeVar]:
    out = set(phi)
    for e in phi.values():
        out |= size_vars(e)
    return out


@dataclass(frozen=True)
class SuccHeadDecomp:
    succ_part: dict
    head_part: dict

    def recompose(self, v: SizeVar) -> SizeExpr:
        h = self.head_part[v]
        return INF if h is INF else Size(self.succ_part[v], h)


def decompose(phi: Mapping[SizeVar, SizeExpr]) -> SuccHeadDecomp:
    s, h = {}, {}
    for v, e in phi.items():
        if e is INF:
            s[v], h[v] = 0, INF
        else:
            s[v], h[v] = e.iters, e.head
    return SuccHeadDecomp(s, h)


def more_general(
    phi: Mapping[SizeVar, SizeExpr],
    psi: Mapping[SizeVar, SizeExpr],
    variables: Optional[Iterable[SizeVar]] = None,
) -> Optional[dict]:
    """Look for a renaming ``rho`` with ``phi rho <=inf psi`` pointwise.

    Variables outside a substitution's domain are mapped to themselves.
    The renaming is built head by head: every variable heading some
    ``phi(a)`` must be sent to the head shared by the finite ``psi(a)``.
    """
    vs = set(phi) | set(psi) if variables is None else set(variables)
    dphi = {v: phi.get(v, Size(0, v)) for v in vs}
    dpsi = {v: psi.get(v, Size(0, v)) for v in vs}
    rho: dict = {}
    pending: dict = {}
    for v in sorted(vs):
        a, b = dphi[v], dpsi[v]
        if a is INF:
            if b is not INF:
                return None
            continue
        if isinstance(a.head, SizeConst):
            if not leq_inf(a, b):
                return None
            continue
        pending.setdefault(a.head, []).append((a.iters, b))
    for h, uses in pending.items():
        target = None
        for n, b in uses:
            if b is INF:
                continue
            if b.iters < n:
                return None
            if target is None:
                target = b.head
            elif target != b.head:
                return None
        rho[h] = INF if target is None else Size(0, target)
    for v in vs:
        if not leq_inf(apply_subst(dphi[v], rho), dpsi[v]):
            return None
    return rho


# ------------------------------------------------------ fresh name supply

class FreshNames:
    """Thread-safe counter for fresh size variables and constants.

    User-written names never start with an underscore, so ``_N`` names
    cannot collide with them.
    """

    def __init__(self, prefix: str = "_") -> None:
        self._counter = itertools.count()
        self._lock = threading.Lock()
        self.prefix = prefix

    def _next(self) -> int:
        with self._lock:
            return next(self._counter)

    def var(self, hint: str = "") -> SizeVar:
        return SizeVar(f"{self.prefix}{hint}{self._next()}")

    def const(self, hint: str = "") -> SizeConst:
        return SizeConst(f"{self.prefix}{hint}{self._next()}")


# ----------------------------------------------- two-sorted iterator terms

@dataclass(frozen=True, order=True)
class NExpr:
    """Integer expression ``offset + sum(x_v for v in vars)``.

    Admissible solver terms carry at most one integer variable; ``var``
    exposes it.
    """

    offset: int = 0
    vars: tuple = ()

    @property
    def var(self) -> Optional[str]:
        if len(self.vars) > 1:
            raise ValueError("expression has several integer variables")
        return self.vars[0] if self.vars else None

    def plus(self, k: int) -> "NExpr":
        return NExpr(self.offset + k, self.vars)

    def add(self, other: "NExpr") -> "NExpr":
        return NExpr(self.offset + other.offset, tuple(sorted(self.vars + other.vars)))

    def evaluate(self, val: Mapping[str, int]) -> int:
        return self.offset + sum(val[v] for v in self.vars)

    def __str__(self) -> str:
        parts = [f"x_{v}" for v in self.vars]
        if self.offset or not parts:
            parts.append(str(self.offset))
        return "+".join(parts)


@dataclass(frozen=True)
class BTerm:
    """Normal form ``s^count head`` of a successor-iterator term of sort A."""

    count: NExpr
    head: Head

    @property
    def admissible(self) -> bool:
        nv = len(self.count.vars) + isinstance(self.head, SizeVar)
        return nv <= 1

    def __str__(self) -> str:
        c = self.count
        if not c.vars:
            return " ".join(["s"] * c.offset + [str(self.head)])
        return f"s^({c}) {self.head}"


BExpr = Union[BTerm, Infinity]


class NonAdmissible(ValueError):
    pass


# raw terms fed to normalize_b
@dataclass(frozen=True)
class RS:
    """successor ``s t``"""
    arg: object


@dataclass(frozen=True)
class RIter:
    """iterator ``s^n t`` with ``n`` a raw integer term"""
    n: object
    arg: object


@dataclass(frozen=True)
class NZero:
    pass


@dataclass(frozen=True)
class NSucc:
    arg: object


@dataclass(frozen=True)
class NVar:
    name: str


def _norm_n(t) -> NExpr:
    if isinstance(t, NExpr):
        return t
    if isinstance(t, int):
        return NExpr(t)
    if isinstance(t, NZero):
        return NExpr(0)
    if isinstance(t, NSucc):
        return _norm_n(t.arg).plus(1)
    if isinstance(t, NVar):
        return NExpr(0, (t.name,))
    raise TypeError(f"not an integer term: {t!r}")


def normalize_b(t, *, require_admissible: bool = True) -> BExpr:
    """Normal form under ``s^0 a = a``, ``s^x (s^y a) = s^(x+y) a`` and ``s^x (s a) = s (s^x a)``.

    All iterations collapse into one integer count in front of the head.
    """
    count = NExpr(0)
    while True:
        if t is INF:
            return INF
        if isinstance(t, RS):
            count, t = count.plus(1), t.arg
        elif isinstance(t, RIter):
            count, t = count.add(_norm_n(t.n)), t.arg
        elif isinstance(t, (SizeVar, SizeConst)):
            out = BTerm(count, t)
            break
        elif isinstance(t, Size):
            out = BTerm(count.plus(t.iters), t.head)
            break
        elif isinstance(t, BTerm):
            out = BTerm(count.add(t.count), t.head)
            break
        else:
            raise TypeError(f"not a size term: {t!r}")
    if require_admissible and not out.admissible:
        raise NonAdmissible(f"term {out} has more than one variable")
    return out


def to_bterm(a: SizeExpr) -> BExpr:
    return INF if a is INF else BTerm(NExpr(a.iters), a.head)


def from_bterm(b: BExpr, val: Optional[Mapping[str, int]] = None) -> SizeExpr:
    if b is INF:
        return INF
    n = b.count.evaluate(val or {}) if b.count.vars else b.count.offset
    return Size(n, b.head)


# ------------------------------------------------------------- text syntax

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_']*\Z")


def parse_size(text: str) -> Union[SizeExpr, UnsupportedSize]:
    """Parse ``inf``, ``s ... s v`` or ``s ... s #c``; anything else is unsupported."""
    toks = text.split()
    if not toks:
        return UnsupportedSize(text)
    *succs, last = toks
    if any(t != "s" for t in succs):
        return UnsupportedSize(text)
    if last == "inf":
        return INF
    if last.startswith("#") and _IDENT.match(last[1:]):
        return Size(len(succs), SizeConst(last[1:]))
    if _IDENT.match(last) and last != "s":
        return Size(len(succs), SizeVar(last))
    return UnsupportedSize(text)


def format_size(a) -> str:
    return str(a)


def format_subst(phi: Mapping[SizeVar, SizeExpr]) -> str:
    items = ", ".join(f"{v} := {e}" for v, e in sorted(phi.items(), key=lambda kv: kv[0].name))
    return "{" + items + "}"
