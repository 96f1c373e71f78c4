"""Text formats: rewrite systems (``.hrs``) and size constraint files (``.cst``)."""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Optional

from .annotations import (
    AArrow,
    ASort,
    AnnotatedType,
    canonical_constructor_signature,
    constructor_from_annotated,
    function_from_annotated,
    strip,
)
from .sizes import INF, SizeExpr, UnsupportedSize, parse_size
from .syntax import (
    Abs,
    App,
    Cons,
    Fun,
    Rule,
    SimpleType,
    Sort,
    Term,
    TypeError_,
    Var,
    pattern_env,
    spine,
    type_check,
)
from .system import PrecDecl, RewriteSystem

KEYWORDS = {"sort", "order", "cons", "fun", "prec", "rule"}


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = "") -> None:
        self.line, self.col, self.source = line, col, source
        where = f"{source}:" if source else ""
        super().__init__(f"{where}{line}:{col}: {message}" if line else f"{where}{message}")


@dataclass(frozen=True)
class Token:
    kind: str  # id, const, sym, num, other, eof
    text: str
    line: int
    col: int
    bol: bool = False  # first token on its line


_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*)"
    r"|(?P<sym>->|<=|[()\\λ:.<~{}=,\[\]])"
    r"|(?P<const>#[A-Za-z][A-Za-z0-9_']*)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<num>[0-9]+)"
    r"|(?P<other>.)"
)


def tokenize(text: str, source: str = "") -> list[Token]:
    out, line, start, bol = [], 1, 0, True
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
            bol = True
            continue
        if kind in ("ws", "comment"):
            continue
        tx = m.group()
        if tx == "λ":
            tx = "\\"
        out.append(Token(kind, tx, line, m.start() - start + 1, bol))
        bol = False
    out.append(Token("eof", "", line, len(text) - start + 1, True))
    return out


class _Parser:
    def __init__(self, text: str, source: str = "") -> None:
        self.toks = tokenize(text, source)
        self.i = 0
        self.source = source

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.cur
        return ParseError(msg, tok.line, tok.col, self.source)

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.cur.kind in ("sym", "id") and self.cur.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected '{text}', found '{self.cur.text or 'end of input'}'")
        return self.next()

    def ident(self, what: str = "identifier") -> Token:
        if self.cur.kind != "id":
            raise self.error(f"expected {what}, found '{self.cur.text or 'end of input'}'")
        return self.next()


# ------------------------------------------------------------------ systems

class _SystemParser(_Parser):
    def __init__(self, text: str, source: str = "", name: str = "system") -> None:
        super().__init__(text, source)
        self.sys = RewriteSystem(name)
        self.rule_count = 0

    def parse(self) -> RewriteSystem:
        while self.cur.kind != "eof":
            tok = self.cur
            if tok.kind != "id" or tok.text not in KEYWORDS or not tok.bol:
                raise self.error(f"expected a declaration, found '{tok.text}'")
            getattr(self, f"decl_{tok.text}")()
        return self.sys

    # declarations
    def _fresh_name(self, tok: Token) -> None:
        n = tok.text
        if n in self.sys.sorts or n in self.sys.constructors or n in self.sys.functions:
            raise self.error(f"duplicate declaration of {n}", tok)

    def decl_sort(self) -> None:
        self.next()
        tok = self.ident("sort name")
        self._fresh_name(tok)
        self.sys.sorts[tok.text] = Sort(tok.text)

    def decl_order(self) -> None:
        self.next()
        a = self.sort_ref()
        self.expect("<")
        b = self.sort_ref()
        try:
            self.sys.order.add(a, b)
        except ValueError as e:
            raise self.error(str(e)) from None

    def sort_ref(self) -> Sort:
        tok = self.ident("sort name")
        if tok.text not in self.sys.sorts:
            raise self.error(f"undeclared sort {tok.text}", tok)
        return self.sys.sorts[tok.text]

    def decl_cons(self) -> None:
        self.next()
        canonical = self._canonical_kw()
        tok = self.ident("constructor name")
        self._fresh_name(tok)
        self.expect(":")
        canonical = self._canonical_kw() or canonical
        t = self.atype()
        doms, out = _a_split(t)
        if not isinstance(out, ASort):  # pragma: no cover
            raise self.error("constructor output must be a sort", tok)
        annotated = any(_has_annotation(x) for x in doms + [out])
        if canonical or not annotated:
            if canonical and annotated:
                raise self.error("a canonical constructor takes a plain type", tok)
            sig = canonical_constructor_signature(tok.text, [strip(d) for d in doms], out.sort, self.sys.order)
        else:
            sig, diags = constructor_from_annotated(tok.text, t, self.sys.order)
            self.sys.declaration_diagnostics += [d for d in diags if d.kind == "annotation"]
        self.sys.constructors[tok.text] = sig

    def _canonical_kw(self) -> bool:
        if self.at("canonical") and (self.toks[self.i + 1].kind == "id" or self.toks[self.i + 1].text == "("):
            self.next()
            return True
        return False

    def decl_fun(self) -> None:
        self.next()
        tok = self.ident("function name")
        self._fresh_name(tok)
        self.expect(":")
        t = self.atype()
        q = None
        if self.at("{"):
            self.next()
            while not self.at("}"):
                key = self.ident("option name")
                self.expect("=")
                val = self.next()
                if key.text != "args" or val.kind != "num":
                    raise self.error(f"unknown option {key.text} = {val.text}", key)
                q = int(val.text)
                if self.at(","):
                    self.next()
            self.expect("}")
        self.sys.functions[tok.text] = function_from_annotated(tok.text, t, q)

    def decl_prec(self) -> None:
        self.next()
        a = self.ident("function name")
        if not (self.at("<") or self.at("~")):
            raise self.error("expected '<' or '~'")
        rel = self.next().text
        b = self.ident("function name")
        for t in (a, b):
            if t.text not in self.sys.functions:
                raise self.error(f"undeclared function {t.text}", t)
        self.sys.precs.append(PrecDecl(a.text, rel, b.text))

    def decl_rule(self) -> None:
        start = self.next()
        self.rule_count += 1
        name = f"r{self.rule_count}"
        if self.at("["):
            self.next()
            name = self.ident("rule name").text
            self.expect("]")
        if any(r.name == name for r in self.sys.rules):
            raise self.error(f"duplicate rule name {name}", start)
        lhs = self.term(set(), lhs=True)
        self.expect("->")
        rhs = self.term(set(), lhs=False)
        rule = Rule(lhs, rhs, name)
        self._resolve_rule(rule, start)
        self.sys.rules.append(rule)

    def _resolve_rule(self, rule: Rule, tok: Token) -> None:
        syms = self.sys.symbols
        h, _ = spine(rule.lhs)
        if not isinstance(h, Fun):
            raise self.error(f"rule {rule.name}: left-hand side must start with a function symbol", tok)
        try:
            env = pattern_env(rule.lhs, syms)
            lt = type_check(env, rule.lhs, syms)
            rt = type_check(env, rule.rhs, syms)
        except TypeError_ as e:
            raise self.error(f"rule {rule.name}: {e}", tok) from None
        if lt != rt:
            raise self.error(f"rule {rule.name}: left-hand side has type {lt} but right-hand side has type {rt}", tok)

    # types
    def atype(self) -> AnnotatedType:
        dom = self.aatom()
        if self.at("->"):
            self.next()
            return AArrow(dom, self.atype())
        return dom

    def aatom(self) -> AnnotatedType:
        if self.at("("):
            self.next()
            t = self.atype()
            self.expect(")")
            return t
        srt = self.sort_ref()
        if self.at("("):
            open_tok = self.next()
            depth, parts = 1, []
            while True:
                tok = self.next()
                if tok.kind == "eof":
                    raise self.error("unclosed size annotation", open_tok)
                if tok.text == "(":
                    depth += 1
                elif tok.text == ")":
                    depth -= 1
                    if depth == 0:
                        break
                parts.append(tok.text)
            text = " ".join(parts)
            size = parse_size(text)
            if isinstance(size, UnsupportedSize):
                self.sys.unsupported.append(
                    f"{open_tok.line}:{open_tok.col}: size annotation '{text}' is outside the successor algebra")
                size = INF
            return ASort(srt, size)
        return ASort(srt)

    def stype(self) -> SimpleType:
        return strip(self.atype())

    # terms
    def term(self, bound: set, lhs: bool) -> Term:
        atoms = []
        while True:
            if self.at("\\"):
                atoms.append(self.lam(bound, lhs))
                break
            a = self.atom(bound, lhs)
            if a is None:
                break
            atoms.append(a)
        if not atoms:
            raise self.error(f"expected a term, found '{self.cur.text or 'end of input'}'")
        t = atoms[0]
        for a in atoms[1:]:
            t = App(t, a)
        return t

    def atom(self, bound: set, lhs: bool) -> Optional[Term]:
        if self.at("("):
            self.next()
            t = self.term(bound, lhs)
            self.expect(")")
            return t
        if self.cur.kind == "id" and not (self.cur.bol and self.cur.text in KEYWORDS):
            n = self.next().text
            if n in bound:
                return Var(n)
            if n in self.sys.constructors:
                return Cons(n)
            if n in self.sys.functions:
                return Fun(n)
            return Var(n)
        return None

    def lam(self, bound: set, lhs: bool) -> Term:
        self.expect("\\")
        x = self.ident("bound variable").text
        self.expect(":")
        ty = self.stype()
        self.expect(".")
        return Abs(x, ty, self.term(bound | {x}, lhs))


def _a_split(t: AnnotatedType) -> tuple[list, AnnotatedType]:
    doms = []
    while isinstance(t, AArrow):
        doms.append(t.dom)
        t = t.cod
    return doms, t


def _has_annotation(t: AnnotatedType) -> bool:
    if isinstance(t, ASort):
        return t.size is not INF
    return _has_annotation(t.dom) or _has_annotation(t.cod)


def parse_system(text: str, name: str = "system", source: str = "") -> RewriteSystem:
    """Parse a rewrite system; raises :class:`ParseError` with a position on failure."""
    return _SystemParser(text, source, name).parse()


def load_system(path) -> RewriteSystem:
    from pathlib import Path

    p = Path(path)
    return parse_system(p.read_text(encoding="utf-8"), p.stem, str(p))


def parse_term(text: str, system: RewriteSystem, bound: Optional[set] = None) -> Term:
    p = _SystemParser(text)
    p.sys = system
    # a lone term has no declarations, so keywords are plain names here
    p.toks = [replace(tok, bol=False) for tok in p.toks]
    t = p.term(set(bound or ()), lhs=False)
    if p.cur.kind != "eof":
        raise p.error(f"unexpected '{p.cur.text}' after term")
    return t


# ------------------------------------------------------------------ printing

def print_type(t: AnnotatedType) -> str:
    return str(t)


def print_system(sys: RewriteSystem) -> str:
    lines = [f"sort {s}" for s in sys.sorts]
    for a, b in sorted(sys.order.pairs):
        lines.append(f"order {a} < {b}")
    for c, sig in sys.constructors.items():
        if sig.canonical:
            lines.append(f"cons canonical {c} : {sig.plain_type}")
        else:
            lines.append(f"cons {c} : {sig.annotated_type}")
    for f, sig in sys.functions.items():
        lines.append(f"fun {f} : {sig.annotated_type} {{ args = {sig.q} }}")
    for d in sys.precs:
        lines.append(f"prec {d.left} {d.rel} {d.right}")
    for r in sys.rules:
        lines.append(f"rule [{r.name}] {r}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------- constraint files

def parse_constraints(text: str, source: str = "") -> list[tuple[SizeExpr, SizeExpr]]:
    """One ``a <= b`` per line; sizes are ``inf``, ``s .. s x`` or ``s .. s #c``."""
    out = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        if line.count("<=") != 1:
            raise ParseError("expected one constraint 'a <= b'", ln, 1, source)
        left, right = (part.strip() for part in line.split("<="))
        sides = []
        for part in (left, right):
            a = parse_size(part)
            if isinstance(a, UnsupportedSize):
                raise ParseError(f"size '{part}' is outside the successor algebra", ln, raw.find(part) + 1, source)
            sides.append(a)
        out.append((sides[0], sides[1]))
    return out


def print_constraints(problem) -> str:
    return "".join(f"{a} <= {b}\n" for a, b in problem)


__all__ = [
    "ParseError",
    "tokenize",
    "parse_system",
    "load_system",
    "parse_term",
    "print_system",
    "print_type",
    "parse_constraints",
    "print_constraints",
]
