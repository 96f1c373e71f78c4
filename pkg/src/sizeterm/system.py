"""Rewrite systems: declarations, signatures and rules."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .annotations import (
    ConstructorSignature,
    FunctionSignature,
    constructor_warnings,
    validate_constructor_signature,
    validate_function_signature,
)
from .sizes import UnsupportedSize
from .syntax import (
    Cons,
    Diagnostic,
    Fun,
    Rule,
    SimpleType,
    Sort,
    SortOrder,
    Term,
    Var,
    spine,
    subterms,
    validate_rule,
)


@dataclass(frozen=True)
class PrecDecl:
    left: str
    rel: str  # "<" or "~"
    right: str


@dataclass
class RewriteSystem:
    name: str = "system"
    sorts: dict = field(default_factory=dict)  # name -> Sort
    order: SortOrder = field(default_factory=SortOrder)
    constructors: dict = field(default_factory=dict)  # name -> ConstructorSignature
    functions: dict = field(default_factory=dict)  # name -> FunctionSignature
    precs: list = field(default_factory=list)
    rules: list = field(default_factory=list)
    unsupported: list = field(default_factory=list)  # messages about sizes outside the algebra
    declaration_diagnostics: list = field(default_factory=list)

    @property
    def symbols(self) -> dict:
        out = {c: s.plain_type for c, s in self.constructors.items()}
        out.update({f: s.plain_type for f, s in self.functions.items()})
        return out

    def signature(self, name: str):
        return self.constructors.get(name) or self.functions.get(name)

    def rules_of(self, f: str) -> list:
        return [r for r in self.rules if r.head == f]

    def constructors_of(self, sort: Sort) -> list[ConstructorSignature]:
        return [c for c in self.constructors.values() if c.output == sort]

    def validate(self) -> list[Diagnostic]:
        """All declaration and rule diagnostics (warnings included, tagged ``warning``)."""
        diags = list(self.declaration_diagnostics)
        for sig in self.constructors.values():
            diags += validate_constructor_signature(sig)
            diags += constructor_warnings(sig)
        for sig in self.functions.values():
            diags += validate_function_signature(sig)
        syms = self.symbols
        for r in self.rules:
            diags += [Diagnostic(d.kind, f"rule {r.name}: {d.message}") for d in validate_rule(r, syms)]
        return diags

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.validate() if d.kind != "warning"]

    def union(self, other: "RewriteSystem", name: Optional[str] = None) -> "RewriteSystem":
        """Disjoint union of rule sets; shared declarations must coincide."""
        out = RewriteSystem(name or f"{self.name}+{other.name}")
        out.sorts = {**self.sorts, **other.sorts}
        out.order = SortOrder(self.order.pairs | other.order.pairs)
        for attr in ("constructors", "functions"):
            a, b = getattr(self, attr), getattr(other, attr)
            for k in a.keys() & b.keys():
                if a[k] != b[k]:
                    raise ValueError(f"conflicting declarations for {k}")
            setattr(out, attr, {**a, **b})
        out.precs = list(dict.fromkeys(self.precs + other.precs))
        names = set()
        for r in self.rules + other.rules:
            nm = r.name
            while nm in names:
                nm += "'"
            names.add(nm)
            out.rules.append(Rule(r.lhs, r.rhs, nm))
        out.unsupported = self.unsupported + other.unsupported
        out.declaration_diagnostics = self.declaration_diagnostics + other.declaration_diagnostics
        return out

    def restrict(self, rule_names: set, name: Optional[str] = None) -> "RewriteSystem":
        out = RewriteSystem(name or self.name, dict(self.sorts), SortOrder(self.order.pairs), dict(self.constructors),
                            dict(self.functions), list(self.precs), [r for r in self.rules if r.name in rule_names],
                            list(self.unsupported), list(self.declaration_diagnostics))
        return out


def symbols_in(t: Term) -> set[str]:
    return {u.name for u in subterms(t) if isinstance(u, (Cons, Fun))}


def functions_in(t: Term) -> set[str]:
    return {u.name for u in subterms(t) if isinstance(u, Fun)}
