"""Lifted syntax: formulas, effects, operator schemata and domains.

Terms are plain strings: ``?x`` is a variable, ``@c`` a constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

Params = tuple  # tuple[tuple[str, str], ...] of (variable, type)


def is_var(term: str) -> bool:
    return term.startswith("?")


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple = ()
    loc: tuple = field(default=(0, 0), compare=False, repr=False)

    def __str__(self):
        return f"({self.pred}{''.join(' ' + a for a in self.args)})"


@dataclass(frozen=True)
class Truth:
    pass


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Imply:
    cond: "Formula"
    then: "Formula"


@dataclass(frozen=True)
class Exists:
    params: Params
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    params: Params
    body: "Formula"


@dataclass(frozen=True)
class Eq:
    left: str
    right: str


Formula = Union[Atom, Truth, Not, And, Or, Imply, Exists, Forall, Eq]


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self):
        return str(self.atom) if self.positive else f"(not {self.atom})"


@dataclass(frozen=True)
class ForallEffect:
    """``(forall (?v - t) [(when static-cond] lit...))``; the condition may only use ``=``."""

    params: Params
    condition: Optional[Formula]
    literals: tuple


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    arg_types: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.arg_types)


@dataclass(frozen=True)
class OperatorSchema:
    name: str
    params: Params = ()
    pre: Formula = Truth()
    eff: tuple = ()
    ucond: tuple = ()
    ueff: tuple = ()
    oneof: tuple = ()  # groups of ueff indices of which exactly one holds

    @property
    def controller(self) -> str:
        return self.name.split("~", 1)[0]

    def pre_literals(self) -> frozenset:
        """Preconditions as signed literals; only for conjunctive preconditions."""
        lits = conjunctive_literals(self.pre)
        if lits is None:
            raise ValueError(f"precondition of {self.name} is not a conjunction of literals")
        return frozenset(lits)

    def eff_literals(self) -> frozenset:
        return frozenset(e for e in self.eff if isinstance(e, Literal))


@dataclass(frozen=True)
class DerivedPredicate:
    """An axiom: the head takes the first ``arity`` params, the rest are existential."""

    name: str
    params: Params
    condition: Formula
    arity: int

    @property
    def head(self) -> tuple:
        return tuple(v for v, _ in self.params[: self.arity])


@dataclass(frozen=True)
class Domain:
    name: str = "domain"
    types: tuple = ()  # (type, parent-or-None), sorted
    predicates: tuple = ()  # base PredicateSchema, in first-seen order
    constants: tuple = ()  # (name, type), sorted
    schemata: tuple = ()
    axioms: tuple = ()
    goal: Optional[Formula] = None
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def schema(self, name: str) -> OperatorSchema:
        for s in self.schemata:
            if s.name == name:
                return s
        raise KeyError(name)

    def predicate(self, name: str) -> PredicateSchema:
        for p in self.predicates:
            if p.name == name:
                return p
        raise KeyError(name)


def conjunctive_literals(f: Formula):
    """Flatten ``f`` into signed literals if it is a conjunction of literals, else None."""
    if isinstance(f, Truth):
        return []
    if isinstance(f, Atom):
        return [Literal(f, True)]
    if isinstance(f, Not) and isinstance(f.arg, Atom):
        return [Literal(f.arg, False)]
    if isinstance(f, And):
        out = []
        for g in f.args:
            sub = conjunctive_literals(g)
            if sub is None:
                return None
            out.extend(sub)
        return out
    return None


def formula_atoms(f: Formula):
    """Yield (atom, scope-params) for every atom in ``f``."""
    stack = [(f, ())]
    while stack:
        g, scope = stack.pop()
        if isinstance(g, Atom):
            yield g, scope
        elif isinstance(g, Not):
            stack.append((g.arg, scope))
        elif isinstance(g, (And, Or)):
            stack.extend((a, scope) for a in reversed(g.args))
        elif isinstance(g, Imply):
            stack.append((g.then, scope))
            stack.append((g.cond, scope))
        elif isinstance(g, (Exists, Forall)):
            stack.append((g.body, scope + g.params))


def mentions_fluent(f: Formula) -> bool:
    return any(True for _ in formula_atoms(f))
