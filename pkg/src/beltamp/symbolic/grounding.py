"""Grounding schemata over entity pools and the symbolic transition function."""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Optional, Sequence

from ..props import AbstractBelief, Proposition
from .errors import GroundingError, PartialOutcomeError, PropositionNotInUniverse
from .syntax import (
    And,
    Atom,
    Domain,
    Eq,
    Exists,
    Forall,
    Imply,
    Literal,
    Not,
    OperatorSchema,
    Or,
    Truth,
    conjunctive_literals,
    is_var,
)


def _resolve(term: str, env: Mapping[str, str]) -> str:
    if is_var(term):
        try:
            return env[term]
        except KeyError:
            raise GroundingError(f"unbound variable {term}") from None
    return term[1:]


def ground_atom(atom: Atom, env: Mapping[str, str]) -> Proposition:
    return Proposition(atom.pred, tuple(_resolve(a, env) for a in atom.args))


class GroundOperator:
    """A schema with every parameter bound.

    Equality and hashing use only the schema name and the bound arguments.
    """

    __slots__ = (
        "schema", "bindings", "args", "name", "index", "pre_pos", "pre_neg", "pre_formula",
        "add", "delete", "ueff", "oneof", "ucond", "problem", "_hash", "_outcomes",
    )

    def __init__(self, schema: OperatorSchema, args: Sequence[str], pools: Mapping[str, Sequence[str]],
                 index: int = -1, problem: Optional["Problem"] = None):
        self.schema = schema
        self.problem = problem
        self.args = tuple(args)
        self.bindings = tuple((v, a) for (v, _), a in zip(schema.params, self.args))
        self.name = f"{schema.name}({','.join(self.args)})"
        self.index = index
        self._hash = hash((schema.name, self.args))
        self._outcomes = None
        env = dict(self.bindings)

        lits = conjunctive_literals(schema.pre)
        if lits is None:
            self.pre_formula = (schema.pre, env)
            self.pre_pos = self.pre_neg = frozenset()
        else:
            self.pre_formula = None
            self.pre_pos = frozenset(ground_atom(l.atom, env) for l in lits if l.positive)
            self.pre_neg = frozenset(ground_atom(l.atom, env) for l in lits if not l.positive)

        add, delete = set(), set()
        for e in schema.eff:
            if isinstance(e, Literal):
                (add if e.positive else delete).add(ground_atom(e.atom, env))
                continue
            for combo in itertools.product(*(pools_for(pools, t) for _, t in e.params)):
                inner = dict(env)
                inner.update(zip((v for v, _ in e.params), combo))
                if e.condition is not None and not _static_holds(e.condition, inner):
                    continue
                for lit in e.literals:
                    (add if lit.positive else delete).add(ground_atom(lit.atom, inner))
        self.ueff = tuple(ground_atom(a, env) for a in schema.ueff)
        ueff_set = set(self.ueff)
        # an add and a delete of the same atom: the add wins, as in STRIPS
        self.delete = frozenset(delete - add - ueff_set)
        self.add = frozenset(add - ueff_set)
        self.oneof = schema.oneof
        self.ucond = tuple(ground_atom(a, env) for a in schema.ucond)

    @property
    def controller(self) -> str:
        return self.schema.controller

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, GroundOperator):
            return NotImplemented
        return self.schema.name == other.schema.name and self.args == other.args

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return (self.schema.name, self.args) < (other.schema.name, other.args)

    def __repr__(self):
        return self.name

    def outcomes(self) -> tuple:
        """Every assignment of the uncertain effects, as 0/1 tuples aligned with ``ueff``."""
        if self._outcomes is None:
            self._outcomes = enumerate_outcomes(len(self.ueff), self.oneof)
        return self._outcomes


def enumerate_outcomes(n: int, groups: Sequence[Sequence[int]] = ()) -> tuple:
    grouped = {i for g in groups for i in g}
    free = [i for i in range(n) if i not in grouped]
    choices = [[((i, 0),), ((i, 1),)] for i in free]
    for g in groups:
        choices.append([tuple((j, int(j == i)) for j in g) for i in g])
    out = []
    for combo in itertools.product(*choices):
        bits = [0] * n
        for part in combo:
            for i, v in part:
                bits[i] = v
        out.append(tuple(bits))
    out.sort()
    return tuple(out)


def _static_holds(f, env) -> bool:
    if isinstance(f, Eq):
        return _resolve(f.left, env) == _resolve(f.right, env)
    if isinstance(f, Not):
        return not _static_holds(f.arg, env)
    if isinstance(f, And):
        return all(_static_holds(g, env) for g in f.args)
    if isinstance(f, Or):
        return any(_static_holds(g, env) for g in f.args)
    if isinstance(f, Truth):
        return True
    raise GroundingError(f"condition is not static: {f!r}")


def pools_for(pools: Mapping[str, Sequence[str]], t: str) -> Sequence[str]:
    try:
        return pools[t]
    except KeyError:
        raise GroundingError(f"no entity pool for type {t!r}") from None


def ground_schema(schema: OperatorSchema, entities: Mapping[str, Sequence[str]],
                  continuous: Optional[Mapping[str, Sequence[str]]] = None, problem=None) -> list:
    """All type-correct bindings of ``schema``, ordered by pool position."""
    pools = dict(entities)
    pools.update(continuous or {})
    lists = [pools_for(pools, t) for _, t in schema.params]
    return [GroundOperator(schema, combo, pools, problem=problem) for combo in itertools.product(*lists)]


def applicable(op: GroundOperator, b: AbstractBelief, universe=None) -> bool:
    if universe is not None:
        for p in itertools.chain(op.pre_pos, op.pre_neg):
            if p not in universe:
                raise PropositionNotInUniverse(p)
    if op.pre_formula is not None:
        if op.problem is None:
            raise GroundingError(f"{op.name} has a non-conjunctive precondition but no problem")
        f, env = op.pre_formula
        return op.problem.holds(f, b, env)
    t = b.true
    return op.pre_pos <= t and op.pre_neg.isdisjoint(t)


def _psi_bits(op: GroundOperator, psi) -> tuple:
    n = len(op.ueff)
    if type(psi) is tuple and len(psi) == n:
        return psi
    if isinstance(psi, Mapping):
        missing = [p for p in op.ueff if p not in psi]
        if missing:
            raise PartialOutcomeError(f"outcome for {op.name} misses {missing}")
        return tuple(int(psi[p]) for p in op.ueff)
    bits = tuple(int(x) for x in psi)
    if len(bits) != n:
        raise PartialOutcomeError(f"{op.name} has {n} uncertain effects, got {len(bits)} values")
    return bits


def apply_outcome(b: AbstractBelief, op: GroundOperator, psi=()) -> AbstractBelief:
    bits = _psi_bits(op, psi)
    true = (b.true - op.delete) | op.add
    if op.ueff:
        on = {p for p, v in zip(op.ueff, bits) if v}
        true = (true - set(op.ueff)) | on
    out = AbstractBelief(true)
    problem = op.problem
    if problem is not None and problem.derived_props:
        out = problem.derive(out)
    return out


def outcome_bits(op: GroundOperator, b: AbstractBelief) -> tuple:
    """The uncertain-effect assignment observed in ``b``."""
    return tuple(1 if p in b.true else 0 for p in op.ueff)


class Problem:
    """A domain grounded against concrete entity and parameter pools.

    ``objects`` maps each type to its entities; ``streams`` names the types
    whose pools hold sampled continuous parameters and may grow.
    """

    def __init__(self, domain: Domain, objects: Mapping[str, Iterable[str]], streams: Iterable[str] = ()):
        self.domain = domain
        self.parents = {t: p for t, p in domain.types}
        self.direct: dict = {t: list(v) for t, v in objects.items()}
        for c, t in domain.constants:
            lst = self.direct.setdefault(t, [])
            if c not in lst:
                lst.append(c)
        self.streams = frozenset(streams)
        self._build()

    # -- pools and universe

    def _is_sub(self, t, u):
        seen = set()
        while t is not None and t not in seen:
            if t == u:
                return True
            seen.add(t)
            t = self.parents.get(t)
        return False

    def pool(self, t: str) -> tuple:
        return self.pools[t]

    def _build(self):
        types = set(self.direct) | set(self.parents)
        self.pools = {}
        for t in sorted(types):
            items = []
            for u in self.direct:
                if self._is_sub(u, t):
                    items.extend(x for x in self.direct[u] if x not in items)
            self.pools[t] = tuple(items)
        universe = []
        for p in self.domain.predicates:
            for combo in itertools.product(*(self._pool_or_empty(t) for t in p.arg_types)):
                universe.append(Proposition(p.name, combo))
        self.derived_props = []
        for ax in self.domain.axioms:
            for combo in itertools.product(*(self._pool_or_empty(t) for _, t in ax.params[: ax.arity])):
                self.derived_props.append((ax, Proposition(ax.name, combo)))
        universe.extend(p for _, p in self.derived_props)
        self.universe = tuple(universe)
        self.universe_set = frozenset(universe)
        self.derived_set = frozenset(p for _, p in self.derived_props)

        old = {op: op for op in getattr(self, "operators", ())}
        ops = []
        for s in self.domain.schemata:
            for op in ground_schema(s, self.pools, problem=self):
                op.index = len(ops)
                ops.append(op)
        self.operators = tuple(ops)
        self.by_name = {op.name: op for op in ops}
        self._new_ops = [op for op in ops if op not in old]
        self._index()

    def _pool_or_empty(self, t):
        return self.pools.get(t, ())

    def _index(self):
        self._trigger: dict = {}
        self._always = []
        for op in self.operators:
            if op.pre_formula is None and op.pre_pos:
                key = min(op.pre_pos)
                self._trigger.setdefault(key, []).append(op)
            else:
                self._always.append(op)
        self._app_cache: dict = {}
        self._succ_cache: dict = {}

    def add_parameter(self, t: str, value: str) -> list:
        """Add a sampled parameter to stream ``t``; returns the new ground operators."""
        if t not in self.streams:
            raise GroundingError(f"{t!r} is not a continuous stream")
        self.direct.setdefault(t, []).append(value)
        self._build()
        return list(self._new_ops)

    def operator(self, name: str) -> GroundOperator:
        return self.by_name[name]

    # -- evaluation

    def applicable_ops(self, b: AbstractBelief) -> tuple:
        hit = self._app_cache.get(b)
        if hit is not None:
            return hit
        cands = list(self._always)
        for p in b.true:
            cands.extend(self._trigger.get(p, ()))
        cands.sort(key=lambda o: o.index)
        out = tuple(o for o in cands if applicable(o, b))
        if len(self._app_cache) > 200_000:
            self._app_cache.clear()
        self._app_cache[b] = out
        return out

    def outcome_successors(self, b: AbstractBelief) -> tuple:
        """((op, ((psi, b'), ...)), ...) for every applicable operator, memoised."""
        hit = self._succ_cache.get(b)
        if hit is None:
            hit = tuple(
                (op, tuple((psi, apply_outcome(b, op, psi)) for psi in op.outcomes()))
                for op in self.applicable_ops(b)
            )
            if len(self._succ_cache) > 200_000:
                self._succ_cache.clear()
            self._succ_cache[b] = hit
        return hit

    def holds(self, f, b: AbstractBelief, env: Optional[Mapping[str, str]] = None) -> bool:
        env = env or {}
        if isinstance(f, Atom):
            return ground_atom(f, env) in b.true
        if isinstance(f, Truth):
            return True
        if isinstance(f, Not):
            return not self.holds(f.arg, b, env)
        if isinstance(f, And):
            return all(self.holds(g, b, env) for g in f.args)
        if isinstance(f, Or):
            return any(self.holds(g, b, env) for g in f.args)
        if isinstance(f, Imply):
            return (not self.holds(f.cond, b, env)) or self.holds(f.then, b, env)
        if isinstance(f, Eq):
            return _resolve(f.left, env) == _resolve(f.right, env)
        if isinstance(f, (Exists, Forall)):
            names = [v for v, _ in f.params]
            combos = itertools.product(*(self._pool_or_empty(t) for _, t in f.params))
            test = (self.holds(f.body, b, {**env, **dict(zip(names, c))}) for c in combos)
            return any(test) if isinstance(f, Exists) else all(test)
        raise TypeError(f"not a formula: {f!r}")

    def derive(self, b: AbstractBelief) -> AbstractBelief:
        """Recompute derived propositions from the base ones (to a fixpoint)."""
        if not self.derived_props:
            return b
        base = b.true - self.derived_set
        cur = AbstractBelief(base)
        for _ in range(len(self.domain.axioms) + 1):
            derived = set()
            for ax, p in self.derived_props:
                head = dict(zip(ax.head, p.args))
                rest = ax.params[ax.arity:]
                f = Exists(rest, ax.condition) if rest else ax.condition
                if self.holds(f, cur, head):
                    derived.add(p)
            nxt = AbstractBelief(base | derived)
            if nxt == cur:
                break
            cur = nxt
        return cur

    def goal_holds(self, b: AbstractBelief) -> bool:
        if self.domain.goal is None:
            return False
        return self.holds(self.domain.goal, b)

    def belief(self, true: Iterable[Proposition] = ()) -> AbstractBelief:
        """Build an abstract belief, checking membership and deriving axioms."""
        true = list(true)
        for p in true:
            if p not in self.universe_set:
                raise PropositionNotInUniverse(p)
        return self.derive(AbstractBelief(true))
