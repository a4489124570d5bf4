"""Reader for the operator-schema dialect of PDDL.

Beyond plain STRIPS-style actions it accepts ``:uconds`` and ``:ueffects``,
``(maybe ...)``/``(verify ...)`` uncertain effects, ``(oneof ...)`` groups of
mutually exclusive uncertain effects, ``(:axiom ...)`` derived predicates and
``(:reward ...)`` goal blocks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import (
    ArityMismatchError,
    DomainSyntaxError,
    TypeMismatchError,
    UnboundVariableError,
    UnknownPredicateError,
)
from .sexp import NEG_SIGN, SList, Sym, pos, read_all
from .syntax import (
    And,
    Atom,
    DerivedPredicate,
    Domain,
    Eq,
    Exists,
    Forall,
    ForallEffect,
    Imply,
    Literal,
    Not,
    OperatorSchema,
    Or,
    PredicateSchema,
    Truth,
    is_var,
    mentions_fluent,
)

MAX_UEFFS = 8
DEFAULT_TYPE = "object"

_ACTION_KEYS = {
    ":parameters": "parameters",
    ":precondition": "precondition",
    ":preconditions": "precondition",
    ":effect": "effects",
    ":effects": "effects",
    ":uconds": "uconds",
    ":ueffects": "ueffects",
}


def _err(cls, msg, node):
    line, col = pos(node)
    return cls(msg, line, col)


def _head(node):
    if isinstance(node, SList) and node and isinstance(node[0], Sym):
        return node[0].lower()
    return None


def _is_list(node):
    return isinstance(node, SList)


def _term(tok) -> str:
    if not isinstance(tok, Sym):
        raise _err(DomainSyntaxError, "expected a term", tok)
    if tok.startswith("?") or tok.startswith("@"):
        return str(tok)
    return "@" + tok


# ----------------------------------------------------------------------------
# typed lists


def _typed_list(items, node, *, allow_untyped_names=False):
    """Parse ``?a ?b - t ?c - u`` into [(name, type), ...]."""
    out, pending = [], []
    i = 0
    while i < len(items):
        tok = items[i]
        if _is_list(tok):
            raise _err(DomainSyntaxError, "unexpected list in typed parameter list", tok)
        if tok == "-":
            if i + 1 >= len(items) or _is_list(items[i + 1]) or not pending:
                raise _err(DomainSyntaxError, "dangling '-' in typed list", tok)
            t = str(items[i + 1])
            out.extend((p, t) for p in pending)
            pending = []
            i += 2
            continue
        if not allow_untyped_names and not tok.startswith("?"):
            raise _err(DomainSyntaxError, f"expected a variable, got {tok!r}", tok)
        pending.append(str(tok))
        i += 1
    out.extend((p, DEFAULT_TYPE) for p in pending)
    return tuple(out)


# ----------------------------------------------------------------------------
# formulas


def _children(node, start=1):
    """Children of a list node with ``¬ X`` folded into ``(not X)``."""
    out = []
    items = list(node[start:])
    i = 0
    while i < len(items):
        tok = items[i]
        if tok == NEG_SIGN:
            if i + 1 >= len(items):
                raise _err(DomainSyntaxError, "dangling '¬'", tok)
            out.append(SList([Sym("not", tok.line, tok.col), items[i + 1]], tok.line, tok.col))
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _quantifier_parts(node):
    rest = _children(node)
    if not rest:
        raise _err(DomainSyntaxError, "quantifier without variables", node)
    if _is_list(rest[0]) and rest[0] and isinstance(rest[0][0], Sym) and rest[0][0].startswith("?"):
        if len(rest) != 2:
            raise _err(DomainSyntaxError, "quantifier expects (vars) body", node)
        return _typed_list(list(rest[0]), rest[0]), rest[1]
    if len(rest) < 2:
        raise _err(DomainSyntaxError, "quantifier without body", node)
    return _typed_list(list(rest[:-1]), node), rest[-1]


def parse_formula(node) -> object:
    if isinstance(node, Sym):
        if node.lower() == "true":
            return Truth()
        raise _err(DomainSyntaxError, f"expected a formula, got {node!r}", node)
    if not node:
        raise _err(DomainSyntaxError, "empty formula", node)
    head = _head(node)
    if head is None:
        if node[0] == NEG_SIGN:
            return Not(parse_formula(node[1]))
        raise _err(DomainSyntaxError, "formula must start with a symbol", node)
    kids = _children(node)
    if head == "and":
        parts = tuple(parse_formula(k) for k in kids)
        return And(parts) if parts else Truth()
    if head == "or":
        return Or(tuple(parse_formula(k) for k in kids))
    if head == "not":
        if len(kids) != 1:
            raise _err(DomainSyntaxError, "'not' takes one argument", node)
        return Not(parse_formula(kids[0]))
    if head == "imply":
        if len(kids) != 2:
            raise _err(DomainSyntaxError, "'imply' takes two arguments", node)
        return Imply(parse_formula(kids[0]), parse_formula(kids[1]))
    if head in ("exists", ":exists", "forall", ":forall"):
        params, body = _quantifier_parts(node)
        cls = Exists if "exists" in head else Forall
        return cls(params, parse_formula(body))
    if head == "=":
        if len(kids) != 2:
            raise _err(DomainSyntaxError, "'=' takes two terms", node)
        return Eq(_term(kids[0]), _term(kids[1]))
    if head == "true" and len(node) == 1:
        return Truth()
    return _parse_atom(node)


def _parse_atom(node) -> Atom:
    if not isinstance(node[0], Sym) or node[0].startswith(("?", ":")):
        raise _err(DomainSyntaxError, "expected a predicate name", node)
    args = []
    for a in node[1:]:
        if _is_list(a) or a == NEG_SIGN:
            raise _err(DomainSyntaxError, f"unexpected nested expression in atom ({node[0]} ...)", a)
        args.append(_term(a))
    return Atom(str(node[0]), tuple(args), pos(node))


# ----------------------------------------------------------------------------
# effects


@dataclass
class _Effects:
    lits: list = field(default_factory=list)  # Literal | ForallEffect
    ueff: list = field(default_factory=list)
    oneof: list = field(default_factory=list)  # lists of atoms
    whens: list = field(default_factory=list)  # (condition, _Effects)


def _parse_literal(node):
    head = _head(node)
    if head == "not":
        kids = _children(node)
        if len(kids) != 1 or not _is_list(kids[0]):
            raise _err(DomainSyntaxError, "'not' takes one atom", node)
        return Literal(_parse_atom(kids[0]), False)
    return Literal(_parse_atom(node), True)


def _parse_effects(node, out: _Effects, *, top=True):
    if isinstance(node, Sym):
        if node.lower() == "true":
            return
        raise _err(DomainSyntaxError, f"expected an effect, got {node!r}", node)
    head = _head(node)
    if head is None:
        raise _err(DomainSyntaxError, "malformed effect", node)
    if head == "true" and len(node) == 1:
        return
    if head == "and":
        for k in _children(node):
            _parse_effects(k, out, top=top)
        return
    if head in ("maybe", "verify"):
        for k in _children(node):
            out.ueff.append(_parse_atom(k))
        return
    if head == "oneof":
        raise _err(DomainSyntaxError, "'oneof' is only allowed in :ueffects", node)
    if head in ("forall", ":forall"):
        params, body = _quantifier_parts(node)
        cond = None
        if _head(body) == "when":
            wk = _children(body)
            if len(wk) != 2:
                raise _err(DomainSyntaxError, "'when' takes a condition and an effect", body)
            cond = parse_formula(wk[0])
            if mentions_fluent(cond):
                raise _err(DomainSyntaxError, "conditions inside forall effects may only use '='", body)
            body = wk[1]
        inner = _Effects()
        _parse_effects(body, inner, top=False)
        if inner.ueff or inner.whens or any(isinstance(x, ForallEffect) for x in inner.lits):
            raise _err(DomainSyntaxError, "forall effects must contain plain literals", node)
        out.lits.append(ForallEffect(params, cond, tuple(inner.lits)))
        return
    if head == "when":
        if not top:
            raise _err(DomainSyntaxError, "nested 'when' is not supported", node)
        wk = _children(node)
        if len(wk) != 2:
            raise _err(DomainSyntaxError, "'when' takes a condition and an effect", node)
        cond = parse_formula(wk[0])
        inner = _Effects()
        _parse_effects(wk[1], inner, top=False)
        out.whens.append((cond, inner, node))
        return
    if head in ("increase", "decrease"):
        raise _err(DomainSyntaxError, "numeric effects are only allowed in reward axioms", node)
    out.lits.append(_parse_literal(node))


def _parse_ueffects(node, out: _Effects):
    if isinstance(node, Sym):
        if node.lower() == "true":
            return
        raise _err(DomainSyntaxError, f"expected an uncertain effect, got {node!r}", node)
    head = _head(node)
    if head == "true" and len(node) == 1:
        return
    if head == "and":
        for k in _children(node):
            _parse_ueffects(k, out)
        return
    if head in ("maybe", "verify"):
        for k in _children(node):
            out.ueff.append(_parse_atom(k))
        return
    if head == "oneof":
        group = [_parse_atom(k) for k in _children(node)]
        if len(group) < 2:
            raise _err(DomainSyntaxError, "'oneof' needs at least two atoms", node)
        out.oneof.append(group)
        return
    if head == "not" or head is None:
        raise _err(DomainSyntaxError, ":ueffects literals are unsigned", node)
    out.ueff.append(_parse_atom(node))


def _parse_atom_set(node):
    if isinstance(node, Sym):
        if node.lower() == "true":
            return []
        raise _err(DomainSyntaxError, f"expected atoms, got {node!r}", node)
    head = _head(node)
    if head == "true" and len(node) == 1:
        return []
    if head == "and":
        out = []
        for k in _children(node):
            out.extend(_parse_atom_set(k))
        return out
    if head in ("not", "or", "exists", "forall", "imply"):
        raise _err(DomainSyntaxError, ":uconds must be a conjunction of atoms", node)
    return [_parse_atom(node)]


# ----------------------------------------------------------------------------
# blocks


def _keyword_pairs(items, node, allowed):
    out = {}
    i = 0
    while i < len(items):
        key = items[i]
        if not isinstance(key, Sym) or not key.startswith(":"):
            raise _err(DomainSyntaxError, f"expected a keyword, got {str(key)[:30]!r}", key)
        k = key.lower()
        if k not in allowed:
            raise _err(DomainSyntaxError, f"unknown keyword {key}", key)
        if i + 1 >= len(items):
            raise _err(DomainSyntaxError, f"keyword {key} without a value", key)
        name = allowed[k]
        if name in out:
            raise _err(DomainSyntaxError, f"duplicate keyword {key}", key)
        out[name] = items[i + 1]
        i += 2
    return out


@dataclass
class _RawAction:
    name: str
    params: tuple
    pre: object
    effects: _Effects
    ucond: list
    node: object


def _parse_action(node) -> _RawAction:
    if len(node) < 2 or not isinstance(node[1], Sym):
        raise _err(DomainSyntaxError, "action without a name", node)
    name = str(node[1])
    kv = _keyword_pairs(list(node[2:]), node, _ACTION_KEYS)
    params = ()
    if "parameters" in kv:
        p = kv["parameters"]
        if not _is_list(p):
            raise _err(DomainSyntaxError, ":parameters expects a list", p)
        params = _typed_list(list(p), p)
    pre = parse_formula(kv["precondition"]) if "precondition" in kv else Truth()
    eff = _Effects()
    if "effects" in kv:
        _parse_effects(kv["effects"], eff)
    if "ueffects" in kv:
        _parse_ueffects(kv["ueffects"], eff)
    ucond = _parse_atom_set(kv["uconds"]) if "uconds" in kv else []
    return _RawAction(name, params, pre, eff, ucond, node)


def _dedup(seq):
    seen, out = set(), []
    for x in seq:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def _expand_action(raw: _RawAction) -> list:
    """Expand top-level fluent ``when`` effects into one schema per branch."""
    eff = raw.effects
    variants = []
    for bits in itertools.product((1, 0), repeat=len(eff.whens)):
        pre_parts = [] if isinstance(raw.pre, Truth) else [raw.pre]
        lits = list(eff.lits)
        ueff = list(eff.ueff)
        oneof = [list(g) for g in eff.oneof]
        for bit, (cond, inner, _node) in zip(bits, eff.whens):
            pre_parts.append(cond if bit else Not(cond))
            if bit:
                lits.extend(inner.lits)
                ueff.extend(inner.ueff)
        name = raw.name + ("~" + "".join(map(str, bits)) if bits else "")
        pre = Truth() if not pre_parts else pre_parts[0] if len(pre_parts) == 1 else And(tuple(pre_parts))
        variants.append((name, pre, lits, ueff, oneof))

    out = []
    for name, pre, lits, ueff, oneof in variants:
        grouped = [a for g in oneof for a in g]
        free = [a for a in _dedup(ueff) if a not in grouped]
        ueff_atoms = tuple(free) + tuple(_dedup(grouped))
        if len(set(grouped)) != len(grouped):
            raise _err(DomainSyntaxError, f"atom repeated across oneof groups in {raw.name}", raw.node)
        groups, k = [], len(free)
        for g in oneof:
            groups.append(tuple(range(k, k + len(g))))
            k += len(g)
        if len(ueff_atoms) > MAX_UEFFS:
            raise _err(DomainSyntaxError, f"{raw.name} has {len(ueff_atoms)} uncertain effects (max {MAX_UEFFS})", raw.node)
        ueff_set = set(ueff_atoms)
        eff_items = _dedup(x for x in lits if not (isinstance(x, Literal) and x.atom in ueff_set))
        out.append(
            OperatorSchema(
                name=name,
                params=raw.params,
                pre=pre,
                eff=tuple(eff_items),
                ucond=tuple(_dedup(raw.ucond)),
                ueff=ueff_atoms,
                oneof=tuple(groups),
            )
        )
    return out


def _parse_axiom(node):
    if len(node) < 2 or not isinstance(node[1], Sym):
        raise _err(DomainSyntaxError, "axiom without a name", node)
    name = str(node[1])
    kv = _keyword_pairs(
        list(node[2:]),
        node,
        {":parameters": "parameters", ":condition": "condition", ":context": "context", ":implies": "implies"},
    )
    if "context" in kv or "implies" in kv:
        # reward axiom: (:axiom r :context F :implies (increase (reward) N))
        if "context" not in kv or "implies" not in kv:
            raise _err(DomainSyntaxError, "reward axioms need :context and :implies", node)
        imp = kv["implies"]
        if _head(imp) not in ("increase",):
            raise _err(DomainSyntaxError, ":implies must be (increase (reward) N)", imp)
        return ("reward", parse_formula(kv["context"]))
    if "condition" not in kv:
        raise _err(DomainSyntaxError, "axiom without :condition", node)
    params = ()
    if "parameters" in kv:
        params = _typed_list(list(kv["parameters"]), kv["parameters"])
    return ("axiom", name, params, parse_formula(kv["condition"]), node)


def _parse_reward(node):
    rest = _children(node)
    if not rest:
        raise _err(DomainSyntaxError, "empty reward block", node)
    if isinstance(rest[0], Sym) and rest[0].lower() in (":formula", ":condition"):
        if len(rest) != 2:
            raise _err(DomainSyntaxError, "reward block expects one formula", node)
        return parse_formula(rest[1])
    if len(rest) != 1:
        raise _err(DomainSyntaxError, "reward block expects one formula", node)
    return parse_formula(rest[0])


def _parse_types(node):
    """``(:types a b - parent c)``; trailing names without ``-`` get no parent."""
    out, pending = {}, []
    items = list(node[1:])
    i = 0
    while i < len(items):
        tok = items[i]
        if _is_list(tok):
            raise _err(DomainSyntaxError, "unexpected list in :types", tok)
        if tok == "-":
            if i + 1 >= len(items) or _is_list(items[i + 1]) or not pending:
                raise _err(DomainSyntaxError, "dangling '-' in :types", tok)
            out.update((p, str(items[i + 1])) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(str(tok))
        i += 1
    out.update((p, None) for p in pending)
    return out


def _parse_predicates(node):
    preds = []
    for p in node[1:]:
        if not _is_list(p) or not p or not isinstance(p[0], Sym):
            raise _err(DomainSyntaxError, "malformed predicate declaration", p)
        args = _typed_list(list(p[1:]), p)
        preds.append((PredicateSchema(str(p[0]), tuple(t for _, t in args)), p))
    return preds


# ----------------------------------------------------------------------------
# checking and inference


class _Signatures:
    def __init__(self, declared: dict, derived: dict, parents: dict):
        self.declared = declared  # name -> PredicateSchema
        self.strict = bool(declared)
        self.inferred: dict = {}  # name -> [types or None]
        self.order: list = []
        self.derived = derived  # name -> (params, arity or None)
        self.parents = parents
        self.constants: dict = {}

    def subtype(self, t, u):
        seen = set()
        while t is not None and t not in seen:
            if t == u:
                return True
            seen.add(t)
            t = self.parents.get(t)
        return u == DEFAULT_TYPE

    def slot_types(self, name):
        if name in self.declared:
            return list(self.declared[name].arg_types)
        return self.inferred.get(name)

    def use(self, atom: Atom, scope: dict, where):
        name = atom.pred
        line, col = atom.loc if atom.loc != (0, 0) else where
        known = name in self.declared or name in self.derived
        if not known and self.strict:
            raise UnknownPredicateError(f"unknown predicate {name!r}", line, col)
        if name in self.derived:
            params, arity = self.derived[name]
            if arity is None:
                self.derived[name] = (params, len(atom.args))
                arity = len(atom.args)
            if arity != len(atom.args):
                raise ArityMismatchError(f"{name} expects {arity} arguments, got {len(atom.args)}", line, col)
            slots = [t for _, t in params[:arity]]
        else:
            slots = self.slot_types(name)
            if slots is None:
                slots = [None] * len(atom.args)
                self.inferred[name] = slots
                self.order.append(name)
            if len(slots) != len(atom.args):
                raise ArityMismatchError(f"{name} expects {len(slots)} arguments, got {len(atom.args)}", line, col)
        for k, arg in enumerate(atom.args):
            if is_var(arg):
                if arg not in scope:
                    raise UnboundVariableError(f"variable {arg} in ({name} ...) is not a parameter", line, col)
                t = scope[arg]
                if slots[k] is None:
                    slots[k] = t
                elif not self.subtype(t, slots[k]):
                    raise TypeMismatchError(
                        f"argument {k + 1} of {name}: {arg} has type {t}, expected {slots[k]}", line, col
                    )
            else:
                self.constants.setdefault(arg[1:], (name, k))

    def finish(self):
        preds = []
        if self.strict:
            preds = list(self.declared.values())
        else:
            for name in self.order:
                preds.append(PredicateSchema(name, tuple(t or DEFAULT_TYPE for t in self.inferred[name])))
        by_name = {p.name: p for p in preds}
        consts = {}
        for c, (pname, k) in self.constants.items():
            if pname in by_name:
                consts[c] = by_name[pname].arg_types[k]
            else:
                params, arity = self.derived[pname]
                consts[c] = params[k][1]
        return preds, consts


def _check_formula(f, scope, sig: _Signatures, where):
    from .syntax import formula_atoms

    for atom, qparams in formula_atoms(f):
        local = dict(scope)
        local.update(dict(qparams))
        sig.use(atom, local, where)
    _check_eq_terms(f, scope, where)


def _check_eq_terms(f, scope, where):
    stack = [(f, dict(scope))]
    while stack:
        g, sc = stack.pop()
        if isinstance(g, Eq):
            for t in (g.left, g.right):
                if is_var(t) and t not in sc:
                    raise UnboundVariableError(f"variable {t} in (= ...) is not bound", *where)
        elif isinstance(g, Not):
            stack.append((g.arg, sc))
        elif isinstance(g, (And, Or)):
            stack.extend((a, sc) for a in g.args)
        elif isinstance(g, Imply):
            stack.extend([(g.cond, sc), (g.then, sc)])
        elif isinstance(g, (Exists, Forall)):
            inner = dict(sc)
            inner.update(dict(g.params))
            stack.append((g.body, inner))


def _check_schema(s: OperatorSchema, sig: _Signatures, where):
    scope = dict(s.params)
    _check_formula(s.pre, scope, sig, where)
    for e in s.eff:
        if isinstance(e, Literal):
            sig.use(e.atom, scope, where)
        else:
            inner = dict(scope)
            inner.update(dict(e.params))
            if e.condition is not None:
                _check_eq_terms(e.condition, inner, where)
            for lit in e.literals:
                sig.use(lit.atom, inner, where)
    for a in s.ucond + s.ueff:
        sig.use(a, scope, where)


# ----------------------------------------------------------------------------


def parse_domain(text: str) -> Domain:
    """Parse domain text into a :class:`Domain`.

    Without a ``(:predicates ...)`` block predicate signatures are inferred from
    use; with one, every atom is checked against it.
    """
    nodes = read_all(text)
    name = "domain"
    if len(nodes) == 1 and _head(nodes[0]) == "define":
        body = list(nodes[0][1:])
        if body and _head(body[0]) == "domain" and len(body[0]) == 2:
            name = str(body[0][1])
            body = body[1:]
        nodes = body

    parents: dict = {}
    declared: dict = {}
    raw_actions, raw_axioms, goal = [], [], None
    goal_node = None
    for node in nodes:
        if not _is_list(node):
            raise _err(DomainSyntaxError, f"unexpected token {node!r} at top level", node)
        head = _head(node)
        if head == ":action":
            raw_actions.append(_parse_action(node))
        elif head == ":axiom":
            parsed = _parse_axiom(node)
            if parsed[0] == "reward":
                if goal is not None:
                    raise _err(DomainSyntaxError, "more than one reward block", node)
                goal, goal_node = parsed[1], node
            else:
                raw_axioms.append(parsed[1:])
        elif head == ":reward":
            if goal is not None:
                raise _err(DomainSyntaxError, "more than one reward block", node)
            goal, goal_node = _parse_reward(node), node
        elif head == ":types":
            parents.update(_parse_types(node))
        elif head == ":predicates":
            for p, pnode in _parse_predicates(node):
                if p.name in declared:
                    raise _err(DomainSyntaxError, f"predicate {p.name} declared twice", pnode)
                declared[p.name] = p
        else:
            raise _err(DomainSyntaxError, f"unknown block {node[0] if node else '()'}", node)

    schemata = []
    for raw in raw_actions:
        schemata.extend(_expand_action(raw))
    seen = set()
    for s in schemata:
        if s.name in seen:
            raise DomainSyntaxError(f"action {s.name} defined twice")
        seen.add(s.name)

    derived = {}
    for ax_name, params, _cond, ax_node in raw_axioms:
        if ax_name in derived:
            raise _err(DomainSyntaxError, f"axiom {ax_name} defined twice", ax_node)
        if ax_name in declared:
            raise _err(DomainSyntaxError, f"{ax_name} is both declared and derived", ax_node)
        derived[ax_name] = (params, None)

    sig = _Signatures(declared, derived, parents)
    for raw, s in zip(
        [r for r in raw_actions for _ in range(2 ** len(r.effects.whens))], schemata
    ):
        _check_schema(s, sig, pos(raw.node))
    for ax_name, params, cond, ax_node in raw_axioms:
        _check_formula(cond, dict(params), sig, pos(ax_node))
    if goal is not None:
        _check_formula(goal, {}, sig, pos(goal_node))

    axioms = []
    for ax_name, params, cond, _node in raw_axioms:
        arity = derived[ax_name][1]
        if arity is None:
            arity = len(params)
        if arity > len(params):
            raise _err(ArityMismatchError, f"axiom {ax_name} used with {arity} arguments but has {len(params)} parameters", _node)
        axioms.append(DerivedPredicate(ax_name, params, cond, arity))

    preds, consts = sig.finish()
    all_types = dict(parents)
    for s in schemata:
        for _, t in s.params:
            all_types.setdefault(t, None)
    for p in preds:
        for t in p.arg_types:
            all_types.setdefault(t, None)
    for ax in axioms:
        for _, t in ax.params:
            all_types.setdefault(t, None)
    for t in consts.values():
        all_types.setdefault(t, None)
    types = tuple(sorted(all_types.items(), key=lambda kv: kv[0]))

    return Domain(
        name=name,
        types=types,
        predicates=tuple(preds),
        constants=tuple(sorted(consts.items())),
        schemata=tuple(schemata),
        axioms=tuple(axioms),
        goal=goal,
    )


def parse_formula_text(text: str):
    nodes = read_all(text)
    if len(nodes) != 1:
        raise DomainSyntaxError("expected exactly one formula")
    return parse_formula(nodes[0])
