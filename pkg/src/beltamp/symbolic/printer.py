"""Render a :class:`Domain` back to text that parses to the same domain."""

from __future__ import annotations

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
)


def _params(params) -> str:
    return " ".join(f"{v} - {t}" for v, t in params)


def format_formula(f) -> str:
    if isinstance(f, Atom):
        return str(f)
    if isinstance(f, Truth):
        return "(and)"
    if isinstance(f, Not):
        return f"(not {format_formula(f.arg)})"
    if isinstance(f, And):
        return "(and " + " ".join(format_formula(g) for g in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(format_formula(g) for g in f.args) + ")"
    if isinstance(f, Imply):
        return f"(imply {format_formula(f.cond)} {format_formula(f.then)})"
    if isinstance(f, Exists):
        return f"(exists ({_params(f.params)}) {format_formula(f.body)})"
    if isinstance(f, Forall):
        return f"(forall ({_params(f.params)}) {format_formula(f.body)})"
    if isinstance(f, Eq):
        return f"(= {f.left} {f.right})"
    raise TypeError(f"not a formula: {f!r}")


def _format_effect(e) -> str:
    if isinstance(e, Literal):
        return str(e)
    body = "(and " + " ".join(str(x) for x in e.literals) + ")"
    if e.condition is not None:
        body = f"(when {format_formula(e.condition)} {body})"
    return f"(forall ({_params(e.params)}) {body})"


def format_schema(s: OperatorSchema) -> str:
    lines = [f"(:action {s.name}", f" :parameters ({_params(s.params)})"]
    lines.append(f" :precondition {format_formula(s.pre)}")
    lines.append(" :effects (and " + " ".join(_format_effect(e) for e in s.eff) + ")")
    if s.ucond:
        lines.append(" :uconds (and " + " ".join(map(str, s.ucond)) + ")")
    if s.ueff:
        grouped = {i for g in s.oneof for i in g}
        parts = [str(a) for i, a in enumerate(s.ueff) if i not in grouped]
        parts += ["(oneof " + " ".join(str(s.ueff[i]) for i in g) + ")" for g in s.oneof]
        lines.append(" :ueffects (and " + " ".join(parts) + ")")
    return "\n".join(lines) + ")"


def format_domain(d: Domain) -> str:
    out = [f"(define (domain {d.name})"]
    typed = [f"{t} - {p}" for t, p in d.types if p is not None]
    bare = [t for t, p in d.types if p is None]
    out.append(" (:types " + " ".join(typed + bare) + ")")
    preds = []
    for p in d.predicates:
        args = " ".join(f"?a{i} - {t}" for i, t in enumerate(p.arg_types))
        preds.append(f"({p.name}{' ' + args if args else ''})")
    out.append(" (:predicates " + " ".join(preds) + ")")
    for ax in d.axioms:
        out.append(
            f" (:axiom {ax.name}\n  :parameters ({_params(ax.params)})\n"
            f"  :condition {format_formula(ax.condition)})"
        )
    for s in d.schemata:
        out.append(" " + format_schema(s).replace("\n", "\n "))
    if d.goal is not None:
        out.append(f" (:reward {format_formula(d.goal)})")
    return "\n".join(out) + ")\n"
