from .errors import (
    ArityMismatchError,
    DomainError,
    DomainSyntaxError,
    GroundingError,
    PartialOutcomeError,
    PropositionNotInUniverse,
    TypeMismatchError,
    UnboundVariableError,
    UnknownPredicateError,
)
from .grounding import (
    GroundOperator,
    Problem,
    applicable,
    apply_outcome,
    enumerate_outcomes,
    ground_schema,
    outcome_bits,
)
from .parser import parse_domain, parse_formula_text
from .printer import format_domain, format_schema
from .syntax import Domain, OperatorSchema, PredicateSchema

__all__ = [
    "ArityMismatchError", "Domain", "DomainError", "DomainSyntaxError", "GroundOperator",
    "GroundingError", "OperatorSchema", "PartialOutcomeError", "PredicateSchema", "Problem",
    "PropositionNotInUniverse", "TypeMismatchError", "UnboundVariableError", "UnknownPredicateError",
    "applicable", "apply_outcome", "enumerate_outcomes", "format_domain", "format_schema",
    "bundled_domain_text", "bundled_domains", "ground_schema", "outcome_bits", "parse_domain",
    "parse_formula_text",
]


def bundled_domains() -> list:
    """Names of the domain files shipped with the package."""
    from importlib.resources import files

    return sorted(p.name[:-5] for p in files("beltamp.domains").iterdir() if p.name.endswith(".pddl"))


def bundled_domain_text(name: str) -> str:
    from importlib.resources import files

    return files("beltamp.domains").joinpath(f"{name}.pddl").read_text()
