class DomainError(Exception):
    """Base class for problems found while reading or grounding a domain."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = f"line {line}, col {col}: " if line else ""
        super().__init__(where + message)


class DomainSyntaxError(DomainError):
    pass


class UnknownPredicateError(DomainError):
    pass


class ArityMismatchError(DomainError):
    pass


class TypeMismatchError(DomainError):
    pass


class UnboundVariableError(DomainError):
    pass


class GroundingError(DomainError):
    pass


class PropositionNotInUniverse(KeyError):
    pass


class PartialOutcomeError(ValueError):
    pass
