"""Ground propositions and abstract beliefs (truth assignments over them)."""

from __future__ import annotations

from typing import Iterable, Sequence


class Proposition:
    """A ground atom such as ``(At c3_4)``. Interned, so identity implies equality."""

    __slots__ = ("predicate", "args", "_hash")
    _cache: dict = {}

    def __new__(cls, predicate: str, args: Sequence[str] = ()):
        key = (predicate, tuple(args))
        self = cls._cache.get(key)
        if self is None:
            self = object.__new__(cls)
            self.predicate = predicate
            self.args = key[1]
            self._hash = hash(key)
            cls._cache[key] = self
        return self

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Proposition):
            return NotImplemented
        return self.predicate == other.predicate and self.args == other.args

    def __lt__(self, other: "Proposition"):
        return (self.predicate, self.args) < (other.predicate, other.args)

    def __reduce__(self):
        return (Proposition, (self.predicate, self.args))

    def __repr__(self):
        if not self.args:
            return f"({self.predicate})"
        return f"({self.predicate} {' '.join(self.args)})"


def prop(text: str) -> Proposition:
    """Parse ``"(At c1)"`` or ``"At c1"`` into a Proposition."""
    parts = text.strip().strip("()").split()
    return Proposition(parts[0], parts[1:])


class AbstractBelief:
    """Total boolean assignment over a proposition universe.

    Stored as the set of true propositions; every proposition outside the set is
    false, which is what lets the universe grow without touching old beliefs.
    """

    __slots__ = ("true", "_hash")

    def __init__(self, true: Iterable[Proposition] = ()):
        self.true = frozenset(true)
        self._hash = hash(self.true)

    def __getitem__(self, p: Proposition) -> int:
        return 1 if p in self.true else 0

    def __contains__(self, p: Proposition) -> bool:
        return p in self.true

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, AbstractBelief):
            return NotImplemented
        return self._hash == other._hash and self.true == other.true

    def __len__(self):
        return len(self.true)

    def bits(self, universe: Sequence[Proposition]) -> str:
        return "".join("1" if p in self.true else "0" for p in universe)

    @classmethod
    def from_bits(cls, bits: str, universe: Sequence[Proposition]) -> "AbstractBelief":
        if len(bits) != len(universe):
            raise ValueError(f"expected {len(universe)} bits, got {len(bits)}")
        return cls(p for p, b in zip(universe, bits) if b == "1")

    def sort_key(self):
        return tuple(sorted((p.predicate, p.args) for p in self.true))

    def __repr__(self):
        return "{" + ", ".join(repr(p) for p in sorted(self.true)) + "}"
