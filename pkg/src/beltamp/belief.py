"""Concrete beliefs behind an environment contract, and the abstraction map."""

from __future__ import annotations

import hashlib
import itertools
import random
import struct
from abc import ABC, abstractmethod
from collections import Counter
from typing import Any, Callable, Hashable, Optional, Sequence, Union

from .props import AbstractBelief, Proposition

BeliefHandle = Any


def derive_seed(root: int, *path) -> int:
    """A 64-bit seed that depends only on ``root`` and the ``path`` labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", root & 0xFFFFFFFFFFFFFFFF))
    for p in path:
        if isinstance(p, int):
            h.update(b"i" + struct.pack("<q", p) if -(1 << 63) <= p < (1 << 63) else b"I" + str(p).encode())
        else:
            h.update(b"s" + str(p).encode() + b"\0")
    return int.from_bytes(h.digest(), "little")


class Environment(ABC):
    """Low-level world model hidden behind belief sampling and controller simulation.

    Subclasses hold a grounded ``problem`` and implement ``initial_belief``,
    ``evaluate``, ``sample_state`` and ``step``. A true world state is only
    needed when executing in the real world; ``simulate`` draws one from the
    belief it is given.
    """

    problem = None

    @abstractmethod
    def initial_belief(self) -> BeliefHandle: ...

    @abstractmethod
    def evaluate(self, b: BeliefHandle, p: Proposition) -> int: ...

    @abstractmethod
    def sample_state(self, b: BeliefHandle, rng: random.Random): ...

    @abstractmethod
    def step(self, state, b: BeliefHandle, op, rng: random.Random) -> tuple:
        """Run ``op``'s controller from world ``state``; return (state', belief', feedback)."""

    def simulate(self, b: BeliefHandle, op, seed: int) -> tuple:
        rng = random.Random(seed)
        state = self.sample_state(b, rng)
        _, b2, feedback = self.step(state, b, op, rng)
        return b2, frozenset(feedback)

    def sample_parameter(self, stream: str, seed: int) -> str:
        raise KeyError(f"environment has no continuous stream {stream!r}")

    def abstract(self, b: BeliefHandle, universe: Sequence[Proposition]) -> AbstractBelief:
        return AbstractBelief(p for p in universe if self.evaluate(b, p))

    def is_goal(self, bbar: AbstractBelief) -> bool:
        return bool(self.problem.goal_holds(bbar))

    def transition_distribution(self, b: BeliefHandle, op) -> Optional[list]:
        """Exact [(belief', prob)] if the environment can enumerate it, else None."""
        return None


def abs_belief(env: Environment, b: BeliefHandle, universe: Sequence[Proposition]) -> AbstractBelief:
    return env.abstract(b, universe)


class EmptyPoolError(LookupError):
    pass


class BeliefPool:
    """Concrete beliefs collected under each abstract belief."""

    def __init__(self):
        self._data: dict = {}

    def insert(self, env: Environment, b: BeliefHandle, universe: Sequence[Proposition]) -> AbstractBelief:
        key = env.abstract(b, universe)
        self.add(key, b)
        return key

    def add(self, key: AbstractBelief, b: BeliefHandle):
        self._data.setdefault(key, []).append(b)

    def sample(self, key: AbstractBelief, seed: int) -> BeliefHandle:
        items = self._data.get(key)
        if not items:
            raise EmptyPoolError(f"no concrete belief stored for {key!r}")
        return items[random.Random(seed).randrange(len(items))]

    def handles(self, key: AbstractBelief) -> list:
        return list(self._data.get(key, ()))

    def __contains__(self, key) -> bool:
        return bool(self._data.get(key))

    def __len__(self):
        return len(self._data)

    def keys(self):
        return self._data.keys()

    def items(self):
        return self._data.items()


def _tv(p: Counter, q: Counter) -> float:
    np_, nq = sum(p.values()), sum(q.values())
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p[k] / np_ - q[k] / nq) for k in keys)


def stationarity_diagnostic(
    env: Environment,
    universe: Sequence[Proposition],
    histories: Sequence[Sequence],
    samples_per_history: int,
    probe: Union[Proposition, Callable[[BeliefHandle], Hashable]],
    seed: int = 0,
) -> dict:
    """Max pairwise total variation of ``probe`` across histories reaching each abstract belief.

    Only abstract beliefs reached by at least two distinct histories are reported.
    """
    look = probe if callable(probe) else (lambda b: env.evaluate(b, probe))
    # abstract belief -> history index -> Counter of probe values
    seen: dict = {}
    for h, ops in enumerate(histories):
        for n in range(samples_per_history):
            b = env.initial_belief()
            for t, op in enumerate(ops):
                b, _ = env.simulate(b, op, derive_seed(seed, h, n, t))
            key = env.abstract(b, universe)
            seen.setdefault(key, {}).setdefault(h, Counter())[look(b)] += 1
    report = {}
    for key, per in seen.items():
        if len(per) < 2:
            continue
        report[key] = max(_tv(per[a], per[c]) for a, c in itertools.combinations(sorted(per), 2))
    return report
