"""Small fully observed symbolic environments used by tests, examples and the CLI."""

from __future__ import annotations

import random
from typing import Callable, Iterable, Mapping, Optional

from ..belief import Environment, derive_seed
from ..props import AbstractBelief, Proposition, prop
from ..symbolic import Problem, apply_outcome, parse_domain


class SymbolicEnv(Environment):
    """The concrete belief is the symbolic state itself.

    ``probs`` maps an operator name (``pick(a)``) or schema name (``pick``) to
    either a list of (psi, probability) pairs or a callable ``(state, op) ->
    list``. Operators without an entry draw their outcomes uniformly.
    ``feedback`` optionally maps (state, op, psi) to propositions the
    controller reports as relevant conditions.
    """

    def __init__(self, domain_text: str, objects: Mapping[str, Iterable[str]] = None,
                 init: Iterable = (), probs: Optional[Mapping] = None,
                 streams: Iterable[str] = (), feedback: Optional[Callable] = None,
                 sampler: Optional[Callable] = None):
        self.domain = parse_domain(domain_text)
        self.problem = Problem(self.domain, objects or {}, streams=streams)
        self.init = self.problem.derive(AbstractBelief(p if isinstance(p, Proposition) else prop(p)
                                                       for p in init))
        self.probs = dict(probs or {})
        self.feedback = feedback
        self.sampler = sampler

    def initial_belief(self) -> AbstractBelief:
        return self.init

    def evaluate(self, b: AbstractBelief, p: Proposition) -> int:
        return int(p in b.true)

    def abstract(self, b, universe) -> AbstractBelief:
        return b

    def sample_state(self, b, rng):
        return b

    def distribution(self, b: AbstractBelief, op) -> list:
        spec = self.probs.get(op.name, self.probs.get(op.schema.name))
        if spec is None:
            outs = op.outcomes()
            return [(psi, 1.0 / len(outs)) for psi in outs]
        return list(spec(b, op) if callable(spec) else spec)

    def step(self, state, b, op, rng: random.Random) -> tuple:
        dist = self.distribution(b, op)
        u = rng.random()
        acc = 0.0
        psi = dist[-1][0]
        for cand, p in dist:
            acc += p
            if u < acc:
                psi = cand
                break
        b2 = apply_outcome(b, op, psi)
        fb = self.feedback(b, op, psi) if self.feedback else ()
        return b2, b2, tuple(fb)

    def transition_distribution(self, b, op) -> list:
        out: dict = {}
        for psi, p in self.distribution(b, op):
            b2 = apply_outcome(b, op, psi)
            out[b2] = out.get(b2, 0.0) + p
        return list(out.items())

    def sample_parameter(self, stream: str, seed: int) -> str:
        if self.sampler is None:
            return super().sample_parameter(stream, seed)
        return self.sampler(stream, seed)


def chain_env(n: int = 2, p_success: float = 1.0) -> SymbolicEnv:
    """Reach S{n} from S0 by n moves, each succeeding with ``p_success`` (else Broken)."""
    parts = []
    for k in range(n):
        eff = f"(S{k + 1})" if p_success >= 1.0 else ""
        ueff = "" if p_success >= 1.0 else f" :ueffects (oneof (S{k + 1}) (Broken))"
        parts.append(f"(:action step{k} :parameters () :precondition (and (S{k}) (not (Broken)))"
                     f" :effects (and (not (S{k})) {eff}){ueff})")
    text = "(define (domain chain)\n" + "\n".join(parts) + f"\n(:reward (S{n})))"
    probs = {}
    if p_success < 1.0:
        probs = {f"step{k}": [((1, 0), p_success), ((0, 1), 1.0 - p_success)] for k in range(n)}
    return SymbolicEnv(text, {}, init=["(S0)"], probs=probs)


def bandit_env(arms=(0.9, 0.1)) -> SymbolicEnv:
    """One pull decides everything: arm k pays off with probability ``arms[k]``."""
    text = """
(define (domain bandit)
 (:types arm)
 (:action pull :parameters (?a - arm) :precondition (and (not (Done)))
  :effects (Done) :ueffects (Won))
 (:reward (Won)))
"""
    names = [f"a{k}" for k in range(len(arms))]
    probs = {f"pull({n})": [((1,), p), ((0,), 1.0 - p)] for n, p in zip(names, arms)}
    return SymbolicEnv(text, {"arm": names}, probs=probs)


def risky_shortcut_env(p_short: float = 0.7, p_long: float = 0.99) -> SymbolicEnv:
    """A one-step gamble (else irreversible failure) versus a safer two-step route."""
    text = """
(define (domain shortcut)
 (:action dash :parameters () :precondition (and (Start) (not (Broken)))
  :effects (not (Start)) :ueffects (oneof (Goal) (Broken)))
 (:action walk :parameters () :precondition (and (Start) (not (Broken)))
  :effects (and (not (Start)) (Mid)))
 (:action finish :parameters () :precondition (and (Mid) (not (Broken)))
  :effects (not (Mid)) :ueffects (oneof (Goal) (Broken)))
 (:reward (Goal)))
"""
    probs = {"dash": [((1, 0), p_short), ((0, 1), 1 - p_short)],
             "finish": [((1, 0), p_long), ((0, 1), 1 - p_long)]}
    return SymbolicEnv(text, {}, init=["(Start)"], probs=probs)


class GraspEnv(SymbolicEnv):
    """Pick with a sampled grasp; each grasp has a hidden quality in [0, 1)."""

    TEXT = """
(define (domain grasping)
 (:types grasp)
 (:action pick :parameters (?g - grasp) :precondition (and (not (Holding)))
  :ueffects (Holding))
 (:reward (Holding)))
"""

    def __init__(self, seed: int = 0):
        self.seed = seed
        super().__init__(self.TEXT, {"grasp": []}, streams=("grasp",),
                         probs={"pick": self._pick}, sampler=self._sample)

    def quality(self, grasp: str) -> float:
        return random.Random(derive_seed(self.seed, "grasp", grasp)).random()

    def _pick(self, b, op):
        q = self.quality(op.args[0])
        return [((1,), q), ((0,), 1.0 - q)]

    def _sample(self, stream: str, seed: int) -> str:
        return f"g{seed % 1_000_000:06d}"
