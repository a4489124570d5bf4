"""Find a target hidden behind one of a few boxes.

Looking behind a box is safe but can miss the target; lifting a box reveals
exactly what is behind it but the fragile box may break, which ends the
episode. Grabbing the target goes to the most likely box, so acting before
the belief is sharp risks an irreversible failure.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

from ..belief import Environment
from ..props import Proposition
from ..symbolic import Problem, parse_domain


@dataclass
class HiddenObjectWorld:
    weights: tuple = (0.6, 0.25, 0.15)
    look_noise: float = 0.05
    fragile: tuple = (0,)
    break_prob: float = 0.1
    known_threshold: float = 0.95

    def __post_init__(self):
        self.weights = tuple(float(w) for w in self.weights)
        if abs(sum(self.weights) - 1.0) > 1e-12 or min(self.weights) < 0:
            raise ValueError("prior weights must be a distribution")
        if not 0 <= self.look_noise <= 1 or not 0 <= self.break_prob <= 1:
            raise ValueError("noise and break probability must lie in [0, 1]")
        self.fragile = tuple(sorted(set(self.fragile)))
        if any(not 0 <= k < self.n_boxes for k in self.fragile):
            raise ValueError("fragile box index out of range")

    @property
    def n_boxes(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class ObjectBelief:
    post: tuple
    checked: frozenset = frozenset()
    moved: frozenset = frozenset()
    holding: bool = False
    failed: bool = False

    def map_box(self) -> int:
        best = max(self.post)
        return self.post.index(best)


def _normalise(post) -> tuple:
    z = sum(post)
    return tuple(p / z for p in post)


def look_update(post: tuple, box: int, seen: bool, noise: float) -> tuple:
    """Posterior after looking behind ``box`` (misses with probability ``noise``, never false alarms)."""
    if seen:
        return tuple(1.0 if k == box else 0.0 for k in range(len(post)))
    return _normalise([p * noise if k == box else p for k, p in enumerate(post)])


def box_name(k: int) -> str:
    return f"b{k}"


def hidden_object_domain_text(n_boxes: int) -> str:
    checked = " ".join(f"(Checked @{box_name(k)})" for k in range(n_boxes))
    free = "(not (Holding @target)) (not (Failed))"
    return f"""
(define (domain hidden-object)
 (:types box item)
 (:action look
  :parameters (?b - box)
  :precondition (and (not (Checked ?b)) (not (BVPose @target)) {free})
  :effects (Checked ?b)
  :ueffects (BVPose @target)
  :uconds (and {checked}))
 (:action pick-box
  :parameters (?b - box)
  :precondition (and (not (Moved ?b)) (not (BVPose @target)) {free})
  :effects (and (Moved ?b) (Checked ?b))
  :ueffects (and (BVPose @target) (Failed))
  :uconds (and {checked}))
 (:action pick-target
  :parameters ()
  :precondition (and {free})
  :ueffects (oneof (Holding @target) (Failed))
  :uconds (and {checked} (BVPose @target)))
 (:reward (Holding @target)))
"""


class HiddenObjectEnv(Environment):
    """World state is the index of the box hiding the target."""

    def __init__(self, world: HiddenObjectWorld = None):
        self.world = world or HiddenObjectWorld()
        n = self.world.n_boxes
        self.domain = parse_domain(hidden_object_domain_text(n))
        self.problem = Problem(self.domain, {"box": [box_name(k) for k in range(n)], "item": ["target"]})
        self._box = {box_name(k): k for k in range(n)}
        self._goal = Proposition("Holding", ("target",))

    def initial_belief(self) -> ObjectBelief:
        return ObjectBelief(self.world.weights)

    def evaluate(self, b: ObjectBelief, p: Proposition) -> int:
        name = p.predicate
        if name == "BVPose":
            return int(max(b.post) >= self.world.known_threshold)
        if name == "Checked":
            return int(self._box[p.args[0]] in b.checked)
        if name == "Moved":
            return int(self._box[p.args[0]] in b.moved)
        if name == "Holding":
            return int(b.holding)
        if name == "Failed":
            return int(b.failed)
        raise KeyError(p)

    def sample_state(self, b: ObjectBelief, rng: random.Random) -> int:
        return rng.choices(range(len(b.post)), weights=b.post)[0]

    def outcomes(self, b: ObjectBelief, op) -> list:
        """Exact [(belief', probability)] of running ``op`` from ``b``."""
        return list(_outcomes(self.world.look_noise, self.world.fragile, self.world.break_prob,
                              b, op.schema.name, tuple(self._box[a] for a in op.args)))

    def transition_distribution(self, b, op) -> Optional[list]:
        return self.outcomes(b, op)

    def step(self, state: int, b: ObjectBelief, op, rng: random.Random) -> tuple:
        w = self.world
        kind = op.schema.name
        if kind == "look":
            k = self._box[op.args[0]]
            seen = state == k and rng.random() >= w.look_noise
            post = look_update(b.post, k, seen, w.look_noise)
            return state, replace(b, post=post, checked=b.checked | {k}), ()
        if kind == "pick-box":
            k = self._box[op.args[0]]
            if k in w.fragile and rng.random() < w.break_prob:
                return state, replace(b, failed=True), ()
            post = look_update(b.post, k, state == k, 0.0)
            return state, replace(b, post=post, checked=b.checked | {k}, moved=b.moved | {k}), ()
        if kind == "pick-target":
            if state == b.map_box():
                return state, replace(b, holding=True), ()
            return state, replace(b, failed=True), ()
        raise ValueError(f"unknown controller {op.name}")


@lru_cache(maxsize=None)
def _outcomes(noise, fragile, break_prob, b: ObjectBelief, kind: str, args: tuple) -> tuple:
    out: dict = {}

    def add(b2, p):
        if p > 0:
            out[b2] = out.get(b2, 0.0) + p

    if kind == "look":
        k = args[0]
        hit = b.post[k] * (1.0 - noise)
        checked = b.checked | {k}
        add(replace(b, post=look_update(b.post, k, True, noise), checked=checked), hit)
        if hit < 1.0:
            add(replace(b, post=look_update(b.post, k, False, noise), checked=checked), 1.0 - hit)
    elif kind == "pick-box":
        k = args[0]
        brk = break_prob if k in fragile else 0.0
        add(replace(b, failed=True), brk)
        there = b.post[k]
        moved = dict(checked=b.checked | {k}, moved=b.moved | {k})
        add(replace(b, post=look_update(b.post, k, True, 0.0), **moved), (1.0 - brk) * there)
        if there < 1.0:
            add(replace(b, post=look_update(b.post, k, False, 0.0), **moved), (1.0 - brk) * (1.0 - there))
    elif kind == "pick-target":
        p = b.post[b.map_box()]
        add(replace(b, holding=True), p)
        add(replace(b, failed=True), 1.0 - p)
    else:
        raise ValueError(f"unknown controller {kind}")
    return tuple(out.items())


def optimal_value(env: HiddenObjectEnv, gamma: float = 0.98, b: ObjectBelief = None) -> tuple:
    """Exact optimal discounted return from ``b`` by expectimax over controller outcomes.

    Returns (value, best first operator or None). The controller set only
    ever checks or moves each box once, so the tree is finite.
    """
    universe = env.problem.universe
    memo: dict = {}

    def value(b):
        hit = memo.get(b)
        if hit is not None:
            return hit
        bbar = env.abstract(b, universe)
        if env.is_goal(bbar):
            res = (1.0, None)
        else:
            res = (0.0, None)
            for op in env.problem.applicable_ops(bbar):
                q = gamma * sum(p * value(b2)[0] for b2, p in env.outcomes(b, op))
                if q > res[0] + 1e-15:
                    res = (q, op)
        memo[b] = res
        return res

    return value(env.initial_belief() if b is None else b)
