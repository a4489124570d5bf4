"""Stochastic grid world with per-cell death and slip probabilities.

Each move either kills the agent (absorbing), slips to a uniformly random
in-bounds neighbour, or goes the intended way (clamped at walls). The agent
observes its cell exactly, so concrete beliefs are just cells.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..belief import Environment
from ..props import AbstractBelief, Proposition
from ..solver import ExplicitMdp
from ..symbolic import Problem, parse_domain

DIRS = {"N": (0, 1), "S": (0, -1), "E": (1, 0), "W": (-1, 0)}
DEAD = "dead"


@dataclass
class GridWorld:
    width: int
    height: int
    p_death: np.ndarray  # indexed [x, y]
    p_random: np.ndarray
    start: tuple = (0, 0)
    goal: tuple = None

    def __post_init__(self):
        self.p_death = np.asarray(self.p_death, dtype=float).reshape(self.width, self.height)
        self.p_random = np.asarray(self.p_random, dtype=float).reshape(self.width, self.height)
        if self.goal is None:
            self.goal = (self.width - 1, self.height - 1)
        self.start, self.goal = tuple(self.start), tuple(self.goal)
        if np.any(self.p_death < 0) or np.any(self.p_random < 0) or np.any(self.p_death + self.p_random > 1):
            raise ValueError("cell probabilities must be non-negative and sum to at most 1")
        for c in (self.start, self.goal):
            if not self.inside(c):
                raise ValueError(f"cell {c} is outside the grid")

    def inside(self, c) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def cells(self) -> list:
        return [(x, y) for x in range(self.width) for y in range(self.height)]

    def neighbours(self, c) -> list:
        out = []
        for dx, dy in DIRS.values():
            n = (c[0] + dx, c[1] + dy)
            if self.inside(n):
                out.append(n)
        return out

    def intended(self, c, d) -> tuple:
        dx, dy = DIRS[d]
        n = (c[0] + dx, c[1] + dy)
        return n if self.inside(n) else c

    def step_distribution(self, c, d) -> dict:
        pd, pr = float(self.p_death[c]), float(self.p_random[c])
        dist = {DEAD: pd} if pd > 0 else {}
        nb = self.neighbours(c)
        for n in nb:
            dist[n] = dist.get(n, 0.0) + pr / len(nb)
        t = self.intended(c, d)
        dist[t] = dist.get(t, 0.0) + (1.0 - pd - pr)
        return {k: v for k, v in dist.items() if v > 0}


def random_grid(rng: random.Random, width: int = 10, height: int = 10, pmax: float = 0.2) -> GridWorld:
    """Per-cell probabilities drawn uniformly from (0, pmax]."""
    pd = [[pmax * (1.0 - rng.random()) for _ in range(height)] for _ in range(width)]
    pr = [[pmax * (1.0 - rng.random()) for _ in range(height)] for _ in range(width)]
    return GridWorld(width, height, np.array(pd), np.array(pr))


def grid_step(world: GridWorld, cell, direction: str, seed) -> object:
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    if direction not in DIRS:
        raise ValueError(f"unknown direction {direction!r}")
    u = rng.random()
    pd, pr = world.p_death[cell], world.p_random[cell]
    if u < pd:
        return DEAD
    if u < pd + pr:
        nb = world.neighbours(cell)
        return nb[rng.randrange(len(nb))]
    return world.intended(cell, direction)


def grid_true_mdp(world: GridWorld, gamma: float = 0.98) -> ExplicitMdp:
    """Exact model: one state per cell plus an absorbing dead state (last)."""
    cells = world.cells()
    index = {c: i for i, c in enumerate(cells)}
    index[DEAD] = len(cells)
    actions, goal = [], []
    for c in cells:
        goal.append(c == world.goal)
        if c == world.goal:
            actions.append([])
            continue
        acts = []
        for d in DIRS:
            dist = world.step_distribution(c, d)
            acts.append((d, sorted((index[k], p) for k, p in dist.items())))
        actions.append(acts)
    actions.append([])
    goal.append(False)
    return ExplicitMdp(cells + [DEAD], actions, goal, gamma)


def cell_name(c) -> str:
    return f"c{c[0]}_{c[1]}"


def grid_domain_text(world: GridWorld) -> str:
    """One move schema per cell; its uncertain effects are the reachable cells plus death."""
    parts = []
    for c in world.cells():
        if c == world.goal:
            continue
        reach = list(world.neighbours(c))
        if any(world.intended(c, d) == c for d in DIRS):
            reach.append(c)
        atoms = " ".join(f"(At @{cell_name(n)})" for n in sorted(reach)) + " (Dead)"
        parts.append(
            f"(:action move-{c[0]}-{c[1]}\n"
            f" :parameters (?d - dir)\n"
            f" :precondition (At @{cell_name(c)})\n"
            f" :effects (not (At @{cell_name(c)}))\n"
            f" :ueffects (oneof {atoms}))"
        )
    parts.append(f"(:reward (At @{cell_name(world.goal)}))")
    return "\n".join(parts) + "\n"


class GridEnv(Environment):
    def __init__(self, world: GridWorld):
        self.world = world
        self.domain = parse_domain(grid_domain_text(world))
        self.problem = Problem(self.domain, {"dir": list(DIRS)})
        self._at = {c: Proposition("At", (cell_name(c),)) for c in world.cells()}
        self._dead = Proposition("Dead")
        self._cell_of_schema = {f"move-{x}-{y}": (x, y) for x, y in world.cells()}
        self._goal_prop = self._at[world.goal]

    def initial_belief(self):
        return self.world.start

    def evaluate(self, b, p: Proposition) -> int:
        if p.predicate == "Dead":
            return int(b == DEAD)
        return int(b != DEAD and p is self._at.get(b))

    def abstract(self, b, universe) -> AbstractBelief:
        p = self._dead if b == DEAD else self._at[b]
        return AbstractBelief((p,))

    def belief_of(self, bbar: AbstractBelief):
        if self._dead in bbar.true:
            return DEAD
        for c, p in self._at.items():
            if p in bbar.true:
                return c
        raise KeyError(bbar)

    def sample_state(self, b, rng):
        return b

    def step(self, state, b, op, rng):
        if state == DEAD:
            return state, state, ()
        cell = self._cell_of_schema[op.schema.name]
        if cell != state:
            return state, state, ()
        nxt = grid_step(self.world, state, op.args[0], rng)
        return nxt, nxt, ()

    def is_goal(self, bbar: AbstractBelief) -> bool:
        return self._goal_prop in bbar.true

    def transition_distribution(self, b, op):
        cell = self._cell_of_schema[op.schema.name]
        return list(self.world.step_distribution(cell, op.args[0]).items())

    def operator(self, cell, d):
        return self.problem.operator(f"move-{cell[0]}-{cell[1]}({d})")

    @cached_property
    def true_mdp(self) -> ExplicitMdp:
        return grid_true_mdp(self.world)


# --- text format: "W H", W*H rows "p_death,p_random" (x-major), "start x y", "goal x y"

def dump_grid(world: GridWorld) -> str:
    lines = [f"{world.width} {world.height}"]
    for x in range(world.width):
        for y in range(world.height):
            lines.append(f"{float(world.p_death[x, y])!r},{float(world.p_random[x, y])!r}")
    lines.append(f"start {world.start[0]} {world.start[1]}")
    lines.append(f"goal {world.goal[0]} {world.goal[1]}")
    return "\n".join(lines) + "\n"


def load_grid(text: str) -> GridWorld:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        w, h = (int(v) for v in rows[0].split())
        pd, pr = [], []
        for ln in rows[1:1 + w * h]:
            a, b = ln.split(",")
            pd.append(float(a))
            pr.append(float(b))
        if len(pd) != w * h:
            raise ValueError(f"expected {w * h} cell rows, got {len(pd)}")
        extra = {}
        for ln in rows[1 + w * h:]:
            key, x, y = ln.split()
            extra[key] = (int(x), int(y))
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed grid file: {exc}") from None
    return GridWorld(w, h, np.array(pd).reshape(w, h), np.array(pr).reshape(w, h),
                     start=extra.get("start", (0, 0)), goal=extra.get("goal"))
