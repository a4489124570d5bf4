"""Probabilistic occupancy grids: time decay, swept-volume collision risk, and a small
safety task built on them."""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from ..belief import Environment
from ..props import Proposition
from ..symbolic import Problem, parse_domain


@dataclass
class OccupancyGrid:
    P: np.ndarray  # occupancy probability per (x, y, z)
    gamma_decay: float = 0.9
    C: float = 1.0

    def __post_init__(self):
        self.P = np.array(self.P, dtype=float)
        if self.P.ndim == 2:
            self.P = self.P[:, :, None]
        if self.P.ndim != 3:
            raise ValueError("occupancy grid must be 2-D or 3-D")
        if np.any(self.P < 0) or np.any(self.P > 1):
            raise ValueError("occupancy probabilities must lie in [0, 1]")
        if not 0 < self.gamma_decay <= 1 or self.C < 0:
            raise ValueError("need 0 < gamma_decay <= 1 and C >= 0")

    @property
    def resolution(self) -> tuple:
        return self.P.shape

    @classmethod
    def empty(cls, shape, gamma_decay: float = 0.9, C: float = 1.0) -> "OccupancyGrid":
        return cls(np.zeros(shape), gamma_decay, C)


def occupancy_decay(grid: OccupancyGrid, dt: float, observed: Iterable = ()) -> OccupancyGrid:
    """Decay every cell by gamma**(C*dt), then reset cells observed occupied to 1."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    P = grid.P * grid.gamma_decay ** (grid.C * dt)
    for cell in observed:
        c = tuple(cell)
        P[c if len(c) == 3 else c + (0,)] = 1.0
    return replace(grid, P=P)


def collision_probability(grids: Sequence, swept: Sequence[Sequence]) -> float:
    """1 - prod_t prod_i (1 - P_t(cell_i)) over the cells swept at each time step.

    ``grids[t]`` is an OccupancyGrid or array for step t; ``swept[t]`` lists its cells.
    """
    if len(grids) != len(swept):
        raise ValueError("need one grid per time step")
    free = 1.0
    for g, cells in zip(grids, swept):
        P = g.P if isinstance(g, OccupancyGrid) else np.asarray(g, dtype=float)
        if P.ndim == 2:
            P = P[:, :, None]
        for cell in cells:
            c = tuple(cell)
            p = float(P[c if len(c) == 3 else c + (0,)])
            if not 0.0 <= p <= 1.0:
                raise ValueError("occupancy probabilities must lie in [0, 1]")
            free *= 1.0 - p
    return 1.0 - free


def straight_path(a, b) -> list:
    """Integer cells on the segment from a to b (inclusive), one per unit step."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    n = int(np.max(np.abs(b - a)))
    if n == 0:
        return [tuple(int(v) for v in a)]
    return [tuple(int(round(v)) for v in a + (b - a) * k / n) for k in range(n + 1)]


# --- safety task: hand an object over a workspace a person recently occupied

@dataclass
class HandoverWorld:
    shape: tuple = (8, 8)
    occupied: tuple = ((3, 3), (3, 4), (4, 3), (4, 4))  # seen occupied at t=0
    start: tuple = (0, 4)
    goal: tuple = (7, 4)
    waypoint: tuple = (4, 0)
    gamma_decay: float = 0.6
    C: float = 1.0
    dt: float = 1.0
    clear_below: float = 0.05

    def initial_grid(self) -> OccupancyGrid:
        g = OccupancyGrid.empty(self.shape, self.gamma_decay, self.C)
        return occupancy_decay(g, 0.0, self.occupied)


@dataclass(frozen=True)
class HandoverBelief:
    waits: int = 0
    at_waypoint: bool = False
    delivered: bool = False
    collided: bool = False


class HandoverEnv(Environment):
    """Carry an object to the goal straight through a recently occupied area or
    around it via a waypoint (one extra controller); waiting lets the occupancy decay."""

    TEXT = """
(define (domain handover)
 (:types route)
 (:action wait :parameters ()
  :precondition (and (not (Clear @direct)) (not (Delivered)) (not (Collided)))
  :ueffects (Clear @direct))
 (:action detour :parameters ()
  :precondition (and (not (AtWaypoint)) (not (Delivered)) (not (Collided)))
  :effects (AtWaypoint)
  :ueffects (Collided))
 (:action carry-direct :parameters ()
  :precondition (and (not (Delivered)) (not (Collided)))
  :ueffects (oneof (Delivered) (Collided))
  :uconds (and (Clear @direct) (AtWaypoint)))
 (:action carry-around :parameters ()
  :precondition (and (AtWaypoint) (not (Delivered)) (not (Collided)))
  :ueffects (oneof (Delivered) (Collided)))
 (:reward (Delivered)))
"""

    def __init__(self, world: Optional[HandoverWorld] = None):
        self.world = world or HandoverWorld()
        self.domain = parse_domain(self.TEXT)
        self.problem = Problem(self.domain, {"route": ["direct"]})

    def grid_at(self, waits: int) -> OccupancyGrid:
        w = self.world
        return occupancy_decay(w.initial_grid(), w.dt * waits)

    def route_cells(self, route: str, at_waypoint: bool) -> list:
        """Cells swept by the next controller on ``route`` ("direct" or "around")."""
        w = self.world
        if route == "direct":
            return straight_path(w.waypoint if at_waypoint else w.start, w.goal)
        if not at_waypoint:
            return straight_path(w.start, w.waypoint)
        corner = (w.goal[0], w.waypoint[1])
        return straight_path(w.waypoint, corner) + straight_path(corner, w.goal)[1:]

    def risk(self, b: HandoverBelief, route: str) -> float:
        g = self.grid_at(b.waits)
        cells = self.route_cells(route, b.at_waypoint)
        return collision_probability([g] * len(cells), [[c] for c in cells])

    def initial_belief(self) -> HandoverBelief:
        return HandoverBelief()

    def evaluate(self, b: HandoverBelief, p: Proposition) -> int:
        name = p.predicate
        if name == "Clear":
            return int(self.risk(b, p.args[0]) < self.world.clear_below)
        return int({"AtWaypoint": b.at_waypoint, "Delivered": b.delivered,
                    "Collided": b.collided}[name])

    def sample_state(self, b, rng):
        return None

    def outcomes(self, b: HandoverBelief, op) -> list:
        kind = op.schema.name
        if kind == "wait":
            return [(replace(b, waits=b.waits + 1), 1.0)]
        if kind == "detour":
            r = self.risk(b, "around")
            return [(replace(b, at_waypoint=True, waits=b.waits + 1), 1.0 - r),
                    (replace(b, collided=True), r)]
        r = self.risk(b, "direct" if kind == "carry-direct" else "around")
        return [(replace(b, delivered=True), 1.0 - r), (replace(b, collided=True), r)]

    def transition_distribution(self, b, op):
        return [(b2, p) for b2, p in self.outcomes(b, op) if p > 0]

    def step(self, state, b, op, rng: random.Random) -> tuple:
        u = rng.random()
        acc = 0.0
        outs = self.outcomes(b, op)
        for b2, p in outs:
            acc += p
            if u < acc:
                return state, b2, ()
        return state, outs[-1][0], ()
