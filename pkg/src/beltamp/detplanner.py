"""All-outcomes determinized planning with optimistic outcome costs.

Every (operator, outcome) pair becomes a deterministic action whose cost is the
Bayes-UCB cost of that outcome. ``plan_topk`` returns the K cheapest distinct
goal-reaching plans (Yen's algorithm over the reachable graph).
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable

from .bandit import ucb_cost
from .props import AbstractBelief
from .symbolic.grounding import GroundOperator, apply_outcome


@dataclass(frozen=True)
class DetAction:
    op: GroundOperator
    psi: tuple


@dataclass(frozen=True)
class Step:
    b1: AbstractBelief
    op: GroundOperator
    psi: tuple
    b2: AbstractBelief
    cost: float


@dataclass(frozen=True)
class Plan:
    steps: tuple
    cost: float

    def triples(self) -> list:
        return [(s.b1, s.op, s.b2) for s in self.steps]

    def __len__(self):
        return len(self.steps)


def _applicable_ops(operators, b):
    if hasattr(operators, "applicable_ops"):
        return operators.applicable_ops(b)
    from .symbolic.grounding import applicable

    return [op for op in operators if applicable(op, b)]


def outcome_cost(table, op, psi_pre, psi, i: int) -> float:
    if not op.ueff:
        return 0.0
    a, b = table.beta_params(op, psi_pre, psi)
    return ucb_cost(a, b, i)


def _expansions(operators, b):
    if hasattr(operators, "outcome_successors"):
        return operators.outcome_successors(b)
    return tuple(
        (op, tuple((psi, apply_outcome(b, op, psi)) for psi in op.outcomes()))
        for op in _applicable_ops(operators, b)
    )


def successors(b: AbstractBelief, operators, table, i: int) -> list:
    """[(DetAction, b', cost)] for every applicable operator and outcome."""
    out = []
    for op, outs in _expansions(operators, b):
        psi_pre = table.psi_pre(b, op)
        for psi, b2 in outs:
            out.append((DetAction(op, psi), b2, outcome_cost(table, op, psi_pre, psi, i)))
    return out


class _Skeleton:
    """Nodes and cost-free edges reachable from ``root`` within ``depth`` steps."""

    def __init__(self, root, goal, operators, depth):
        self.nodes = [root]
        self.index = {root: 0}
        self.goal = [bool(goal(root))]
        self.out = [[]]
        self.groups = []  # (u, op, first edge, last edge + 1)
        self.arcs = []  # (u, v, op, psi)
        frontier = deque([(0, 0)])
        while frontier:
            u, d = frontier.popleft()
            if self.goal[u] or d >= depth:
                continue
            b = self.nodes[u]
            for op, outs in _expansions(operators, b):
                first = len(self.arcs)
                for psi, b2 in outs:
                    v = self.index.get(b2)
                    if v is None:
                        v = len(self.nodes)
                        self.index[b2] = v
                        self.nodes.append(b2)
                        self.goal.append(bool(goal(b2)))
                        self.out.append([])
                        frontier.append((v, d + 1))
                    self.out[u].append(len(self.arcs))
                    self.arcs.append((u, v, op, psi))
                self.groups.append((u, op, first, len(self.arcs)))


def _skeleton(root, goal, operators, depth) -> _Skeleton:
    # Problems memoise their successor function; the reachable structure can be
    # memoised alongside it (it is dropped whenever the operator set changes).
    cache = getattr(operators, "_succ_cache", None)
    if cache is None:
        return _Skeleton(root, goal, operators, depth)
    key = ("skeleton", root, goal, depth)
    sk = cache.get(key)
    if sk is None:
        sk = cache[key] = _Skeleton(root, goal, operators, depth)
    return sk


class _Graph:
    """Explicit determinized graph with the current optimistic costs."""

    def __init__(self, root, goal, operators, table, i, depth):
        sk = _skeleton(root, goal, operators, depth)
        self.nodes, self.index, self.goal, self.out = sk.nodes, sk.index, sk.goal, sk.out
        a0, b0 = table.prior.alpha, table.prior.beta
        costs = [0.0] * len(sk.arcs)
        for u, op, lo, hi in sk.groups:
            if not op.ueff:
                continue
            psi_pre = table.psi_pre(self.nodes[u], op)
            n = table.visits(op, psi_pre)
            row = table.D.get((op, psi_pre)) or {}
            for e in range(lo, hi):
                s = row.get(sk.arcs[e][3], 0)
                costs[e] = ucb_cost(a0 + s, b0 + n - s, i)
        self.edges = [(u, v, c, op, psi) for (u, v, op, psi), c in zip(sk.arcs, costs)]

    def to_goal(self) -> list:
        """Exact cost-to-go of every node (reverse Dijkstra from the goal set)."""
        n = len(self.nodes)
        rin = [[] for _ in range(n)]
        for e, (u, v, c, _, _) in enumerate(self.edges):
            rin[v].append((u, c))
        dist = [float("inf")] * n
        heap = []
        for v in range(n):
            if self.goal[v]:
                dist[v] = 0.0
                heap.append((0.0, v))
        heapq.heapify(heap)
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist[v]:
                continue
            for u, c in rin[v]:
                nd = d + c
                if nd < dist[u]:
                    dist[u] = nd
                    heapq.heappush(heap, (nd, u))
        return dist

    def search(self, src, h, banned_edges=frozenset(), banned_nodes=frozenset()):
        """A* from ``src`` to any goal; returns (cost, edge list) or None."""
        if src in banned_nodes:
            return None
        g = {src: 0.0}
        parent = {src: None}
        tie = itertools.count()
        heap = [(h[src], next(tie), src)]
        closed = set()
        while heap:
            f, _, u = heapq.heappop(heap)
            if u in closed:
                continue
            closed.add(u)
            if self.goal[u]:
                cost, path = g[u], []
                while parent[u] is not None:
                    e = parent[u]
                    path.append(e)
                    u = self.edges[e][0]
                path.reverse()
                return cost, path
            for e in self.out[u]:
                if e in banned_edges:
                    continue
                _, v, c, _, _ = self.edges[e]
                if v in banned_nodes or v in closed or h[v] == float("inf"):
                    continue
                nd = g[u] + c
                if nd < g.get(v, float("inf")):
                    g[v] = nd
                    parent[v] = e
                    heapq.heappush(heap, (nd + h[v], next(tie), v))
        return None

    def path_cost(self, path) -> float:
        return sum(self.edges[e][2] for e in path)

    def plan(self, path) -> Plan:
        steps = tuple(
            Step(self.nodes[u], op, psi, self.nodes[v], c)
            for u, v, c, op, psi in (self.edges[e] for e in path)
        )
        return Plan(steps, self.path_cost(path))


def plan_topk(root: AbstractBelief, goal: Callable, operators, table, i: int, K: int = 1,
              horizon_cap: int = 50) -> list:
    """The K cheapest distinct loop-free plans from ``root`` to a goal, cheapest first."""
    if K < 1 or horizon_cap < 1:
        raise ValueError("K and horizon_cap must be at least 1")
    g = _Graph(root, goal, operators, table, i, horizon_cap)
    h = g.to_goal()
    first = g.search(0, h)
    if first is None:
        return []
    found = [first[1]]
    dev = [0]
    seen = {tuple(first[1])}
    cands: list = []
    while len(found) < K:
        prev = found[-1]
        for j in range(dev[-1], len(prev)):
            root_path = prev[:j]
            banned_edges = {p[j] for p in found if len(p) > j and p[:j] == root_path}
            banned_nodes = set()
            u = 0
            for e in root_path:
                banned_nodes.add(u)
                u = g.edges[e][1]
            node = u
            spur = g.search(node, h, banned_edges, banned_nodes)
            if spur is None:
                continue
            total = root_path + spur[1]
            key = tuple(total)
            if key in seen or len(total) > horizon_cap:
                continue
            seen.add(key)
            heapq.heappush(cands, (g.path_cost(total), key, j))
        if not cands:
            break
        _, key, j = heapq.heappop(cands)
        found.append(list(key))
        dev.append(j)
    return [g.plan(p) for p in found if len(p) <= horizon_cap]


def format_plan(plan: Plan) -> str:
    lines = []
    for s in plan.steps:
        bits = "".join(map(str, s.psi))
        lines.append(f"{s.op.name} -> {{{bits}}} cost={s.cost:.6f}")
    lines.append(f"total cost={plan.cost:.6f}")
    return "\n".join(lines)
