import math
import random
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.sparse.csgraph import dijkstra

from beltamp.bandit import BetaPrior, ucb_cost
from beltamp.detplanner import format_plan, plan_topk, successors
from beltamp.learner import OutcomeTable
from beltamp.props import AbstractBelief, prop
from beltamp.symbolic import Problem, parse_domain

TWO = """
(define (domain two)
 (:predicates (S) (M) (G) (X) (Y) (P))
 (:action both :parameters () :precondition (P) :ueffects (and (X) (Y)))
 (:action sure :parameters () :precondition (S) :effects (and (not (S)) (M)))
 (:action jump :parameters () :precondition (S) :effects (not (S)) :ueffects (G))
 (:action land :parameters () :precondition (M) :effects (not (M)) :ueffects (G))
 (:reward (G)))
"""


def two():
    pr = Problem(parse_domain(TWO), {})
    return pr, AbstractBelief([prop("S")])


def test_successor_counts_and_costs():
    pr, root = two()
    t = OutcomeTable()
    succ = successors(AbstractBelief([prop("S"), prop("P")]), pr, t, 1)
    both = [s for s in succ if s[0].op.name == "both()"]
    assert len(both) == 4
    assert all(c == pytest.approx(math.log(2)) for _, _, c in both)
    sure = [s for s in succ if s[0].op.name == "sure()"]
    assert len(sure) == 1 and sure[0][2] == 0.0


def test_two_path_example():
    pr, root = two()
    t = OutcomeTable()
    jump, land = pr.operator("jump()"), pr.operator("land()")
    t.record(jump, (), (1,), 1)
    t.record(jump, (), (0,), 3)   # jump usually misses
    t.record(land, (), (1,), 9)   # landing almost always works
    plans = plan_topk(root, pr.goal_holds, pr, t, 1, K=2)
    assert [len(p) for p in plans] == [2, 1]
    assert plans[0].cost == pytest.approx(ucb_cost(10, 1, 1))
    assert plans[1].cost == pytest.approx(ucb_cost(2, 4, 1))
    assert plans[0].cost < plans[1].cost
    assert "total cost" in format_plan(plans[0])


def test_goal_at_root_and_unreachable():
    pr, _ = two()
    g = AbstractBelief([prop("G")])
    plans = plan_topk(g, pr.goal_holds, pr, OutcomeTable(), 1, K=3)
    assert len(plans) == 1 and len(plans[0]) == 0 and plans[0].cost == 0
    assert plan_topk(AbstractBelief(), pr.goal_holds, pr, OutcomeTable(), 1, K=3) == []
    with pytest.raises(ValueError):
        plan_topk(g, pr.goal_holds, pr, OutcomeTable(), 1, K=0)


# --- random explicit graphs, each edge an operator with its own count row

@dataclass(frozen=True)
class Edge:
    name: str
    ueff: tuple = (0,)
    ucond: tuple = ()


class Graph:
    """Operators-protocol stand-in: nodes n0..n{k-1}, goal is the last node."""

    def __init__(self, n, edges):
        self.nodes = [AbstractBelief([prop(f"n{k}")]) for k in range(n)]
        self.index = {b: k for k, b in enumerate(self.nodes)}
        self.out = {k: [] for k in range(n)}
        for e, (u, v) in enumerate(edges):
            self.out[u].append((Edge(f"e{e}"), ((( 1,), self.nodes[v]),)))

    def outcome_successors(self, b):
        return tuple(self.out[self.index[b]])

    def goal(self, b):
        return self.index[b] == len(self.nodes) - 1


def random_instance(rng, n, m):
    edges = [(rng.randrange(n - 1), rng.randrange(n)) for _ in range(m)]
    edges = [(u, v) for u, v in edges if u != v]
    g = Graph(n, edges)
    t = OutcomeTable(BetaPrior())
    cost = {}
    for k, (u, v) in enumerate(edges):
        nv = rng.randrange(0, 12)
        s = rng.randrange(0, nv + 1)
        op = Edge(f"e{k}")
        for psi, c in (((1,), s), ((0,), nv - s)):
            if c:
                t.record(op, (), psi, c)
        cost[op] = ucb_cost(1 + s, 1 + nv - s, 3)
    return g, t, edges, cost


def test_plan_cost_matches_dense_dijkstra():
    rng = random.Random(7)
    for _ in range(100):
        n = rng.randrange(3, 12)
        g, t, edges, cost = random_instance(rng, n, rng.randrange(n, 4 * n))
        W = np.full((n, n), np.inf)
        for k, (u, v) in enumerate(edges):
            op = Edge(f"e{k}")
            W[u, v] = min(W[u, v], cost[op])
        W[np.isinf(W)] = 0  # dense csgraph convention: 0 means no edge (all costs here are > 0)
        d = dijkstra(W, directed=True, indices=0)[n - 1]
        plans = plan_topk(g.nodes[0], g.goal, g, t, 3, K=1, horizon_cap=n)
        if math.isinf(d):
            assert plans == []
        else:
            assert plans[0].cost == pytest.approx(d, abs=1e-9)


def all_simple_paths(g, cap):
    out = []

    def walk(u, seen, path, c):
        if g.goal(g.nodes[u]):
            out.append((c, tuple(path)))
            return
        if len(path) >= cap:
            return
        for op, ((psi, b2),) in g.out[u]:
            v = g.index[b2]
            if v not in seen:
                walk(v, seen | {v}, path + [op.name], c)
    walk(0, {0}, [], 0.0)
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 5))
def test_yen_matches_enumeration(seed, K):
    rng = random.Random(seed)
    n = rng.randrange(3, 9)
    g, t, edges, cost = random_instance(rng, n, rng.randrange(n, 3 * n))
    paths = all_simple_paths(g, n)
    exact = sorted(sum(cost[Edge(e)] for e in p) for _, p in paths)[:K]
    plans = plan_topk(g.nodes[0], g.goal, g, t, 3, K=K, horizon_cap=n)
    assert len(plans) == len(exact)
    assert [p.cost for p in plans] == pytest.approx(exact, abs=1e-9)
    assert len({tuple(s.op.name for s in p.steps) for p in plans}) == len(plans)
