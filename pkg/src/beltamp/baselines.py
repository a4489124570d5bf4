"""Comparison strategies: other ways to learn the model and other ways to decide."""

from __future__ import annotations

import heapq
import itertools
import math
import random
import re
from dataclasses import dataclass
from typing import Optional

from .belief import Environment, derive_seed
from .detplanner import Plan, Step
from .learner import (LearnConfig, LearnerState, NoPlanError, compile_model, record_from)
from .props import AbstractBelief
from .solver import Policy, explicit_closure, lao_star, value_iteration
from .symbolic.grounding import apply_outcome, outcome_bits

LEARNING = ("bayes", "eps", "random", "none", "mcts")
DECISION = ("lao", "vi", "mlo", "wao", "mcts")


@dataclass(frozen=True)
class BaselineSpec:
    learning: str = "bayes"
    decision: str = "lao"
    epsilon: float = 0.0
    c_ucb: float = math.sqrt(2.0)
    rollouts: int = 1000
    depth: int = 20

    def __post_init__(self):
        if self.learning not in LEARNING or self.decision not in DECISION:
            raise ValueError(f"unknown method {self.learning}:{self.decision}")
        if (self.learning == "mcts") != (self.decision == "mcts"):
            raise ValueError("mcts decision and mcts learning go together")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.rollouts < 1 or self.depth < 1:
            raise ValueError("rollouts and depth must be positive")

    @classmethod
    def parse(cls, text: str) -> "BaselineSpec":
        """``bayes:lao``, ``eps0.1:lao``, ``random:vi``, ``none:lao``, ``bayes:wao``, ``mcts``."""
        t = text.strip().lower()
        if t == "mcts" or t == "mcts:mcts":
            return cls("mcts", "mcts")
        m = re.fullmatch(r"(bayes|random|none|eps(?:ilon)?([0-9]*\.?[0-9]+)):(lao|vi|mlo|wao)", t)
        if not m:
            raise ValueError(f"cannot parse method {text!r}")
        learning, eps, decision = m.group(1), m.group(2), m.group(3)
        if eps is not None:
            return cls("eps", decision, epsilon=float(eps))
        return cls(learning, decision)

    def __str__(self):
        if self.learning == "mcts":
            return "mcts"
        head = f"eps{self.epsilon:g}" if self.learning == "eps" else self.learning
        return f"{head}:{self.decision}"


# --- model learning alternatives

def _greedy_policy(state: LearnerState, env: Environment, gamma: float) -> Optional[Policy]:
    model = compile_model(state, env, gamma)
    if not model.actions(state.root) and not model.is_goal(state.root):
        return None
    return value_iteration(explicit_closure(model))


def epsilon_greedy_learn(state: LearnerState, env: Environment, config: LearnConfig, epsilon: float,
                         gamma: float = 0.98, max_sims: Optional[int] = None) -> tuple:
    """``config.I`` simulated trajectories from the root.

    Each step follows the greedy policy of the maximum-likelihood model with
    probability 1-epsilon and a uniformly random applicable operator otherwise
    (also whenever the greedy policy has nothing to offer). The greedy policy
    is recomputed before every trajectory.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    problem = state.problem
    for _ in range(config.I):
        if max_sims is not None and state.sims >= max_sims:
            break
        state.iteration += 1
        i = state.iteration
        rng = random.Random(derive_seed(state.root_seed, "eps", i))
        policy = _greedy_policy(state, env, gamma) if epsilon < 1.0 else None
        bbar = state.root
        h = state.pool.sample(bbar, derive_seed(state.root_seed, "eps-root", i))
        for j in range(config.horizon_cap):
            if max_sims is not None and state.sims >= max_sims:
                break
            if env.is_goal(bbar):
                break
            ops = problem.applicable_ops(bbar)
            if not ops:
                break
            op = policy.action.get(bbar) if policy is not None else None
            if rng.random() < epsilon or op is None:
                op = ops[rng.randrange(len(ops))]
            _, bbar, h = record_from(state, h, bbar, op, env, derive_seed(state.root_seed, "sim", i, j))
        state.log.append((i, 0, j + 1))
    return state, compile_model(state, env, gamma)


def random_learn(state, env, config, gamma: float = 0.98, max_sims: Optional[int] = None) -> tuple:
    return epsilon_greedy_learn(state, env, config, 1.0, gamma, max_sims)


class ContingentModel:
    """Every symbolic outcome of every applicable operator is equally likely."""

    def __init__(self, problem, initial: AbstractBelief, is_goal, gamma: float = 0.98):
        self.problem = problem
        self.initial = initial
        self._is_goal = is_goal
        self.gamma = gamma

    def is_goal(self, b) -> bool:
        return bool(self._is_goal(b))

    def actions(self, b) -> list:
        return [] if self.is_goal(b) else list(self.problem.applicable_ops(b))

    def transition(self, b, op):
        outs = op.outcomes()
        res: dict = {}
        for psi in outs:
            b2 = apply_outcome(b, op, psi)
            res[b2] = res.get(b2, 0.0) + 1.0 / len(outs)
        return list(res.items())


def contingent_decide(env: Environment, root: AbstractBelief, gamma: float = 0.98) -> Policy:
    return lao_star(ContingentModel(env.problem, root, env.is_goal, gamma))


# --- determinized decision rules on a learned model

def _cheapest_plan(model, root: AbstractBelief, edges) -> Plan:
    """Dijkstra over ``edges(b) -> [(op, psi, b2, cost)]`` to the nearest goal."""
    tie = itertools.count()
    dist = {root: 0.0}
    parent: dict = {root: None}
    heap = [(0.0, next(tie), root)]
    done = set()
    while heap:
        d, _, b = heapq.heappop(heap)
        if b in done:
            continue
        done.add(b)
        if model.is_goal(b):
            steps = []
            while parent[b] is not None:
                b1, op, psi, c = parent[b]
                steps.append(Step(b1, op, psi, b, c))
                b = b1
            steps.reverse()
            return Plan(tuple(steps), d)
        for op, psi, b2, c in edges(b):
            nd = d + c
            if b2 not in done and nd < dist.get(b2, math.inf):
                dist[b2] = nd
                parent[b2] = (b, op, psi, c)
                heapq.heappush(heap, (nd, next(tie), b2))
    raise NoPlanError(f"no plan to the goal from {root!r}")


def _model_edges(model, keep_mlo: bool):
    def edges(b):
        out = []
        for op in model.actions(b):
            row = model.transition(b, op)
            if not row:
                continue
            if keep_mlo:
                best = max(p for _, p in row)
                b2 = next(b2 for b2, p in row if p == best)
                out.append((op, outcome_bits(op, b2), b2, 1.0))
            else:
                for b2, p in row:
                    if p > 0:
                        out.append((op, outcome_bits(op, b2), b2, -math.log(p)))
        return out
    return edges


def mlo_decide(model, root: AbstractBelief) -> Plan:
    """Fewest-step plan keeping only each operator's most likely outcome."""
    return _cheapest_plan(model, root, _model_edges(model, keep_mlo=True))


def wao_decide(model, root: AbstractBelief) -> Plan:
    """Most probable open-loop plan: minimum total -log probability."""
    return _cheapest_plan(model, root, _model_edges(model, keep_mlo=False))


def plan_probability(model, plan: Plan) -> float:
    p = 1.0
    for s in plan.steps:
        p *= dict(model.transition(s.b1, s.op)).get(s.b2, 0.0)
    return p


# --- belief-space Monte Carlo tree search

class _Node:
    __slots__ = ("visits", "children")

    def __init__(self):
        self.visits = 0
        self.children: dict = {}  # op -> [visits, value_sum, {belief: _Node}]


def mcts_decide(env: Environment, b, c_ucb: float = math.sqrt(2.0), rollouts: int = 1000,
                depth: int = 20, seed: int = 0, gamma: float = 0.98, stats: Optional[dict] = None):
    """UCT over controller-level belief transitions; returns the most visited root operator."""
    if rollouts < 1:
        raise ValueError("rollouts must be at least 1")
    universe = env.problem.universe
    ops_at = {}

    def actions(h):
        bbar = env.abstract(h, universe)
        if env.is_goal(bbar):
            return bbar, None
        ops = ops_at.get(bbar)
        if ops is None:
            ops = ops_at[bbar] = list(env.problem.applicable_ops(bbar))
        return bbar, ops

    def rollout(h, d, rng):
        # value of h under the uniform random policy, truncated at the depth limit
        k = 0
        while True:
            _, ops = actions(h)
            if ops is None:
                return gamma ** k
            if not ops or d + k >= depth:
                return 0.0
            h, _ = env.simulate(h, ops[rng.randrange(len(ops))], rng.getrandbits(64))
            k += 1

    root = _Node()
    _, root_ops = actions(b)
    if not root_ops:
        return None
    for r in range(rollouts):
        rng = random.Random(derive_seed(seed, "rollout", r))
        node, h, d, path = root, b, 0, []
        ret = 0.0
        while True:
            _, ops = actions(h)
            if ops is None:
                ret = 1.0
                break
            if not ops or d >= depth:
                ret = 0.0
                break
            untried = [op for op in ops if op not in node.children]
            if untried:
                op = untried[0]
                node.children[op] = [0, 0.0, {}]
            else:
                logn = math.log(node.visits)
                op = max(ops, key=lambda o: node.children[o][1] / node.children[o][0]
                         + c_ucb * math.sqrt(logn / node.children[o][0]))
            edge = node.children[op]
            h, _ = env.simulate(h, op, rng.getrandbits(64))
            path.append((node, edge))
            d += 1
            child = edge[2].get(h)
            if child is None:
                edge[2][h] = _Node()
                ret = rollout(h, d, rng)
                break
            node = child
        # ret is the value at the leaf; discount it back up the path
        for node_k, edge_k in reversed(path):
            ret *= gamma
            node_k.visits += 1
            edge_k[0] += 1
            edge_k[1] += ret
    best = max(root_ops, key=lambda o: (root.children.get(o, [0])[0], -root_ops.index(o)))
    if stats is not None:
        stats["root_visits"] = root.visits
        stats["children"] = {o.name: v[0] for o, v in root.children.items()}
    return best


# --- closed-loop wiring for every method

def learner_for(spec: BaselineSpec):
    from .control import default_learner

    if spec.learning == "bayes":
        return default_learner
    if spec.learning in ("eps", "random"):
        eps = 1.0 if spec.learning == "random" else spec.epsilon

        def eps_learner(state, env, config, gamma):
            return epsilon_greedy_learn(state, env, config, eps, gamma)
        return eps_learner
    if spec.learning == "none":
        def none_learner(state, env, config, gamma):
            return state, ContingentModel(state.problem, state.root, env.is_goal, gamma)
        return none_learner
    raise ValueError(f"no learner for {spec}")


def decider_for(spec: BaselineSpec, env: Environment, gamma: float = 0.98):
    if spec.decision == "lao":
        return lambda model, bbar, b, seed: lao_star(model).action.get(bbar)
    if spec.decision == "vi":
        return lambda model, bbar, b, seed: value_iteration(explicit_closure(model)).action.get(bbar)
    if spec.decision in ("mlo", "wao"):
        rule = mlo_decide if spec.decision == "mlo" else wao_decide

        def decide(model, bbar, b, seed):
            plan = rule(model, bbar)
            return plan.steps[0].op if plan.steps else None
        return decide
    if spec.decision == "mcts":
        return lambda model, bbar, b, seed: mcts_decide(env, b, spec.c_ucb, spec.rollouts, spec.depth,
                                                         seed, gamma)
    raise ValueError(f"no decision rule for {spec}")


class _NoModel:
    """Stand-in model for methods that never consult one."""

    def __init__(self, problem):
        self.problem = problem
        self.initial = None

    def actions(self, b):
        return list(self.problem.applicable_ops(b))


def run_method(env: Environment, spec: BaselineSpec, config=None, seed: int = 0):
    """One closed-loop episode of ``spec`` in ``env``; returns an EpisodeLog."""
    from .control import ControlConfig, run_episode

    config = config or ControlConfig()
    if spec.learning == "mcts":
        def mcts_learner(state, env_, cfg, gamma):
            return state, _NoModel(state.problem)
        return run_episode(env, config, seed, learner=mcts_learner,
                           decider=decider_for(spec, env, config.gamma))
    return run_episode(env, config, seed, learner=learner_for(spec),
                       decider=decider_for(spec, env, config.gamma))


# --- open-loop WAO on a fully known explicit MDP (the grid reference line)

def wao_open_loop(mdp, start: int) -> tuple:
    """Most probable action sequence from ``start`` to a goal under the true model,
    executed blind. Returns (labels, exact discounted return)."""
    import numpy as np

    n = mdp.n
    rin = [[] for _ in range(n)]
    for s, acts in enumerate(mdp.actions):
        if mdp.goal[s]:
            continue
        for k, (_, row) in enumerate(acts):
            for t, p in row:
                if t != s and p > 0:
                    rin[t].append((s, k, -math.log(p)))
    h = [math.inf] * n
    nxt: dict = {}
    heap = [(0.0, s) for s in range(n) if mdp.goal[s]]
    for _, s in heap:
        h[s] = 0.0
    heapq.heapify(heap)
    while heap:
        d, v = heapq.heappop(heap)
        if d > h[v]:
            continue
        for u, k, c in rin[v]:
            if d + c < h[u] - 1e-15:
                h[u] = d + c
                nxt[u] = (k, v)
                heapq.heappush(heap, (d + c, u))
    if not math.isfinite(h[start]):
        return [], 0.0
    path_labels, s = [], start
    while not mdp.goal[s]:
        k, s2 = nxt[s]
        path_labels.append(mdp.actions[s][k][0])
        s = s2
    goal = np.asarray(mdp.goal, dtype=bool)
    dist = np.zeros(n)
    dist[start] = 1.0
    ret = 0.0
    for t, label in enumerate(path_labels):
        nd = np.zeros(n)
        for s in np.flatnonzero(dist):
            row = next((r for a, r in mdp.actions[s] if a == label), None)
            if row is None:
                continue  # the label is not available here: the blind plan stalls
            for t2, p in row:
                nd[t2] += dist[s] * p
        ret += mdp.gamma ** (t + 1) * float(nd[goal].sum())
        nd[goal] = 0.0
        dist = nd
    return path_labels, ret
