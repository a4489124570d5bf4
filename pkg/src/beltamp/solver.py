"""Value iteration on explicit MDPs and LAO* on compiled sparse models.

Reward is 1 on entering a goal state, which then terminates; every other
transition earns 0, so values lie in [0, 1].
"""

from __future__ import annotations

import math
import random
import statistics
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional, Sequence

import numpy as np
from scipy import sparse

from .belief import Environment, derive_seed

INNER_TOL = 1e-10


class NoPolicyError(RuntimeError):
    pass


@dataclass
class ExplicitMdp:
    """States by index; ``actions[s]`` is a list of (label, [(next, prob), ...])."""

    states: list
    actions: list
    goal: list
    gamma: float = 0.98

    def __post_init__(self):
        for s, acts in enumerate(self.actions):
            for label, row in acts:
                total = sum(p for _, p in row)
                if abs(total - 1.0) > 1e-12:
                    raise ValueError(f"row ({s}, {label}) sums to {total}")

    @property
    def n(self) -> int:
        return len(self.states)

    def matrices(self):
        """(P, owner, starts): stacked state-action rows, owning state, row offset per state."""
        rows, cols, vals, owner = [], [], [], []
        starts = np.zeros(self.n + 1, dtype=np.int64)
        r = 0
        for s, acts in enumerate(self.actions):
            starts[s] = r
            if self.goal[s]:
                continue
            for _, row in acts:
                for t, p in row:
                    rows.append(r)
                    cols.append(t)
                    vals.append(p)
                owner.append(s)
                r += 1
        starts[self.n] = r
        P = sparse.csr_matrix((vals, (rows, cols)), shape=(r, self.n))
        return P, np.asarray(owner, dtype=np.int64), starts


@dataclass
class Policy:
    action: dict = field(default_factory=dict)  # state -> action label
    value: dict = field(default_factory=dict)  # state -> value
    residual: float = 0.0
    iterations: int = 0

    def __call__(self, state):
        return self.action.get(state)


def _backup(P, owner, starts, goal_mask, gamma, V, fixed=None):
    Q = gamma * (P @ V)
    new = np.zeros_like(V)
    has = starts[1:] > starts[:-1]
    if Q.size:
        idx = starts[:-1][has]
        new[has] = np.maximum.reduceat(Q, idx)
    new[goal_mask] = 1.0
    if fixed is not None:
        new[fixed] = V[fixed]
    return new, Q


def _greedy(Q, starts, s, tie=1e-12):
    lo, hi = starts[s], starts[s + 1]
    if hi <= lo:
        return None
    q = Q[lo:hi]
    best = q.max()
    return int(np.flatnonzero(q >= best - tie)[0])


def _solve(P, owner, starts, goal_mask, gamma, V0, tol, fixed=None, max_iter=1_000_000):
    V = V0.copy()
    it = 0
    while True:
        it += 1
        V2, _ = _backup(P, owner, starts, goal_mask, gamma, V, fixed)
        res = float(np.max(np.abs(V2 - V))) if V.size else 0.0
        V = V2
        if res <= tol or it >= max_iter:
            break
    _, Q = _backup(P, owner, starts, goal_mask, gamma, V, fixed)
    return V, Q, res, it


def value_iteration(mdp: ExplicitMdp, tol: float = INNER_TOL) -> Policy:
    P, owner, starts = mdp.matrices()
    goal = np.asarray(mdp.goal, dtype=bool)
    V, Q, res, it = _solve(P, owner, starts, goal, mdp.gamma, np.zeros(mdp.n), tol)
    pol = Policy(residual=res, iterations=it)
    for s in range(mdp.n):
        pol.value[mdp.states[s]] = float(V[s])
        if goal[s]:
            continue
        k = _greedy(Q, starts, s)
        if k is not None:
            pol.action[mdp.states[s]] = mdp.actions[s][k][0]
    return pol


def policy_value(mdp: ExplicitMdp, policy: Callable[[Hashable], Optional[Hashable]]) -> np.ndarray:
    """Exact discounted value of a stationary policy (missing actions earn 0)."""
    n = mdp.n
    rows, cols, vals = [], [], []
    for s in range(n):
        if mdp.goal[s]:
            continue
        a = policy(mdp.states[s])
        if a is None:
            continue
        for label, row in mdp.actions[s]:
            if label == a:
                for t, p in row:
                    rows.append(s)
                    cols.append(t)
                    vals.append(p)
                break
    T = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    goal = np.asarray(mdp.goal, dtype=bool)
    # V = r + gamma T V with V fixed to 1 on goal states
    A = sparse.identity(n, format="csr") - mdp.gamma * T
    A = A.tolil()
    b = np.zeros(n)
    for s in np.flatnonzero(goal):
        A.rows[s] = [s]
        A.data[s] = [1.0]
        b[s] = 1.0
    from scipy.sparse.linalg import spsolve

    return np.asarray(spsolve(A.tocsc(), b)).reshape(n)


def explicit_closure(model, limit: int = 1_000_000) -> ExplicitMdp:
    """Expand every explored action reachable from ``model.initial``."""
    states = [model.initial]
    index = {model.initial: 0}
    actions, goal = [], []
    queue = deque([0])
    while queue:
        s = queue.popleft()
        while len(actions) <= s:
            actions.append([])
            goal.append(False)
        b = states[s]
        goal[s] = model.is_goal(b)
        if goal[s]:
            continue
        acts = []
        for op in model.actions(b):
            row = []
            for b2, p in model.transition(b, op):
                t = index.get(b2)
                if t is None:
                    if len(states) >= limit:
                        raise RuntimeError("closure exceeds the state limit")
                    t = len(states)
                    index[b2] = t
                    states.append(b2)
                    queue.append(t)
                row.append((t, p))
            acts.append((op, row))
        actions[s] = acts
    while len(actions) < len(states):
        actions.append([])
        goal.append(model.is_goal(states[len(goal)]))
    return ExplicitMdp(states, actions, goal, model.gamma)


def hop_distance(mdp: ExplicitMdp) -> np.ndarray:
    """Fewest transitions from each state to a goal (inf if none)."""
    rin = [[] for _ in range(mdp.n)]
    for s, acts in enumerate(mdp.actions):
        for _, row in acts:
            for t, p in row:
                if p > 0:
                    rin[t].append(s)
    d = np.full(mdp.n, np.inf)
    q = deque()
    for s in range(mdp.n):
        if mdp.goal[s]:
            d[s] = 0
            q.append(s)
    while q:
        t = q.popleft()
        for s in rin[t]:
            if d[s] == np.inf:
                d[s] = d[t] + 1
                q.append(s)
    return d


def lao_star(model, tol: float = INNER_TOL) -> Policy:
    """LAO* from ``model.initial`` with the optimistic heuristic gamma**hops."""
    full = explicit_closure(model)
    if not full.goal[0] and not full.actions[0]:
        raise NoPolicyError(f"no explored operator at {model.initial!r}")
    gamma = full.gamma
    d = hop_distance(full)
    h = np.where(np.isfinite(d), gamma ** np.where(np.isfinite(d), d, 0), 0.0)
    goal = np.asarray(full.goal, dtype=bool)
    h[goal] = 1.0
    P, owner, starts = full.matrices()
    expanded = np.zeros(full.n, dtype=bool)
    V = h.copy()
    Q = None
    outer = 0
    while True:
        outer += 1
        # states reached by the current greedy policy inside the expanded set
        _, Q = _backup(P, owner, starts, goal, gamma, V)
        fringe, seen, stack = [], {0}, [0]
        while stack:
            s = stack.pop()
            if goal[s]:
                continue
            if not expanded[s]:
                fringe.append(s)
                continue
            k = _greedy(Q, starts, s)
            if k is None:
                continue
            for t in P.indices[P.indptr[starts[s] + k]:P.indptr[starts[s] + k + 1]]:
                if t not in seen:
                    seen.add(int(t))
                    stack.append(int(t))
        if not fringe and outer > 1:
            break
        expanded[fringe] = True
        V, Q, res, _ = _solve(P, owner, starts, goal, gamma, V, tol, fixed=~expanded)
    pol = Policy(residual=res, iterations=outer)
    for s in sorted(seen):
        pol.value[full.states[s]] = float(V[s])
        if goal[s] or not expanded[s]:
            continue
        k = _greedy(Q, starts, s)
        if k is not None:
            pol.action[full.states[s]] = full.actions[s][k][0]
    pol.value[full.states[0]] = float(V[0])
    return pol


def dump_policy(policy: Policy, universe: Sequence) -> str:
    lines = []
    for b in sorted(policy.action, key=lambda b: b.bits(universe)):
        op = policy.action[b]
        lines.append(f"{b.bits(universe)}\t{getattr(op, 'name', op)}\t{policy.value.get(b, 0.0):.12f}")
    return "\n".join(lines) + ("\n" if lines else "")


def evaluate_policy(env: Environment, provider: Callable, episodes: int, gamma: float = 0.98,
                    seed: int = 0, step_limit: int = 100) -> tuple:
    """Mean and standard error of the discounted return of ``provider`` in ``env``.

    ``provider(abstract_belief, concrete_belief, rng)`` returns an operator or None.
    """
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    returns = []
    universe = env.problem.universe
    for ep in range(episodes):
        rng = random.Random(derive_seed(seed, "episode", ep))
        b = env.initial_belief()
        state = env.sample_state(b, rng)
        ret = 0.0
        for t in range(step_limit + 1):
            bbar = env.abstract(b, universe)
            if env.is_goal(bbar):
                ret = gamma ** t
                break
            if t == step_limit:
                break
            op = provider(bbar, b, rng)
            if op is None:
                break
            state, b, _ = env.step(state, b, op, rng)
        returns.append(ret)
    return mean_se(returns)


def mean_se(xs: Sequence[float]) -> tuple:
    n = len(xs)
    m = float(statistics.mean(xs))
    if n < 2:
        return m, 0.0
    return m, statistics.stdev(xs) / math.sqrt(n)
