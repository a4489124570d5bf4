"""Bayes-optimistic model learning over abstract beliefs.

Counts are kept per (operator, assignment of its uncertainty conditions); beliefs
that agree on those conditions share one row, which is what lets a handful of
simulations generalise across many abstract beliefs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .bandit import BetaPrior, beta_entropy
from .belief import BeliefPool, EmptyPoolError, Environment, derive_seed
from .props import AbstractBelief, Proposition
from .symbolic.grounding import GroundOperator, Problem, applicable, apply_outcome, outcome_bits


class InapplicableOperatorError(ValueError):
    pass


class NoPlanError(RuntimeError):
    pass


class OutcomeTable:
    """Count maps N and D, plus conditions added from controller feedback."""

    def __init__(self, prior: BetaPrior = BetaPrior()):
        self.prior = prior
        self.N: dict = {}  # (op, psi_pre) -> int
        self.D: dict = {}  # (op, psi_pre) -> {psi_eff: int}
        self.extra_ucond: dict = {}  # op -> tuple of Propositions
        self._rows: dict = {}  # op -> set of psi_pre

    def ucond(self, op: GroundOperator) -> tuple:
        extra = self.extra_ucond.get(op)
        return op.ucond + extra if extra else op.ucond

    def psi_pre(self, b: AbstractBelief, op: GroundOperator) -> tuple:
        t = b.true
        return tuple(1 if p in t else 0 for p in self.ucond(op))

    def record(self, op, psi_pre: tuple, psi_eff: tuple, n: int = 1):
        key = (op, psi_pre)
        self.N[key] = self.N.get(key, 0) + n
        row = self.D.setdefault(key, {})
        row[psi_eff] = row.get(psi_eff, 0) + n
        self._rows.setdefault(op, set()).add(psi_pre)

    def visits(self, op, psi_pre: tuple) -> int:
        return self.N.get((op, psi_pre), 0)

    def count(self, op, psi_pre: tuple, psi_eff: tuple) -> int:
        row = self.D.get((op, psi_pre))
        return row.get(psi_eff, 0) if row else 0

    def beta_params(self, op, psi_pre, psi_eff) -> tuple:
        n = self.visits(op, psi_pre)
        s = self.count(op, psi_pre, psi_eff)
        return self.prior.alpha + s, self.prior.beta + n - s

    def total_visits(self, op) -> int:
        return sum(self.N[(op, r)] for r in self._rows.get(op, ()))

    def grow_ucond(self, op, props: Iterable[Proposition]) -> bool:
        """Add conditions to ``op``; on growth its rows are dropped. Returns True if it grew."""
        have = set(self.ucond(op))
        new = tuple(sorted(p for p in set(props) if p not in have))
        if not new:
            return False
        self.extra_ucond[op] = self.extra_ucond.get(op, ()) + new
        for r in self._rows.pop(op, ()):
            del self.N[(op, r)]
            del self.D[(op, r)]
        return True

    def copy(self) -> "OutcomeTable":
        t = OutcomeTable(self.prior)
        t.N = dict(self.N)
        t.D = {k: dict(v) for k, v in self.D.items()}
        t.extra_ucond = dict(self.extra_ucond)
        t._rows = {k: set(v) for k, v in self._rows.items()}
        return t

    def check(self):
        for key, n in self.N.items():
            if sum(self.D[key].values()) != n:
                raise AssertionError(f"row {key} is not conserved")


@dataclass
class LearnConfig:
    I: int = 10
    K: int = 5
    S: int = 10
    alpha: float = 1.0
    beta: float = 1.0
    widen_k: float = 3.0
    widen_alpha: float = 0.5
    horizon_cap: int = 50

    def __post_init__(self):
        if min(self.I, self.K, self.S) < 1:
            raise ValueError("I, K and S must be at least 1")
        if not 0 < self.widen_alpha < 1:
            raise ValueError("widen_alpha must lie in (0, 1)")

    @property
    def prior(self) -> BetaPrior:
        return BetaPrior(self.alpha, self.beta)


@dataclass
class LearnerState:
    problem: Problem
    table: OutcomeTable
    pool: BeliefPool
    root: AbstractBelief
    root_seed: int = 0
    iteration: int = 0
    sims: int = 0
    widen_k: float = 3.0
    widen_alpha: float = 0.5
    log: list = field(default_factory=list)

    @classmethod
    def start(cls, env: Environment, config: LearnConfig = LearnConfig(), seed: int = 0) -> "LearnerState":
        problem = env.problem
        pool = BeliefPool()
        b0 = env.initial_belief()
        root = pool.insert(env, b0, problem.universe)
        return cls(problem, OutcomeTable(config.prior), pool, root, seed,
                   widen_k=config.widen_k, widen_alpha=config.widen_alpha)

    def reroot(self, env: Environment, b) -> AbstractBelief:
        """Make the concrete belief ``b`` the root of later planning."""
        self.root = self.pool.insert(env, b, self.problem.universe)
        return self.root


def ucond_assignment(b: AbstractBelief, op: GroundOperator, table: Optional[OutcomeTable] = None) -> tuple:
    if table is not None:
        return table.psi_pre(b, op)
    return tuple(1 if p in b.true else 0 for p in op.ucond)


def record_simulation(state: LearnerState, b1: AbstractBelief, op: GroundOperator,
                      env: Environment, seed: int) -> tuple:
    """Simulate ``op`` from a pooled belief under ``b1`` and count the outcome.

    Returns (psi_eff, abstract successor).
    """
    if b1 not in state.pool:
        raise EmptyPoolError(f"no concrete belief stored for {b1!r}")
    h1 = state.pool.sample(b1, derive_seed(seed, "pool"))
    psi_eff, b2, _ = record_from(state, h1, b1, op, env, seed)
    return psi_eff, b2


def record_from(state: LearnerState, h1, b1: AbstractBelief, op: GroundOperator,
                env: Environment, seed: int) -> tuple:
    """Like ``record_simulation`` but from the given concrete belief; also returns it."""
    if not applicable(op, b1):
        raise InapplicableOperatorError(f"{op.name} is not applicable in {b1!r}")
    h2, feedback = env.simulate(h1, op, derive_seed(seed, "sim"))
    b2 = state.pool.insert(env, h2, state.problem.universe)
    if feedback:
        state.table.grow_ucond(op, feedback)
    psi_eff = outcome_bits(op, b2)
    state.table.record(op, state.table.psi_pre(b1, op), psi_eff)
    state.sims += 1
    return psi_eff, b2, h2


def transition_entropy(state: LearnerState, b1, op, b2) -> float:
    t = state.table
    psi_pre = t.psi_pre(b1, op)
    return beta_entropy(*t.beta_params(op, psi_pre, outcome_bits(op, b2)))


def select_transitions(state: LearnerState, plans: Sequence, budget: int) -> list:
    """Up to ``budget`` plan transitions with the most uncertain outcome estimates.

    ``plans`` holds sequences of (b1, op, b2) triples (or objects with a
    ``triples()`` method). Ties go to the earliest triple.
    """
    flat = []
    for plan in plans:
        flat.extend(plan.triples() if hasattr(plan, "triples") else plan)
    scored = [
        (-transition_entropy(state, b1, op, b2), pos, (b1, op, b2))
        for pos, (b1, op, b2) in enumerate(flat)
        if b1 in state.pool
    ]
    scored.sort(key=lambda x: (x[0], x[1]))
    return [t for _, _, t in scored[:budget]]


def _stream_params(problem: Problem, schema) -> list:
    return [t for _, t in schema.params if t in problem.streams]


def progressive_widen(state: LearnerState, env: Environment, root_seed: Optional[int] = None) -> list:
    """Grow continuous-parameter pools sublinearly in visit counts. Returns new operators."""
    problem = state.problem
    root_seed = state.root_seed if root_seed is None else root_seed
    added = []
    for schema in problem.domain.schemata:
        streams = _stream_params(problem, schema)
        if not streams:
            continue
        while True:
            instances = [op for op in problem.operators if op.schema is schema]
            visits = sum(state.table.total_visits(op) for op in instances)
            target = max(1.0, state.widen_k * visits ** state.widen_alpha)
            if len(instances) >= target:
                break
            before = len(instances)
            for t in dict.fromkeys(streams):
                n = len(problem.pool(t)) if t in problem.pools else 0
                value = env.sample_parameter(t, derive_seed(root_seed, "widen", t, n))
                added.extend(problem.add_parameter(t, value))
            if sum(1 for op in problem.operators if op.schema is schema) == before:
                break
    return added


class SparseMdp:
    """The compiled abstract MDP: only explored (belief, operator) pairs are offered."""

    def __init__(self, problem: Problem, table: OutcomeTable, initial: AbstractBelief,
                 is_goal: Callable[[AbstractBelief], bool], gamma: float = 0.98):
        self.problem = problem
        self.table = table
        self.initial = initial
        self._is_goal = is_goal
        self.gamma = gamma
        self._cache: dict = {}

    def is_goal(self, b: AbstractBelief) -> bool:
        return bool(self._is_goal(b))

    def explored(self, b: AbstractBelief, op) -> bool:
        return self.table.visits(op, self.table.psi_pre(b, op)) > 0

    def actions(self, b: AbstractBelief) -> list:
        if self.is_goal(b):
            return []
        return [op for op in self.problem.applicable_ops(b) if self.explored(b, op)]

    def transition(self, b: AbstractBelief, op):
        """[(b', probability)] or None when the pair is unexplored."""
        key = (b, op)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        psi_pre = self.table.psi_pre(b, op)
        n = self.table.visits(op, psi_pre)
        if n == 0:
            return None
        out: dict = {}
        for psi, d in sorted(self.table.D[(op, psi_pre)].items()):
            b2 = apply_outcome(b, op, psi)
            out[b2] = out.get(b2, 0.0) + d / n
        res = list(out.items())
        self._cache[key] = res
        return res


def compile_model(state: LearnerState, env: Optional[Environment] = None, gamma: float = 0.98) -> SparseMdp:
    goal = env.is_goal if env is not None else state.problem.goal_holds
    return SparseMdp(state.problem, state.table.copy(), state.root, goal, gamma)


def learn(state: LearnerState, env: Environment, config: LearnConfig, planner=None,
          gamma: float = 0.98, max_sims: Optional[int] = None) -> tuple:
    """Run the learning loop ``config.I`` times from ``state.root``; return (state, model)."""
    from .detplanner import plan_topk

    planner = planner or plan_topk
    goal = env.is_goal
    for _ in range(config.I):
        if max_sims is not None and state.sims >= max_sims:
            break
        state.iteration += 1
        i = state.iteration
        progressive_widen(state, env)
        plans = planner(state.root, goal, state.problem, state.table, i, config.K, config.horizon_cap)
        if not plans:
            raise NoPlanError(f"no plan reaches the goal from {state.root!r}")
        chosen = select_transitions(state, plans, config.S)
        for j, (b1, op, _b2) in enumerate(chosen):
            if max_sims is not None and state.sims >= max_sims:
                break
            record_simulation(state, b1, op, env, derive_seed(state.root_seed, "sim", i, j))
        state.log.append((i, len(plans), len(chosen)))
    return state, compile_model(state, env, gamma)


# --- text dump of the learned counts

def _bits(t: tuple) -> str:
    return "".join(map(str, t)) or "-"


def _unbits(s: str) -> tuple:
    return () if s == "-" else tuple(int(c) for c in s)


def _bind(op) -> str:
    return ",".join(f"{v}={a}" for v, a in op.bindings) or "-"


def dump_table(table: OutcomeTable) -> str:
    lines = ["kind\toperator\tbindings\tpre\teff\tcount"]
    for op in sorted(table.extra_ucond):
        props = " ".join(repr(p) for p in table.extra_ucond[op])
        lines.append(f"U\t{op.schema.name}\t{_bind(op)}\t{props}\t-\t0")
    rows = []
    for (op, pre), row in table.D.items():
        for eff, c in row.items():
            rows.append((op.schema.name, op.args, pre, eff, c, op))
    rows.sort(key=lambda r: r[:4])
    for name, _, pre, eff, c, op in rows:
        lines.append(f"D\t{name}\t{_bind(op)}\t{_bits(pre)}\t{_bits(eff)}\t{c}")
    return "\n".join(lines) + "\n"


def load_table(text: str, problem: Problem, prior: BetaPrior = BetaPrior()) -> OutcomeTable:
    from .props import prop

    table = OutcomeTable(prior)
    for line in text.splitlines()[1:]:
        if not line.strip():
            continue
        kind, name, bind, pre, eff, count = line.split("\t")
        args = () if bind == "-" else tuple(kv.split("=", 1)[1] for kv in bind.split(","))
        op = problem.operator(f"{name}({','.join(args)})")
        if kind == "U":
            table.extra_ucond[op] = tuple(prop(p) for p in pre.replace(") (", ")|(").split("|"))
        else:
            table.record(op, _unbits(pre), _unbits(eff), int(count))
    return table
