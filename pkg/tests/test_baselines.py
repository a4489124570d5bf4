import math
import random

import numpy as np
import pytest

from beltamp.baselines import (BaselineSpec, ContingentModel, contingent_decide,
                               epsilon_greedy_learn, mcts_decide, mlo_decide, plan_probability,
                               random_learn, run_method, wao_decide, wao_open_loop)
from beltamp.control import ControlConfig
from beltamp.envs import (GridEnv, GridWorld, HiddenObjectEnv, SymbolicEnv, bandit_env, chain_env,
                          risky_shortcut_env)
from beltamp.learner import LearnConfig, LearnerState, NoPlanError, dump_table
from beltamp.props import AbstractBelief, prop
from beltamp.solver import lao_star, value_iteration


@pytest.mark.parametrize("text", ["bayes:lao", "eps0.1:vi", "random:vi", "none:lao", "bayes:wao",
                                  "bayes:mlo", "mcts", "eps0.05:lao"])
def test_spec_round_trip(text):
    assert str(BaselineSpec.parse(text)) == text


@pytest.mark.parametrize("text", ["bayes", "mcts:lao", "eps2:lao", "greedy:lao"])
def test_spec_rejects(text):
    with pytest.raises(ValueError):
        BaselineSpec.parse(text)


def test_epsilon_one_is_random_sampling():
    def run(fn):
        env = HiddenObjectEnv()
        state = LearnerState.start(env, seed=5)
        fn(state, env)
        return dump_table(state.table)
    cfg = LearnConfig(I=20)
    a = run(lambda s, e: epsilon_greedy_learn(s, e, cfg, 1.0))
    b = run(lambda s, e: random_learn(s, e, cfg))
    assert a == b


def _two_corridor_world():
    # short route through a risky cell beats the safe-looking long way round
    pd, pr = np.zeros((3, 2)), np.zeros((3, 2))
    pd[1, 0] = 0.2
    pd[:, 1] = 0.1
    return GridWorld(3, 2, pd, pr, start=(0, 0), goal=(2, 0))


def test_pure_greedy_locks_in_on_deceptive_grid():
    from beltamp.harness.experiments import normalized_reward

    def misses(eps):
        n = 0
        for seed in range(20):
            env = GridEnv(_two_corridor_world())
            state = LearnerState.start(env, seed=seed)
            _, model = epsilon_greedy_learn(state, env, LearnConfig(I=200), eps)
            n += normalized_reward(env, model) < 0.999
        return n
    stuck = misses(0.0)
    assert stuck > 10
    assert misses(0.3) < stuck


def B(name):
    return AbstractBelief([prop(name)])


class Model:
    """Explicit compiled-model stand-in; state names become one-proposition beliefs."""

    def __init__(self, rows, goal, initial="s", gamma=0.98):
        self.rows = {B(s): {op: [(B(t), p) for t, p in r] for op, r in acts.items()}
                     for s, acts in rows.items()}
        self.goal = {B(g) for g in goal}
        self.initial, self.gamma = B(initial), gamma

    def is_goal(self, b):
        return b in self.goal

    def actions(self, b):
        return [] if b in self.goal else sorted(self.rows.get(b, {}))

    def transition(self, b, op):
        return self.rows[b][op]


class Op:
    ueff = (prop("X"),)

    def __init__(self, name):
        self.name = name

    def __lt__(self, other):
        return self.name < other.name

    def __repr__(self):
        return self.name


def test_wao_prefers_two_likely_steps():
    a, b1, b2 = Op("a"), Op("b1"), Op("b2")
    m = Model({"s": {a: [("g", 0.5), ("x", 0.5)], b1: [("m", 0.9), ("x", 0.1)]},
               "m": {b2: [("g", 0.9), ("x", 0.1)]}}, {"g"})
    plan = wao_decide(m, B("s"))
    assert [s.op.name for s in plan.steps] == ["b1", "b2"]
    assert plan.cost == pytest.approx(-2 * math.log(0.9))
    assert plan.cost < -math.log(0.5)
    assert plan_probability(m, plan) == pytest.approx(0.81)
    assert [s.op.name for s in mlo_decide(m, B("s")).steps] == ["a"]


def test_mlo_ignores_risk_and_loses():
    env = risky_shortcut_env(0.7, 0.99)
    probs = {"dash": [("G", 0.7), ("B", 0.3)], "walk": [("M", 1.0)], "finish": [("G", 0.99), ("B", 0.01)]}
    dash, walk, finish = Op("dash"), Op("walk"), Op("finish")
    m = Model({"s": {dash: probs["dash"], walk: probs["walk"]}, "M": {finish: probs["finish"]}}, {"G"})
    assert [s.op.name for s in mlo_decide(m, B("s")).steps] == ["dash"]
    assert lao_star(m).action[B("s")] is walk
    assert wao_decide(m, B("s")).steps[0].op is walk
    cfg = ControlConfig(LearnConfig(I=40, K=3, S=6))
    mlo = np.mean([run_method(env, BaselineSpec("bayes", "mlo"), cfg, s).ret for s in range(20)])
    lao = np.mean([run_method(env, BaselineSpec("bayes", "lao"), cfg, s).ret for s in range(20)])
    assert mlo < lao


def test_wao_is_most_probable_plan():
    rng = random.Random(3)
    for _ in range(30):
        states = [f"n{k}" for k in range(5)] + ["g"]
        rows = {}
        for s in states[:-1]:
            rows[s] = {}
            for k in range(rng.randrange(1, 3)):
                ts = rng.sample(states, 2)
                p = rng.uniform(0.05, 0.95)
                rows[s][Op(f"{s}.{k}")] = [(ts[0], p), (ts[1], 1 - p)]
        m = Model(rows, {"g"}, initial="n0")
        best = 0.0
        for n in range(1, 6):
            # brute force over step sequences of (operator, outcome)
            def walk(b, depth, prob, seen):
                nonlocal best
                if b == B("g"):
                    best = max(best, prob)
                    return
                if depth == 0:
                    return
                for op in m.actions(b):
                    for b2, p in m.transition(b, op):
                        if b2 not in seen:
                            walk(b2, depth - 1, prob * p, seen | {b2})
            walk(B("n0"), n, 1.0, {B("n0")})
        try:
            plan = wao_decide(m, B("n0"))
        except NoPlanError:
            assert best == 0.0
            continue
        assert plan_probability(m, plan) == pytest.approx(best, rel=1e-9)


def test_contingent_model_is_uniform():
    env = SymbolicEnv("(:predicates (A) (B)) (:action t :parameters () :ueffects (and (A) (B)))"
                      " (:reward (A))")
    m = ContingentModel(env.problem, env.initial_belief(), env.is_goal)
    row = m.transition(env.initial_belief(), env.problem.operator("t()"))
    assert len(row) == 4 and all(p == 0.25 for _, p in row)
    pol = contingent_decide(env, env.initial_belief())
    assert pol.action[env.initial_belief()].name == "t()"


def test_mcts_examples():
    env = chain_env(1)
    assert mcts_decide(env, env.initial_belief(), rollouts=5).name == "step0()"
    stats = {}
    env = bandit_env((0.9, 0.1))
    op = mcts_decide(env, env.initial_belief(), rollouts=10_000, seed=1, stats=stats)
    assert op.name == "pull(a0)"
    assert stats["root_visits"] == 10_000
    assert sum(stats["children"].values()) == 10_000
    assert mcts_decide(env, env.initial_belief(), rollouts=200, seed=4) == \
        mcts_decide(env, env.initial_belief(), rollouts=200, seed=4)
    with pytest.raises(ValueError):
        mcts_decide(env, env.initial_belief(), rollouts=0)


def test_wao_open_loop_on_known_grids():
    w, h = 4, 3
    det = GridWorld(w, h, np.zeros((w, h)), np.zeros((w, h)))
    mdp = GridEnv(det).true_mdp
    labels, ret = wao_open_loop(mdp, 0)
    assert len(labels) == 5 and ret == pytest.approx(0.98 ** 5)
    assert ret == pytest.approx(value_iteration(mdp).value[(0, 0)])
    noisy = GridWorld(w, h, np.full((w, h), 0.05), np.full((w, h), 0.2))
    mdp = GridEnv(noisy).true_mdp
    _, ret = wao_open_loop(mdp, 0)
    assert 0 < ret < value_iteration(mdp).value[(0, 0)]
