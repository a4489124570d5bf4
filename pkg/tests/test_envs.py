import random
from dataclasses import replace
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beltamp.envs import (DEAD, GridEnv, GridWorld, HandoverEnv, HiddenObjectEnv, HiddenObjectWorld,
                          OccupancyGrid, collision_probability, dump_grid, grid_step, grid_true_mdp,
                          load_grid, look_update, occupancy_decay, optimal_value, random_grid,
                          straight_path)
from beltamp.envs.toy import GraspEnv
from beltamp.props import prop


def flat(w, h, pd=0.0, pr=0.0):
    return GridWorld(w, h, np.full((w, h), pd), np.full((w, h), pr))


def test_grid_step_examples():
    assert grid_step(flat(3, 3), (0, 0), "E", 1) == (1, 0)
    assert grid_step(flat(3, 3), (0, 0), "W", 1) == (0, 0)
    assert all(grid_step(flat(3, 3, pd=1.0), (1, 1), "N", s) == DEAD for s in range(50))
    with pytest.raises(ValueError):
        grid_step(flat(2, 2), (0, 0), "X", 0)


def test_corner_slip_frequencies():
    w = flat(3, 3, pr=1.0)
    c = Counter(grid_step(w, (0, 0), "N", s) for s in range(10_000))
    assert set(c) == {(1, 0), (0, 1)}
    assert all(abs(v / 10_000 - 0.5) <= 0.02 for v in c.values())


def test_true_mdp_small_cases():
    mdp = grid_true_mdp(flat(1, 2))
    assert mdp.states == [(0, 0), (0, 1), DEAD] and mdp.goal == [False, True, False]
    assert dict(mdp.actions[0])["N"] == [(1, 1.0)]
    assert dict(mdp.actions[0])["S"] == [(0, 1.0)]
    assert mdp.actions[-1] == []


def test_true_mdp_matches_sampling():
    w = random_grid(random.Random(4), 4, 4, 0.3)
    mdp = grid_true_mdp(w)
    rng = random.Random(0)
    for s, d in [(0, "N"), (5, "E"), (10, "W")]:
        cell = mdp.states[s]
        c = Counter(grid_step(w, cell, d, rng) for _ in range(100_000))
        exact = {mdp.states[t]: p for t, p in dict(mdp.actions[s])[d]}
        tv = 0.5 * sum(abs(c[k] / 100_000 - exact.get(k, 0.0)) for k in set(c) | set(exact))
        assert tv <= 0.01


def test_grid_validation_and_text_round_trip():
    with pytest.raises(ValueError):
        flat(2, 2, pd=0.6, pr=0.6)
    w = random_grid(random.Random(1), 5, 3)
    again = load_grid(dump_grid(w))
    assert dump_grid(again) == dump_grid(w)
    assert np.array_equal(again.p_death, w.p_death) and again.goal == (4, 2)
    with pytest.raises(ValueError):
        load_grid("2 2\n0.1,0.1\n")


def test_grid_env_abstraction():
    env = GridEnv(flat(3, 3))
    assert len(env.problem.operators) == 8 * 4
    b = env.abstract((1, 2), env.problem.universe)
    assert env.belief_of(b) == (1, 2)
    assert env.is_goal(env.abstract((2, 2), ()))
    op = env.operator((0, 0), "E")
    assert env.step((0, 0), (0, 0), op, random.Random(0))[0] == (1, 0)
    # a controller bound to another cell leaves the agent in place
    assert env.step((1, 1), (1, 1), op, random.Random(0))[0] == (1, 1)


def test_look_update_examples():
    u = (1 / 3, 1 / 3, 1 / 3)
    assert look_update(u, 1, True, 0.0) == (0.0, 1.0, 0.0)
    post = look_update(u, 1, False, 0.1)
    assert post[1] == pytest.approx((0.1 / 3) / (0.1 / 3 + 2 / 3), abs=1e-12)
    assert post[1] == pytest.approx(0.0476, abs=1e-4)
    assert sum(post) == pytest.approx(1.0)


def test_hidden_object_transitions_are_distributions():
    env = HiddenObjectEnv()
    b = env.initial_belief()
    bbar = env.abstract(b, env.problem.universe)
    for op in env.problem.applicable_ops(bbar):
        assert sum(p for _, p in env.outcomes(b, op)) == pytest.approx(1.0)


def test_looking_first_beats_grabbing_blind():
    env = HiddenObjectEnv()
    best, first = optimal_value(env)
    blind = 0.98 * max(env.world.weights)
    assert best > blind + 0.1
    assert first.schema.name != "pick-target"
    even = HiddenObjectEnv(HiddenObjectWorld((0.5, 0.5), 0.0))
    assert not even.evaluate(even.initial_belief(), prop("(BVPose target)"))


def test_hidden_object_step_matches_outcomes():
    env = HiddenObjectEnv(HiddenObjectWorld(look_noise=0.2))
    b = env.initial_belief()
    op = env.problem.operator("look(b0)")
    rng = random.Random(3)
    c = Counter()
    for _ in range(20_000):
        state = env.sample_state(b, rng)
        c[env.step(state, b, op, rng)[1]] += 1
    for b2, p in env.outcomes(b, op):
        assert abs(c[b2] / 20_000 - p) < 0.015


def test_occupancy_examples():
    g = OccupancyGrid(np.ones((2, 2)), gamma_decay=0.9, C=1.0)
    assert occupancy_decay(g, 2).P[0, 0, 0] == pytest.approx(0.81, abs=1e-12)
    assert np.array_equal(occupancy_decay(g, 0).P, g.P)
    h = occupancy_decay(g, 2, observed=[(1, 1)])
    assert h.P[1, 1, 0] == 1.0 and h.P[0, 1, 0] == pytest.approx(0.81)
    with pytest.raises(ValueError):
        occupancy_decay(g, -1)
    assert collision_probability([np.array([[0.5]])], [[(0, 0)]]) == 0.5
    P = np.array([[0.5, 0.5]])
    assert collision_probability([P], [[(0, 0), (0, 1)]]) == 0.75
    assert collision_probability([P, np.array([[1.0, 0.0]])], [[(0, 1)], [(0, 0)]]) == 1.0


@settings(max_examples=200)
@given(st.floats(0.01, 1.0), st.floats(0, 5), st.floats(0, 5), st.floats(0, 3))
def test_decay_is_additive(gam, t1, t2, C):
    g = OccupancyGrid(np.random.default_rng(0).random((3, 2, 2)), gamma_decay=gam, C=C)
    a = occupancy_decay(occupancy_decay(g, t1), t2).P
    b = occupancy_decay(g, t1 + t2).P
    assert np.allclose(a, b, rtol=1e-12, atol=1e-300)


def test_straight_path():
    assert straight_path((0, 0), (3, 0)) == [(0, 0), (1, 0), (2, 0), (3, 0)]
    assert straight_path((1, 1), (1, 1)) == [(1, 1)]


def test_handover_waiting_lowers_risk():
    env = HandoverEnv()
    b = env.initial_belief()
    r0 = env.risk(b, "direct")
    assert env.risk(replace(b, waits=3), "direct") < r0
    assert env.risk(b, "around") < r0
    for op in env.problem.applicable_ops(env.abstract(b, env.problem.universe)):
        assert sum(p for _, p in env.outcomes(b, op)) == pytest.approx(1.0)


def test_grasp_env_widening_stream():
    env = GraspEnv(seed=3)
    assert env.sample_parameter("grasp", 12) == "g000012"
    assert 0 <= env.quality("g000012") < 1
    assert env.quality("g000012") == GraspEnv(seed=3).quality("g000012")
